// SPDX-License-Identifier: Apache-2.0
//
// bfisim — beamforming-feedback channel reconstruction and spoofing simulator
//
// Times the OpenMP kernels against their serial reference paths and checks
// the outputs agree bit for bit.

#include "bfisim/attack_apps.hpp"
#include "bfisim/constraints.hpp"
#include "bfisim/experiment.hpp"

#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace bfisim;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool reports_equal(const BfiReport& a, const BfiReport& b)
{
    if (a.asnr_db != b.asnr_db) return false;
    for (size_t k = 0; k < a.angles.size(); ++k)
        if (a.angles[k].phi != b.angles[k].phi || a.angles[k].psi != b.angles[k].psi) return false;
    return true;
}

bool bounds_equal(const AmplitudeBounds& a, const AmplitudeBounds& b)
{
    for (int k = 0; k < a.subcarriers; ++k)
        if (a.h_min[static_cast<size_t>(k)] != b.h_min[static_cast<size_t>(k)] ||
            a.h_max[static_cast<size_t>(k)] != b.h_max[static_cast<size_t>(k)])
            return false;
    return true;
}

} // namespace

int main()
{
#ifdef _OPENMP
    std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP; both columns run serial code\n");
#endif
    std::printf("%-22s %12s %12s %9s %8s\n", "kernel", "serial (s)", "parallel (s)", "speedup", "match");

    ScenarioConfig family;
    family.array.tx_antennas = 4;
    family.array.rx_antennas = 2;
    family.array.bandwidth = 80e6; // K = 256
    family.path_count_min = 2;
    family.path_count_max = 3;

    // encode_bfi over 40 packets
    {
        std::vector<CsiTensor> packets;
        for (uint64_t i = 0; i < 40; ++i) {
            const Scenario sc = sample_random_scenario(i, family);
            packets.push_back(synthesize_csi(sc.paths, sc.array));
        }
        QuantConfig quant;
        std::vector<BfiReport> serial_out, parallel_out;
        auto t0 = Clock::now();
        for (const auto& p : packets) serial_out.push_back(encode_bfi(p, quant, 1.0, 1e-3, ExecMode::serial));
        const double ts = seconds_since(t0);
        t0 = Clock::now();
        for (const auto& p : packets) parallel_out.push_back(encode_bfi(p, quant, 1.0, 1e-3, ExecMode::parallel));
        const double tp = seconds_since(t0);
        bool match = true;
        for (size_t i = 0; i < packets.size(); ++i) match &= reports_equal(serial_out[i], parallel_out[i]);
        std::printf("%-22s %12.4f %12.4f %8.2fx %8s\n", "encode_bfi", ts, tp, ts / tp, match ? "yes" : "NO");
    }

    // amplitude_bounds over 40 reports
    {
        QuantConfig quant;
        BoundSearchConfig bcfg;
        std::vector<BfiReport> reports;
        for (uint64_t i = 0; i < 40; ++i) {
            const Scenario sc = sample_random_scenario(i, family);
            reports.push_back(encode_bfi(synthesize_csi(sc.paths, sc.array), quant, 1.0, 1e-3));
        }
        auto t0 = Clock::now();
        std::vector<AmplitudeBounds> serial_out;
        for (const auto& r : reports)
            serial_out.push_back(amplitude_bounds(r, family.array, bcfg, 1.0, 1e-3, ExecMode::serial));
        const double ts = seconds_since(t0);
        t0 = Clock::now();
        std::vector<AmplitudeBounds> parallel_out;
        for (const auto& r : reports)
            parallel_out.push_back(amplitude_bounds(r, family.array, bcfg, 1.0, 1e-3, ExecMode::parallel));
        const double tp = seconds_since(t0);
        bool match = true;
        for (size_t i = 0; i < reports.size(); ++i) match &= bounds_equal(serial_out[i], parallel_out[i]);
        std::printf("%-22s %12.4f %12.4f %8.2fx %8s\n", "amplitude_bounds", ts, tp, ts / tp,
                    match ? "yes" : "NO");
    }

    // multi_start_search, one report, restarts in parallel
    {
        ScenarioConfig mle_family = family;
        mle_family.array.tx_antennas = 2;
        mle_family.array.bandwidth = 20e6;
        const Scenario sc = sample_random_scenario(7, mle_family);
        QuantConfig quant;
        const BfiReport report = encode_bfi(synthesize_csi(sc.paths, sc.array), quant, 1.0, 1e-3);
        SearchConfig search;
        search.restarts = 6;
        search.path_counts = {1, 2};
        search.dist_ap_sta = sc.distance;

        search.mode = ExecMode::serial;
        auto t0 = Clock::now();
        const auto serial_out = multi_start_search(report, sc.array, search, 99, 1.0, 1e-3);
        const double ts = seconds_since(t0);
        search.mode = ExecMode::parallel;
        t0 = Clock::now();
        const auto parallel_out = multi_start_search(report, sc.array, search, 99, 1.0, 1e-3);
        const double tp = seconds_since(t0);
        bool match = serial_out.size() == parallel_out.size();
        for (size_t i = 0; match && i < serial_out.size(); ++i)
            match &= serial_out[i].loss == parallel_out[i].loss;
        std::printf("%-22s %12.4f %12.4f %8.2fx %8s\n", "multi_start_search", ts, tp, ts / tp,
                    match ? "yes" : "NO");
    }

    // full attack trials
    {
        ExperimentConfig cfg;
        cfg.family = family;
        cfg.family.array.tx_antennas = 2;
        cfg.family.array.bandwidth = 20e6;
        cfg.trials = 4;
        cfg.pipe.search.restarts = 4;
        cfg.pipe.search.path_counts = {1, 2};
        cfg.q_values = {5};

        cfg.mode = ExecMode::serial;
        auto t0 = Clock::now();
        const auto serial_out = run_attack_experiment(cfg);
        const double ts = seconds_since(t0);
        cfg.mode = ExecMode::parallel;
        t0 = Clock::now();
        const auto parallel_out = run_attack_experiment(cfg);
        const double tp = seconds_since(t0);
        bool match = serial_out.rows.size() == parallel_out.rows.size();
        for (size_t i = 0; match && i < serial_out.rows.size(); ++i)
            match &= to_csv_line(serial_out.rows[i]) == to_csv_line(parallel_out.rows[i]);
        std::printf("%-22s %12.4f %12.4f %8.2fx %8s\n", "attack_trials", ts, tp, ts / tp,
                    match ? "yes" : "NO");
    }
    return 0;
}
