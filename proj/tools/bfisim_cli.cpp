// SPDX-License-Identifier: Apache-2.0
//
// bfisim — beamforming-feedback channel reconstruction and spoofing simulator
//
// Subcommands: simulate, encode, reconstruct, attack, report.
// Exit codes: 0 success, 1 config error, 2 I/O error, 3 internal invariant violation.

#include "bfisim/experiment.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using namespace bfisim;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    uint64_t seed = 0;
    bool seed_set = false;
    int trials = 0;
    int threads = 0;
    bool serial = false;
};

std::string default_out_dir(const std::string& flag_value)
{
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("BFISIM_OUT_DIR")) return env;
    return ".";
}

ExperimentConfig resolve_config(const CommonArgs& args)
{
    ExperimentConfig cfg;
    if (!args.config_path.empty()) cfg = load_experiment_config(args.config_path);
    if (args.seed_set) cfg.seed = args.seed;
    if (args.trials > 0) cfg.trials = args.trials;
    if (args.serial) cfg.mode = ExecMode::serial;
    return cfg;
}

void apply_threads(int threads)
{
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

void add_common(CLI::App* cmd, CommonArgs& args)
{
    cmd->add_option("--config", args.config_path, "experiment config JSON");
    cmd->add_option("--out-dir", args.out_dir, "output directory (env BFISIM_OUT_DIR)");
    cmd->add_option("--seed", args.seed, "root seed override")->each([&](const std::string&) {
        args.seed_set = true;
    });
    cmd->add_option("--trials", args.trials, "trial count override");
    cmd->add_option("--threads", args.threads, "worker threads (never affects results)");
    cmd->add_flag("--serial", args.serial, "run every kernel on the serial reference path");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"beamforming-feedback channel reconstruction and spoofing simulator"};
    app.require_subcommand(1);

    CommonArgs sim_args, enc_args, rec_args, atk_args, rep_args;

    auto* sim = app.add_subcommand("simulate", "generate ground-truth CSI and BFI traces");
    add_common(sim, sim_args);

    auto* enc = app.add_subcommand("encode", "station-side encoding of a CSI trace");
    add_common(enc, enc_args);
    std::string enc_in;
    enc->add_option("--csi-trace", enc_in, "input CSI trace (JSONL)")->required();

    auto* rec = app.add_subcommand("reconstruct", "reconstruct CSI candidates from a BFI trace");
    add_common(rec, rec_args);
    std::string rec_in, rec_dump;
    double rec_dist = 0.0;
    rec->add_option("--bfi-trace", rec_in, "input BFI trace (JSONL)")->required();
    rec->add_option("--dump-candidates", rec_dump, "candidate dump path (JSONL)");
    rec->add_option("--tof-dist", rec_dist, "assumed AP-STA distance in meters");

    auto* atk = app.add_subcommand("attack", "run attack trials and emit the results CSV");
    add_common(atk, atk_args);
    std::vector<int> atk_q;
    bool atk_ablation = false;
    bool atk_baseline = false;
    double atk_slack = -1.0;
    double atk_phi_range = 0.0;
    double atk_tof_dist = 0.0;
    std::string atk_dump;
    atk->add_option("--q", atk_q, "attempt budgets, e.g. --q 1 5 20");
    atk->add_flag("--ablation", atk_ablation, "emit mle_only / dual_constraints / full arms");
    atk->add_flag("--random-baseline", atk_baseline, "add the random-attack arm");
    atk->add_option("--filter-slack", atk_slack, "theory filter slack (fraction)");
    atk->add_option("--phi-range", atk_phi_range, "bound-search phi range in radians");
    atk->add_option("--tof-dist", atk_tof_dist, "fix the AP-STA distance in meters");
    atk->add_option("--dump-candidates", atk_dump, "per-trial candidate dump (JSONL)");

    auto* rep = app.add_subcommand("report", "aggregate results CSVs into per-axis summaries");
    add_common(rep, rep_args);
    std::vector<std::string> rep_inputs;
    rep->add_option("--results", rep_inputs, "input results CSVs")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            apply_threads(sim_args.threads);
            const ExperimentConfig cfg = resolve_config(sim_args);
            const std::string out = default_out_dir(sim_args.out_dir);
            fs::create_directories(out);
            const SimulatedTraces traces = simulate_traces(cfg);
            write_csi_trace((fs::path(out) / "csi_trace.jsonl").string(), traces.csi);
            write_bfi_trace((fs::path(out) / "bfi_trace.jsonl").string(), traces.bfi);
            std::cout << "wrote " << traces.csi.size() << " records to " << out << "\n";
        } else if (enc->parsed()) {
            apply_threads(enc_args.threads);
            const ExperimentConfig cfg = resolve_config(enc_args);
            const std::string out = default_out_dir(enc_args.out_dir);
            fs::create_directories(out);
            const auto csi = read_csi_trace(enc_in);
            const auto bfi = encode_trace(csi, cfg.pipe.quant, cfg.pipe.p_tx, cfg.pipe.p_n, "");
            write_bfi_trace((fs::path(out) / "bfi_trace.jsonl").string(), bfi);
            std::cout << "encoded " << bfi.size() << " packets\n";
        } else if (rec->parsed()) {
            apply_threads(rec_args.threads);
            ExperimentConfig cfg = resolve_config(rec_args);
            if (rec_dist > 0.0) {
                cfg.family.dist_min = rec_dist;
                cfg.family.dist_max = rec_dist;
            }
            const std::string out = default_out_dir(rec_args.out_dir);
            fs::create_directories(out);
            const auto bfi = read_bfi_trace(rec_in);
            const auto cands = reconstruct_trace(bfi, cfg);
            const std::string dump =
                rec_dump.empty() ? (fs::path(out) / "candidates.jsonl").string() : rec_dump;
            write_candidate_dump(dump, cands);
            size_t total = 0;
            for (const auto& c : cands) total += c.size();
            std::cout << "reconstructed " << total << " candidates over " << bfi.size() << " packets\n";
        } else if (atk->parsed()) {
            apply_threads(atk_args.threads);
            ExperimentConfig cfg = resolve_config(atk_args);
            if (!atk_q.empty()) cfg.q_values = atk_q;
            if (atk_ablation) cfg.ablation = true;
            if (atk_baseline) cfg.with_random_baseline = true;
            if (atk_slack >= 0.0) cfg.pipe.filter_slack = atk_slack;
            if (atk_phi_range > 0.0) cfg.pipe.bounds.phi_range = atk_phi_range;
            if (atk_tof_dist > 0.0) {
                cfg.family.dist_min = atk_tof_dist;
                cfg.family.dist_max = atk_tof_dist;
            }
            if (cfg.family.array.rx_antennas == 1) {
                for (int q : cfg.q_values)
                    if (q > 1) {
                        std::cerr << "warning: single-antenna scenario, attempts coerced to 1\n";
                        break;
                    }
            }
            const std::string out = default_out_dir(atk_args.out_dir);
            fs::create_directories(out);
            const ExperimentOutput result = run_attack_experiment(cfg);
            write_results_csv((fs::path(out) / "results.csv").string(), result.rows);
            if (!atk_dump.empty()) {
                // Re-derive candidate pools for the dump so the attack loop stays lean.
                const SimulatedTraces traces = simulate_traces(cfg);
                write_candidate_dump(atk_dump, reconstruct_trace(traces.bfi, cfg));
            }
            for (const auto& row : result.rows)
                std::cout << row.scenario << " " << row.application << " q=" << row.q << " asr="
                          << row.asr_percent << "%\n";
        } else if (rep->parsed()) {
            const std::string out = default_out_dir(rep_args.out_dir);
            std::vector<std::vector<ResultRow>> sets;
            for (const auto& path : rep_inputs) sets.push_back(read_results_csv(path));
            const ReportSummary summary = summarize_results(sets);
            write_report(out, summary);
            std::cout << "aggregated " << summary.rows.size() << " rows into " << out << "\n";
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
