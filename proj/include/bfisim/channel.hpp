// SPDX-License-Identifier: Apache-2.0
//
// bfisim — beamforming-feedback channel reconstruction and spoofing simulator

#pragma once

#include "bfisim/rng.hpp"
#include "bfisim/types.hpp"

namespace bfisim {

// Response of a uniform linear array: element q is
// exp(-j 2*pi*f*spacing*q*sin(angle) / c), element 0 is 1.
VecC steering_vector(double freq, double angle, int count, double spacing);

// Geometric multipath synthesis: per subcarrier k,
//   H_k = sum_p gain_p * exp(-j 2*pi*f_k*delay_p) * a(f_k, aoa_p) d(f_k, aod_p)^H
// with a of length N (STA) and d of length M (AP), so H_k is N x M.
CsiTensor synthesize_csi(const std::vector<PathParams>& paths, const ArrayConfig& config);

// Complex Gaussian perturbation at the given SNR (dB relative to the tensor's
// mean element power). Draw order is fixed (k, then row-major elements).
CsiTensor add_measurement_noise(const CsiTensor& csi, double snr_db, Rng& rng);

// Bounds for random scenario generation. Path 1 is the LoS path: its delay is
// dist/c and every other path has a strictly larger delay and smaller |gain|.
struct ScenarioConfig {
    ArrayConfig array;
    int path_count_min = 1;
    int path_count_max = 3;
    double dist_min = 1.5;           // AP-STA distance, meters
    double dist_max = 6.0;
    double los_gain = 1.0;           // |gain| of the LoS path
    double nlos_gain_ratio_min = 0.10; // NLoS |gain| relative to LoS
    double nlos_gain_ratio_max = 0.25;
    double excess_delay_min = 3e-9;  // NLoS delay beyond LoS, seconds
    double excess_delay_max = 15e-9;
    double angle_max = kPi / 3.0;    // AoA/AoD drawn uniformly in [-angle_max, angle_max]

    void validate() const;
};

struct Scenario {
    std::vector<PathParams> paths;
    ArrayConfig array;
    double distance = 0.0; // AP-STA distance in meters, delay of path 1 * c
};

// Deterministic for a given seed.
Scenario sample_random_scenario(uint64_t rng_seed, const ScenarioConfig& config);
Scenario sample_random_scenario(Rng& rng, const ScenarioConfig& config);

} // namespace bfisim
