// SPDX-License-Identifier: Apache-2.0
//
// bfisim — beamforming-feedback channel reconstruction and spoofing simulator

#pragma once

#include "bfisim/recon_mle.hpp"

namespace bfisim {

// Analytic per-element amplitude envelope implied by the report: for each
// (k, v, u), h_max is the phase-aligned sum of the stream terms maximized
// over the unknown uplink angles, h_min the reverse-triangle floor minimized
// over the same grid.
struct AmplitudeBounds {
    int subcarriers = 0;
    int rx = 0;
    int tx = 0;
    std::vector<Eigen::MatrixXd> h_min; // per k: N x M
    std::vector<Eigen::MatrixXd> h_max;
};

struct TofContext {
    double dist_ap_sta = 0.0; // meters
    double bandwidth = 0.0;   // Hz

    double t_real() const { return dist_ap_sta / kSpeedOfLight; }
    double delta_t() const { return 1.0 / bandwidth; }
};

struct BoundSearchConfig {
    int phi_points = 0;        // 0 = codebook resolution (2^phi_bits)
    int psi_points = 0;        // 0 = codebook resolution + endpoint (2^psi_bits + 1)
    double phi_range = kTwoPi; // the standard reading; [0, pi] selectable for the narrow one
    bool pool_subcarriers = false; // one interval per (v, u) across k

    // Grids are uniform with psi endpoints included so the zero-amplitude and
    // full-amplitude corners stay reachable; doubling (n-1) nests the grid.
    std::vector<double> phi_grid(const QuantConfig& quant) const;
    std::vector<double> psi_grid(const QuantConfig& quant) const;
};

AmplitudeBounds amplitude_bounds(const BfiReport& report, const ArrayConfig& config,
                                 const BoundSearchConfig& search, double p_tx, double p_n,
                                 ExecMode mode = ExecMode::parallel);

// Pass iff every element of |candidate.csi| lies inside
// [h_min*(1-slack), h_max*(1+slack)]; intervals are closed.
bool theory_filter(const ReconCandidate& candidate, const AmplitudeBounds& bounds, double slack);

// Pass iff t_real - dt <= t_rec <= t_real + dt (closed interval).
bool tof_filter(const ReconCandidate& candidate, const TofContext& ctx);

// Conjunction of both filters, order preserved among survivors; verdicts are
// recorded on every candidate for diagnostics.
std::vector<ReconCandidate> filter_candidates(std::vector<ReconCandidate> candidates,
                                              const AmplitudeBounds& bounds, const TofContext& ctx,
                                              double slack = 0.02);

} // namespace bfisim
