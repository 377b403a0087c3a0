// SPDX-License-Identifier: Apache-2.0
//
// bfisim — beamforming-feedback channel reconstruction and spoofing simulator

#pragma once

#include "bfisim/bfi_codec.hpp"
#include "bfisim/channel.hpp"
#include "bfisim/types.hpp"

#include <cstdint>

namespace bfisim {

// The estimation unknowns: multipath parameters plus the synthetic uplink
// feedback angles (a Givens cascade for the N x N_s station-side matrix).
struct OmegaParams {
    std::vector<PathParams> paths;
    GivensAngles ul_angles;

    double los_delay() const;
};

struct ReconCandidate {
    OmegaParams omega;
    double loss = 0.0;
    CsiTensor csi;
    double los_delay = 0.0;
    int restart_index = 0;
    int descent_cycles = 0;
    int assumed_paths = 0;
    bool theory_pass = true; // filled by the constraint stage
    bool tof_pass = true;
};

// 1-D search sets for the six coordinate groups. Every sweep takes the grid
// argmin while holding the other coordinates fixed; the incumbent value always
// competes, so the loss never increases.
struct ParamGrids {
    std::vector<double> gain_mag;
    std::vector<double> gain_phase;
    std::vector<double> aoa;
    std::vector<double> aod;
    std::vector<double> delay;
    std::vector<double> ul_phi;
    std::vector<double> ul_psi;
    int max_cycles = 30;
    double rel_tol = 1e-4;
};

struct SearchConfig {
    int restarts = 20;                    // independent multi-start seeds per assumed path count
    std::vector<int> path_counts = {1, 2, 3};
    int coarse_probes = 48;               // random coarse-grid evaluations per restart
    int angle_coarse = 64;                // AoA/AoD coarse grid over (-pi/2, pi/2)
    int angle_fine = 512;                 // AoA/AoD fine grid
    int gain_mag_points = 33;             // log-spaced over [gain_lo, gain_hi]
    double gain_lo = 0.01;
    double gain_hi = 2.0;
    int gain_phase_points = 32;           // over [0, 2pi)
    double delay_max_factor = 4.0;        // delay grid spans [0, factor * dist / c]
    int delay_fine_div = 8;               // fine delay step = (1/B) / div
    int zoom_stages = 2;                  // local re-descents with 8x tighter grids
    int max_cycles = 30;
    double rel_tol = 1e-4;
    ExecMode mode = ExecMode::parallel;   // restarts are independent; results identical either way

    // Assumed AP-STA distance (meters); the delay grid and the LoS-window
    // probes center on it. Must be set per scenario.
    double dist_ap_sta = 3.0;
};

struct GridEvalCount {
    std::uint64_t per_cycle = 0; // coordinate-descent evaluations per full cycle
    double exhaustive = 0.0;     // product-form count of the naive search
};

// Eq.-level objective pieces -------------------------------------------------

// T = V~_UL(omega.ul_angles)^T * H_k(omega) * V~_DL for one subcarrier.
MatC build_T(const OmegaParams& omega, const MatC& v_tilde_dl, const ArrayConfig& config, double freq);

// Loss contribution of one T matrix against target singular values.
double loss_from_T(const MatC& t, const std::vector<double>& sigma_bar);

// Precomputed view of one report: dequantized feedback matrices and the
// sigma targets implied by the ASNR field.
class MleProblem {
  public:
    MleProblem(const BfiReport& report, const ArrayConfig& config, double p_tx, double p_n);

    double loss(const OmegaParams& omega) const;
    const std::vector<double>& sigma_bar() const { return sigma_bar_; }
    const ArrayConfig& config() const { return config_; }
    const MatC& v_tilde_dl(int k) const { return vdl_[static_cast<size_t>(k)]; }
    int subcarriers() const { return static_cast<int>(vdl_.size()); }
    int streams() const { return streams_; }

  private:
    ArrayConfig config_;
    std::vector<MatC> vdl_;
    std::vector<double> sigma_bar_;
    int streams_ = 0;
};

struct DescentResult {
    OmegaParams omega;
    double loss = 0.0;
    int cycles = 0;
    std::vector<double> loss_trace; // loss after each full cycle, non-increasing
};

DescentResult coordinate_descent(const OmegaParams& omega0, const MleProblem& problem,
                                 const ParamGrids& grids);

// Coarse-grid probing, local descent per restart, dedup and ascending-loss
// ordering. Deterministic for a fixed seed regardless of ExecMode.
std::vector<ReconCandidate> multi_start_search(const BfiReport& report, const ArrayConfig& config,
                                               const SearchConfig& search, uint64_t rng_seed,
                                               double p_tx, double p_n);

// Per-cycle and exhaustive grid-evaluation counts for budget reporting.
// g_alpha..g_psi are per-scalar grid sizes; n_phi_ul / n_psi_ul are the number
// of uplink angle scalars of each kind (counted per angle).
GridEvalCount complexity_estimate(int paths, std::uint64_t g_alpha, std::uint64_t g_chi,
                                  std::uint64_t g_gamma, std::uint64_t g_t, std::uint64_t g_phi,
                                  std::uint64_t g_psi, int n_phi_ul = 1, int n_psi_ul = 1);

// Default grids realized from a SearchConfig for a given report/config.
ParamGrids make_fine_grids(const SearchConfig& search, const ArrayConfig& config, const QuantConfig& quant);

} // namespace bfisim
