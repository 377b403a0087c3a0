// SPDX-License-Identifier: Apache-2.0
//
// bfisim — beamforming-feedback channel reconstruction and spoofing simulator

#pragma once

#include "bfisim/bfi_codec.hpp"
#include "bfisim/types.hpp"

namespace bfisim {

// Closed-form amplitude and relative-phase recovery for single-antenna
// stations: b[k][m] = |V~[m,1]| * sigma_bar_1 and the pairwise phase
// differences across AP antennas.
struct ClosedFormResult {
    int subcarriers = 0;
    int tx_antennas = 0;
    Eigen::MatrixXd amplitudes;   // K x M
    std::vector<Eigen::MatrixXd> relative_phase; // per k: M x M, [m1][m2] = theta_m1 - theta_m2
};

enum class PhasePolicy { zero_phase, relative_anchored_last };

// Requires a report produced with N = 1 (so N_s = 1).
ClosedFormResult reconstruct_single_antenna(const BfiReport& report, double p_tx, double p_n);

// Assembles the attack payload tensor (1 x M per subcarrier) under the chosen
// phase policy.
CsiTensor to_csi_tensor(const ClosedFormResult& result, PhasePolicy policy);

} // namespace bfisim
