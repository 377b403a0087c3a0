// SPDX-License-Identifier: Apache-2.0
//
// bfisim — beamforming-feedback channel reconstruction and spoofing simulator

#include "bfisim/recon_closed.hpp"

#include <cmath>

namespace bfisim {

ClosedFormResult reconstruct_single_antenna(const BfiReport& report, double p_tx, double p_n)
{
    if (report.streams != 1)
        throw std::invalid_argument("reconstruct_single_antenna: report must carry a single stream");
    if (report.asnr_db.empty()) throw std::invalid_argument("reconstruct_single_antenna: missing ASNR");

    const double sigma_bar = asnr_to_sigma_bar(report.asnr_db[0], p_tx, p_n);
    const int m = report.tx_antennas;
    const int k_count = report.subcarriers;

    ClosedFormResult out;
    out.subcarriers = k_count;
    out.tx_antennas = m;
    out.amplitudes.resize(k_count, m);
    out.relative_phase.assign(static_cast<size_t>(k_count), Eigen::MatrixXd::Zero(m, m));

    for (int k = 0; k < k_count; ++k) {
        const MatC vt = report_v_tilde(report, k); // M x 1
        for (int u = 0; u < m; ++u) out.amplitudes(k, u) = std::abs(vt(u, 0)) * sigma_bar;
        auto& dp = out.relative_phase[static_cast<size_t>(k)];
        for (int m1 = 0; m1 < m; ++m1)
            for (int m2 = 0; m2 < m; ++m2)
                dp(m1, m2) = std::arg(vt(m2, 0)) - std::arg(vt(m1, 0)); // theta_m1 - theta_m2 = beta_m2 - beta_m1
    }
    return out;
}

CsiTensor to_csi_tensor(const ClosedFormResult& result, PhasePolicy policy)
{
    CsiTensor csi(result.subcarriers, 1, result.tx_antennas);
    for (int k = 0; k < result.subcarriers; ++k) {
        for (int u = 0; u < result.tx_antennas; ++u) {
            const double b = result.amplitudes(k, u);
            if (policy == PhasePolicy::zero_phase) {
                csi[k](0, u) = cxd(b, 0.0);
            } else {
                // Anchor the last AP antenna at phase 0; theta_u = theta_u - theta_last.
                const double theta = result.relative_phase[static_cast<size_t>(k)](u, result.tx_antennas - 1);
                csi[k](0, u) = std::polar(b, theta);
            }
        }
    }
    return csi;
}

} // namespace bfisim
