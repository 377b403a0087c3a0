// SPDX-License-Identifier: Apache-2.0
//
// bfisim — beamforming-feedback channel reconstruction and spoofing simulator

#pragma once

#include "bfisim/types.hpp"

#include <cstdint>

namespace bfisim {

// Quantizer setup for the compressed feedback angles and the per-stream SNR
// field. Codebooks are the uniform midpoint grids of the 802.11ac/ax single
// user feedback: phi index q -> q*pi/2^(bphi-1) + pi/2^bphi over [0, 2pi),
// psi index q -> q*pi/2^(bpsi+1) + pi/2^(bpsi+2) over [0, pi/2].
struct QuantConfig {
    int psi_bits = 4;
    int phi_bits = 6;
    double asnr_step_db = 0.25;
    double asnr_min_db = -10.0;
    double asnr_max_db = 53.75;

    void validate() const
    {
        if (psi_bits < 1 || phi_bits < 1) throw std::invalid_argument("quant: bit depths must be >= 1");
        if (asnr_step_db <= 0.0 || asnr_max_db <= asnr_min_db) throw std::invalid_argument("quant: bad ASNR range");
    }
};

// Raw (unquantized) angle set for one subcarrier, in the canonical cascade
// order: for each column i = 1..min(Ns, M-1), first the M-i phases phi_{l,i}
// (l = i..M-1), then the M-i rotations psi_{l,i} (l = i+1..M).
struct GivensAngles {
    std::vector<std::vector<double>> phi; // phi[i-1][l-i],   l = i..M-1
    std::vector<std::vector<double>> psi; // psi[i-1][l-i-1], l = i+1..M

    int column_count() const { return static_cast<int>(phi.size()); }
};

struct QuantizedAngles {
    std::vector<std::vector<int>> phi;
    std::vector<std::vector<int>> psi;
};

// Thin SVD truncated to the leading N_s columns, singular values descending.
struct SvdResult {
    MatC u;        // N x N_s
    VecD sigma;    // N_s, descending
    MatC v;        // M x N_s
};

// The adversary's observation: quantized angle indices per subcarrier plus
// the per-stream average SNR, nothing else.
struct BfiReport {
    int tx_antennas = 0;  // M
    int streams = 0;      // N_s
    int subcarriers = 0;  // K
    QuantConfig quant;
    std::vector<QuantizedAngles> angles; // one entry per subcarrier
    std::vector<double> asnr_db;         // N_s entries, quantized
    bool sigma_floor_hit = false;        // a singular value below the 1e-12 floor was clamped
};

SvdResult compute_svd(const MatC& h, int streams);

// Multiplies each column by exp(-j arg(last-row element)); the last row becomes
// real non-negative. Entries below 1e-12 in magnitude are treated as phase 0.
MatC phase_adjust(const MatC& v);

// Inverse of the Givens cascade: requires orthonormal columns and a real
// non-negative last row (what phase_adjust produces from an SVD basis).
GivensAngles extract_givens_angles(const MatC& v_tilde);

// Forward cascade of Eq.-style D and G^T factors applied to I_{M x Ns}.
MatC reconstruct_v_tilde(const GivensAngles& angles, int tx_antennas, int streams);

QuantizedAngles quantize_angles(const GivensAngles& raw, const QuantConfig& quant);
GivensAngles dequantize_angles(const QuantizedAngles& idx, const QuantConfig& quant);

double dequantize_phi(int index, int phi_bits);
double dequantize_psi(int index, int psi_bits);

// Per-stream average SNR in dB over subcarriers, clamped and rounded to the
// configured step. sigma is K x N_s (column i = stream i across subcarriers).
std::vector<double> compute_asnr(const Eigen::MatrixXd& sigma, double p_tx, double p_n,
                                 const QuantConfig& quant, bool* floor_hit = nullptr);

// Geometric-mean singular value implied by a reported ASNR.
double asnr_to_sigma_bar(double asnr_db, double p_tx, double p_n);
std::vector<double> asnr_to_sigma_bar(const std::vector<double>& asnr_db, double p_tx, double p_n);

// Full station-side computation: per subcarrier SVD -> keep N_s columns of V
// -> phase adjust -> extract -> quantize, plus pooled ASNR.
BfiReport encode_bfi(const CsiTensor& csi, const QuantConfig& quant, double p_tx, double p_n,
                     ExecMode mode = ExecMode::parallel);

// Dequantized feedback matrix for one subcarrier of a report.
MatC report_v_tilde(const BfiReport& report, int subcarrier);

} // namespace bfisim
