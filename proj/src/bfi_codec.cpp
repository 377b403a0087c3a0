// SPDX-License-Identifier: Apache-2.0
//
// bfisim — beamforming-feedback channel reconstruction and spoofing simulator

#include "bfisim/bfi_codec.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace bfisim {

namespace {

constexpr double kZeroMag = 1e-12;

double wrap_two_pi(double x)
{
    x = std::fmod(x, kTwoPi);
    if (x < 0.0) x += kTwoPi;
    return x;
}

} // namespace

SvdResult compute_svd(const MatC& h, int streams)
{
    if (!h.allFinite()) throw std::invalid_argument("compute_svd: non-finite input");
    if (h.rows() < 1 || h.cols() < 1) throw std::invalid_argument("compute_svd: empty matrix");
    const int ns = streams > 0 ? streams : static_cast<int>(std::min(h.rows(), h.cols()));
    if (ns > std::min(h.rows(), h.cols())) throw std::invalid_argument("compute_svd: streams exceed min(M, N)");

    Eigen::JacobiSVD<MatC> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SvdResult r;
    r.u = svd.matrixU().leftCols(ns);
    r.v = svd.matrixV().leftCols(ns);
    r.sigma = svd.singularValues().head(ns);
    return r;
}

MatC phase_adjust(const MatC& v)
{
    const Eigen::Index m = v.rows();
    MatC out = v;
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
        const cxd last = v(m - 1, c);
        if (std::abs(last) < kZeroMag) continue; // phase treated as 0
        out.col(c) *= std::polar(1.0, -std::arg(last));
    }
    return out;
}

GivensAngles extract_givens_angles(const MatC& v_tilde)
{
    const int m = static_cast<int>(v_tilde.rows());
    const int ns = static_cast<int>(v_tilde.cols());
    for (int c = 0; c < ns; ++c) {
        const double norm = v_tilde.col(c).norm();
        if (std::abs(norm - 1.0) > 1e-6)
            throw std::invalid_argument("extract_givens_angles: columns are not orthonormal");
    }

    MatC w = v_tilde;
    GivensAngles out;
    const int i_max = std::min(ns, m - 1);
    out.phi.resize(static_cast<size_t>(i_max));
    out.psi.resize(static_cast<size_t>(i_max));

    for (int i = 1; i <= i_max; ++i) {
        auto& phis = out.phi[static_cast<size_t>(i - 1)];
        for (int l = i; l <= m - 1; ++l) {
            const cxd e = w(l - 1, i - 1);
            const double phi = std::abs(e) < kZeroMag ? 0.0 : wrap_two_pi(std::arg(e));
            phis.push_back(phi);
            w.row(l - 1) *= std::polar(1.0, -phi);
        }
        auto& psis = out.psi[static_cast<size_t>(i - 1)];
        for (int l = i + 1; l <= m; ++l) {
            const double x = w(i - 1, i - 1).real();
            const double y = w(l - 1, i - 1).real();
            double psi = (std::abs(x) < kZeroMag && std::abs(y) < kZeroMag) ? 0.0 : std::atan2(y, x);
            if (psi < 0.0) psi = 0.0; // numerical noise below the [0, pi/2] range
            if (psi > kPi / 2.0) psi = kPi / 2.0;
            psis.push_back(psi);
            const double cs = std::cos(psi);
            const double sn = std::sin(psi);
            const Eigen::RowVectorXcd ri = cs * w.row(i - 1) + sn * w.row(l - 1);
            const Eigen::RowVectorXcd rl = -sn * w.row(i - 1) + cs * w.row(l - 1);
            w.row(i - 1) = ri;
            w.row(l - 1) = rl;
        }
    }
    return out;
}

MatC reconstruct_v_tilde(const GivensAngles& angles, int tx_antennas, int streams)
{
    const int m = tx_antennas;
    const int ns = streams;
    const int i_max = std::min(ns, m - 1);
    if (static_cast<int>(angles.phi.size()) != i_max || static_cast<int>(angles.psi.size()) != i_max)
        throw std::invalid_argument("reconstruct_v_tilde: angle layout does not match (M, N_s)");

    MatC v = MatC::Identity(m, ns);
    // The cascade's leftmost factor acts last, so walk the factors backwards.
    for (int i = i_max; i >= 1; --i) {
        const auto& phis = angles.phi[static_cast<size_t>(i - 1)];
        const auto& psis = angles.psi[static_cast<size_t>(i - 1)];
        if (static_cast<int>(phis.size()) != m - i || static_cast<int>(psis.size()) != m - i)
            throw std::invalid_argument("reconstruct_v_tilde: angle layout does not match (M, N_s)");
        for (int l = m; l >= i + 1; --l) {
            const double psi = psis[static_cast<size_t>(l - i - 1)];
            const double cs = std::cos(psi);
            const double sn = std::sin(psi);
            // Left-multiply by G_{l,i}^T: row i <- cs*row_i - sn*row_l, row l <- sn*row_i + cs*row_l.
            const Eigen::RowVectorXcd ri = cs * v.row(i - 1) - sn * v.row(l - 1);
            const Eigen::RowVectorXcd rl = sn * v.row(i - 1) + cs * v.row(l - 1);
            v.row(i - 1) = ri;
            v.row(l - 1) = rl;
        }
        for (int l = i; l <= m - 1; ++l)
            v.row(l - 1) *= std::polar(1.0, phis[static_cast<size_t>(l - i)]);
    }
    return v;
}

double dequantize_phi(int index, int phi_bits)
{
    return static_cast<double>(index) * kPi / std::pow(2.0, phi_bits - 1) + kPi / std::pow(2.0, phi_bits);
}

double dequantize_psi(int index, int psi_bits)
{
    return static_cast<double>(index) * kPi / std::pow(2.0, psi_bits + 1) + kPi / std::pow(2.0, psi_bits + 2);
}

namespace {

int quantize_phi(double phi, int bits)
{
    const int n = 1 << bits;
    const double step = kTwoPi / n; // codewords sit at cell centers
    int k = static_cast<int>(std::floor(wrap_two_pi(phi) / step));
    return ((k % n) + n) % n;
}

int quantize_psi(double psi, int bits)
{
    const int n = 1 << bits;
    const double step = (kPi / 2.0) / n;
    int k = static_cast<int>(std::floor(psi / step));
    return std::clamp(k, 0, n - 1);
}

} // namespace

QuantizedAngles quantize_angles(const GivensAngles& raw, const QuantConfig& quant)
{
    quant.validate();
    QuantizedAngles out;
    out.phi.reserve(raw.phi.size());
    out.psi.reserve(raw.psi.size());
    for (const auto& row : raw.phi) {
        std::vector<int> q;
        q.reserve(row.size());
        for (double a : row) q.push_back(quantize_phi(a, quant.phi_bits));
        out.phi.push_back(std::move(q));
    }
    for (const auto& row : raw.psi) {
        std::vector<int> q;
        q.reserve(row.size());
        for (double a : row) q.push_back(quantize_psi(a, quant.psi_bits));
        out.psi.push_back(std::move(q));
    }
    return out;
}

GivensAngles dequantize_angles(const QuantizedAngles& idx, const QuantConfig& quant)
{
    quant.validate();
    GivensAngles out;
    out.phi.reserve(idx.phi.size());
    out.psi.reserve(idx.psi.size());
    for (const auto& row : idx.phi) {
        std::vector<double> a;
        a.reserve(row.size());
        for (int q : row) a.push_back(dequantize_phi(q, quant.phi_bits));
        out.phi.push_back(std::move(a));
    }
    for (const auto& row : idx.psi) {
        std::vector<double> a;
        a.reserve(row.size());
        for (int q : row) a.push_back(dequantize_psi(q, quant.psi_bits));
        out.psi.push_back(std::move(a));
    }
    return out;
}

std::vector<double> compute_asnr(const Eigen::MatrixXd& sigma, double p_tx, double p_n,
                                 const QuantConfig& quant, bool* floor_hit)
{
    quant.validate();
    if (p_tx <= 0.0 || p_n <= 0.0) throw std::invalid_argument("compute_asnr: powers must be positive");
    if (sigma.rows() < 1) throw std::invalid_argument("compute_asnr: empty sigma");
    const double k = static_cast<double>(sigma.rows());
    std::vector<double> out;
    out.reserve(static_cast<size_t>(sigma.cols()));
    bool hit = false;
    for (Eigen::Index i = 0; i < sigma.cols(); ++i) {
        double acc = 0.0;
        for (Eigen::Index r = 0; r < sigma.rows(); ++r) {
            double s = sigma(r, i);
            if (s < 1e-12) {
                s = 1e-12;
                hit = true;
            }
            acc += 10.0 * std::log10(p_tx * s * s / p_n);
        }
        double ups = acc / k;
        ups = std::clamp(ups, quant.asnr_min_db, quant.asnr_max_db);
        ups = std::round(ups / quant.asnr_step_db) * quant.asnr_step_db;
        out.push_back(ups);
    }
    if (floor_hit) *floor_hit = hit;
    return out;
}

double asnr_to_sigma_bar(double asnr_db, double p_tx, double p_n)
{
    return std::pow(10.0, asnr_db / 20.0) * std::sqrt(p_n / p_tx);
}

std::vector<double> asnr_to_sigma_bar(const std::vector<double>& asnr_db, double p_tx, double p_n)
{
    std::vector<double> out;
    out.reserve(asnr_db.size());
    for (double u : asnr_db) out.push_back(asnr_to_sigma_bar(u, p_tx, p_n));
    return out;
}

BfiReport encode_bfi(const CsiTensor& csi, const QuantConfig& quant, double p_tx, double p_n, ExecMode mode)
{
    quant.validate();
    if (csi.subcarriers < 1) throw std::invalid_argument("encode_bfi: empty tensor");
    const int ns = std::min(csi.rx, csi.tx);

    BfiReport report;
    report.tx_antennas = csi.tx;
    report.streams = ns;
    report.subcarriers = csi.subcarriers;
    report.quant = quant;
    report.angles.resize(static_cast<size_t>(csi.subcarriers));

    Eigen::MatrixXd sigma(csi.subcarriers, ns);

    const auto encode_one = [&](int k) {
        const SvdResult svd = compute_svd(csi[k], ns);
        for (int i = 0; i < ns; ++i) sigma(k, i) = svd.sigma(i);
        const MatC vt = phase_adjust(svd.v);
        report.angles[static_cast<size_t>(k)] = quantize_angles(extract_givens_angles(vt), quant);
    };

    if (mode == ExecMode::parallel) {
#pragma omp parallel for schedule(static)
        for (int k = 0; k < csi.subcarriers; ++k) encode_one(k);
    } else {
        for (int k = 0; k < csi.subcarriers; ++k) encode_one(k);
    }

    report.asnr_db = compute_asnr(sigma, p_tx, p_n, quant, &report.sigma_floor_hit);
    return report;
}

MatC report_v_tilde(const BfiReport& report, int subcarrier)
{
    const GivensAngles a = dequantize_angles(report.angles[static_cast<size_t>(subcarrier)], report.quant);
    return reconstruct_v_tilde(a, report.tx_antennas, report.streams);
}

} // namespace bfisim
