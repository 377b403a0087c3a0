// SPDX-License-Identifier: Apache-2.0
//
// bfisim — beamforming-feedback channel reconstruction and spoofing simulator

#include "bfisim/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bfisim {

std::vector<double> BoundSearchConfig::phi_grid(const QuantConfig& quant) const
{
    const int n = phi_points > 0 ? phi_points : (1 << quant.phi_bits);
    std::vector<double> g(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        g[static_cast<size_t>(i)] = phi_range * static_cast<double>(i) / static_cast<double>(n);
    return g;
}

std::vector<double> BoundSearchConfig::psi_grid(const QuantConfig& quant) const
{
    // Endpoints included: the zero/full amplitude corners must stay reachable
    // or the lower bound would sit spuriously above zero.
    const int n = psi_points > 0 ? psi_points : (1 << quant.psi_bits) + 1;
    std::vector<double> g(static_cast<size_t>(std::max(n, 2)));
    for (size_t i = 0; i < g.size(); ++i)
        g[i] = (kPi / 2.0) * static_cast<double>(i) / static_cast<double>(g.size() - 1);
    return g;
}

namespace {

struct UlSlotRef {
    bool is_phi;
    size_t col;
    size_t pos;
};

// All |V~_UL| magnitude matrices reachable on the angle grid. The total combo
// count is capped; above the cap every per-angle grid is thinned evenly.
std::vector<Eigen::MatrixXd> ul_magnitudes(int n, int ns, std::vector<double> phi_grid,
                                           std::vector<double> psi_grid)
{
    GivensAngles a;
    const int i_max = std::min(ns, n - 1);
    a.phi.resize(static_cast<size_t>(std::max(i_max, 0)));
    a.psi.resize(static_cast<size_t>(std::max(i_max, 0)));
    std::vector<UlSlotRef> slots;
    for (int i = 1; i <= i_max; ++i) {
        a.phi[static_cast<size_t>(i - 1)].assign(static_cast<size_t>(n - i), 0.0);
        a.psi[static_cast<size_t>(i - 1)].assign(static_cast<size_t>(n - i), 0.0);
        for (size_t p = 0; p < static_cast<size_t>(n - i); ++p) slots.push_back({true, static_cast<size_t>(i - 1), p});
        for (size_t p = 0; p < static_cast<size_t>(n - i); ++p) slots.push_back({false, static_cast<size_t>(i - 1), p});
    }

    if (slots.empty()) return {reconstruct_v_tilde(a, n, ns).cwiseAbs()};

    constexpr double kComboCap = 262144.0;
    double combos = 1.0;
    for (const auto& s : slots) combos *= static_cast<double>(s.is_phi ? phi_grid.size() : psi_grid.size());
    if (combos > kComboCap) {
        const double factor = std::pow(kComboCap / combos, 1.0 / static_cast<double>(slots.size()));
        auto thin = [&](std::vector<double>& g) {
            const size_t target = std::max<size_t>(2, static_cast<size_t>(std::floor(g.size() * factor)));
            if (target >= g.size()) return;
            std::vector<double> t(target);
            for (size_t i = 0; i < target; ++i)
                t[i] = g[i * (g.size() - 1) / (target - 1)];
            g = std::move(t);
        };
        thin(phi_grid);
        thin(psi_grid);
    }

    std::vector<size_t> radix(slots.size()), counter(slots.size(), 0);
    size_t total = 1;
    for (size_t s = 0; s < slots.size(); ++s) {
        radix[s] = slots[s].is_phi ? phi_grid.size() : psi_grid.size();
        total *= radix[s];
    }

    std::vector<Eigen::MatrixXd> mags;
    mags.reserve(total);
    for (size_t c = 0; c < total; ++c) {
        for (size_t s = 0; s < slots.size(); ++s) {
            const double v = slots[s].is_phi ? phi_grid[counter[s]] : psi_grid[counter[s]];
            if (slots[s].is_phi)
                a.phi[slots[s].col][slots[s].pos] = v;
            else
                a.psi[slots[s].col][slots[s].pos] = v;
        }
        mags.push_back(reconstruct_v_tilde(a, n, ns).cwiseAbs());
        for (size_t s = 0; s < slots.size(); ++s) {
            if (++counter[s] < radix[s]) break;
            counter[s] = 0;
        }
    }
    return mags;
}

} // namespace

AmplitudeBounds amplitude_bounds(const BfiReport& report, const ArrayConfig& config,
                                 const BoundSearchConfig& search, double p_tx, double p_n, ExecMode mode)
{
    const int n = config.rx_antennas;
    const int m = report.tx_antennas;
    const int ns = report.streams;
    const int k_count = report.subcarriers;
    const std::vector<double> sbar = asnr_to_sigma_bar(report.asnr_db, p_tx, p_n);

    const auto mags = ul_magnitudes(n, ns, search.phi_grid(report.quant), search.psi_grid(report.quant));

    AmplitudeBounds out;
    out.subcarriers = k_count;
    out.rx = n;
    out.tx = m;
    out.h_min.assign(static_cast<size_t>(k_count), Eigen::MatrixXd::Zero(n, m));
    out.h_max.assign(static_cast<size_t>(k_count), Eigen::MatrixXd::Zero(n, m));

    const auto bounds_one = [&](int k) {
        const Eigen::MatrixXd vdl_abs = report_v_tilde(report, k).cwiseAbs(); // M x Ns
        auto& lo = out.h_min[static_cast<size_t>(k)];
        auto& hi = out.h_max[static_cast<size_t>(k)];
        for (int v = 0; v < n; ++v) {
            for (int u = 0; u < m; ++u) {
                double best_hi = 0.0;
                double best_lo = std::numeric_limits<double>::infinity();
                for (const auto& ul : mags) {
                    double sum = 0.0, zmax = 0.0;
                    for (int i = 0; i < ns; ++i) {
                        const double z = sbar[static_cast<size_t>(i)] * ul(v, i) * vdl_abs(u, i);
                        sum += z;
                        zmax = std::max(zmax, z);
                    }
                    best_hi = std::max(best_hi, sum);
                    best_lo = std::min(best_lo, std::max(0.0, 2.0 * zmax - sum));
                }
                hi(v, u) = best_hi;
                lo(v, u) = best_lo;
            }
        }
    };

    if (mode == ExecMode::parallel) {
#pragma omp parallel for schedule(static)
        for (int k = 0; k < k_count; ++k) bounds_one(k);
    } else {
        for (int k = 0; k < k_count; ++k) bounds_one(k);
    }

    if (search.pool_subcarriers && k_count > 1) {
        Eigen::MatrixXd lo = out.h_min[0];
        Eigen::MatrixXd hi = out.h_max[0];
        for (int k = 1; k < k_count; ++k) {
            lo = lo.cwiseMin(out.h_min[static_cast<size_t>(k)]);
            hi = hi.cwiseMax(out.h_max[static_cast<size_t>(k)]);
        }
        for (int k = 0; k < k_count; ++k) {
            out.h_min[static_cast<size_t>(k)] = lo;
            out.h_max[static_cast<size_t>(k)] = hi;
        }
    }
    return out;
}

bool theory_filter(const ReconCandidate& candidate, const AmplitudeBounds& bounds, double slack)
{
    if (slack < 0.0) throw std::invalid_argument("theory_filter: slack must be >= 0");
    const CsiTensor& csi = candidate.csi;
    if (csi.subcarriers != bounds.subcarriers || csi.rx != bounds.rx || csi.tx != bounds.tx)
        throw std::invalid_argument("theory_filter: candidate/bounds shape mismatch");
    for (int k = 0; k < csi.subcarriers; ++k) {
        const auto& lo = bounds.h_min[static_cast<size_t>(k)];
        const auto& hi = bounds.h_max[static_cast<size_t>(k)];
        for (int v = 0; v < csi.rx; ++v) {
            for (int u = 0; u < csi.tx; ++u) {
                const double a = std::abs(csi[k](v, u));
                if (a < lo(v, u) * (1.0 - slack) || a > hi(v, u) * (1.0 + slack)) return false;
            }
        }
    }
    return true;
}

bool tof_filter(const ReconCandidate& candidate, const TofContext& ctx)
{
    if (ctx.dist_ap_sta <= 0.0 || ctx.bandwidth <= 0.0)
        throw std::invalid_argument("tof_filter: context requires positive distance and bandwidth");
    const double t = candidate.los_delay;
    return t >= ctx.t_real() - ctx.delta_t() && t <= ctx.t_real() + ctx.delta_t();
}

std::vector<ReconCandidate> filter_candidates(std::vector<ReconCandidate> candidates,
                                              const AmplitudeBounds& bounds, const TofContext& ctx,
                                              double slack)
{
    std::vector<ReconCandidate> out;
    out.reserve(candidates.size());
    for (auto& c : candidates) {
        c.theory_pass = theory_filter(c, bounds, slack);
        c.tof_pass = tof_filter(c, ctx);
        if (c.theory_pass && c.tof_pass) out.push_back(std::move(c));
    }
    return out;
}

} // namespace bfisim
