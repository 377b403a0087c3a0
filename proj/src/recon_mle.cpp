// SPDX-License-Identifier: Apache-2.0
//
// bfisim — beamforming-feedback channel reconstruction and spoofing simulator

#include "bfisim/recon_mle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bfisim {

double OmegaParams::los_delay() const
{
    double t = std::numeric_limits<double>::infinity();
    for (const auto& p : paths) t = std::min(t, p.delay);
    return t;
}

MatC build_T(const OmegaParams& omega, const MatC& v_tilde_dl, const ArrayConfig& config, double freq)
{
    const int n = config.rx_antennas;
    const int m = config.tx_antennas;
    if (v_tilde_dl.rows() != m) throw std::invalid_argument("build_T: V~_DL row count != M");
    const int ns = static_cast<int>(v_tilde_dl.cols());
    const MatC vul = reconstruct_v_tilde(omega.ul_angles, n, ns);

    MatC h = MatC::Zero(n, m);
    const double s = config.element_spacing();
    for (const auto& p : omega.paths) {
        const VecC a = steering_vector(freq, p.aoa, n, s);
        const VecC d = steering_vector(freq, p.aod, m, s);
        h.noalias() += (p.gain * std::polar(1.0, -kTwoPi * freq * p.delay)) * (a * d.adjoint());
    }
    return vul.transpose() * h * v_tilde_dl;
}

double loss_from_T(const MatC& t, const std::vector<double>& sigma_bar)
{
    double acc = 0.0;
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
        for (Eigen::Index j = 0; j < t.cols(); ++j) {
            if (i == j) {
                const double d = std::abs(t(i, j)) - sigma_bar[static_cast<size_t>(i)];
                acc += d * d;
            } else {
                acc += std::norm(t(i, j));
            }
        }
    }
    return acc;
}

MleProblem::MleProblem(const BfiReport& report, const ArrayConfig& config, double p_tx, double p_n)
    : config_(config), streams_(report.streams)
{
    if (report.tx_antennas != config.tx_antennas)
        throw std::invalid_argument("MleProblem: report/config AP antenna mismatch");
    vdl_.reserve(static_cast<size_t>(report.subcarriers));
    for (int k = 0; k < report.subcarriers; ++k) vdl_.push_back(report_v_tilde(report, k));
    sigma_bar_ = asnr_to_sigma_bar(report.asnr_db, p_tx, p_n);
}

double MleProblem::loss(const OmegaParams& omega) const
{
    const auto freqs = config_.subcarrier_freqs();
    double acc = 0.0;
    for (size_t k = 0; k < freqs.size(); ++k)
        acc += loss_from_T(build_T(omega, vdl_[k], config_, freqs[k]), sigma_bar_);
    return acc;
}

namespace {

// Flattened scalar slot of the uplink angle cascade.
struct UlSlot {
    bool is_phi;
    size_t col;
    size_t pos;
};

std::vector<UlSlot> ul_slots(const GivensAngles& a)
{
    std::vector<UlSlot> s;
    for (size_t c = 0; c < a.phi.size(); ++c) {
        for (size_t p = 0; p < a.phi[c].size(); ++p) s.push_back({true, c, p});
        for (size_t p = 0; p < a.psi[c].size(); ++p) s.push_back({false, c, p});
    }
    return s;
}

GivensAngles empty_cascade(int n, int ns)
{
    GivensAngles a;
    const int i_max = std::min(ns, n - 1);
    a.phi.resize(static_cast<size_t>(std::max(i_max, 0)));
    a.psi.resize(static_cast<size_t>(std::max(i_max, 0)));
    for (int i = 1; i <= i_max; ++i) {
        a.phi[static_cast<size_t>(i - 1)].assign(static_cast<size_t>(n - i), 0.0);
        a.psi[static_cast<size_t>(i - 1)].assign(static_cast<size_t>(n - i), 0.0);
    }
    return a;
}

// Incremental objective evaluator. T_k = sum_p coef_p[k] * u_p[k] (x) w_p[k]
// with u = V~_UL^T a(aoa), w = d(aod)^H V~_DL, coef = gain * e^{-j2pi f t};
// each coordinate sweep rebuilds only the factors the swept scalar touches.
class SweepEngine {
  public:
    SweepEngine(const MleProblem& prob)
        : k_(prob.subcarriers()), n_(prob.config().rx_antennas), m_(prob.config().tx_antennas),
          ns_(prob.streams()), spacing_(prob.config().element_spacing()),
          freqs_(prob.config().subcarrier_freqs()), sigma_(prob.sigma_bar())
    {
        vdl_.resize(static_cast<size_t>(k_) * m_ * ns_);
        for (int k = 0; k < k_; ++k) {
            const MatC& v = prob.v_tilde_dl(k);
            for (int mm = 0; mm < m_; ++mm)
                for (int i = 0; i < ns_; ++i) vdl_[idx_kmi(k, mm, i)] = v(mm, i);
        }
    }

    void set_state(const OmegaParams& omega)
    {
        paths_ = omega.paths;
        ul_ = omega.ul_angles;
        vul_ = reconstruct_v_tilde(ul_, n_, ns_);
        const size_t p_count = paths_.size();
        asteer_.assign(p_count, {});
        u_.assign(p_count, {});
        w_.assign(p_count, {});
        coef_.assign(p_count, {});
        for (size_t p = 0; p < p_count; ++p) {
            asteer_[p] = make_asteer(paths_[p].aoa);
            u_[p] = project_u(asteer_[p]);
            w_[p] = make_w(paths_[p].aod);
            coef_[p] = make_coef(paths_[p].gain, paths_[p].delay);
        }
    }

    OmegaParams state() const
    {
        OmegaParams o;
        o.paths = paths_;
        o.ul_angles = ul_;
        return o;
    }

    double current_loss() const
    {
        std::vector<cxd> t(static_cast<size_t>(k_) * ns_ * ns_, cxd(0.0, 0.0));
        for (size_t p = 0; p < paths_.size(); ++p) accumulate(t, p, 1.0);
        return loss_of(t);
    }

    // Sweep kinds. gain magnitude, gain phase, delay, aoa, aod mutate one
    // path; ul mutates one cascade slot.
    enum class Kind { gain_mag, gain_phase, delay, aoa, aod };

    // Returns {best grid index or -1 if no improvement, best loss}.
    std::pair<int, double> sweep_path_scalar(Kind kind, size_t path, const std::vector<double>& grid,
                                             double incumbent_loss)
    {
        std::vector<cxd> rest(static_cast<size_t>(k_) * ns_ * ns_, cxd(0.0, 0.0));
        for (size_t q = 0; q < paths_.size(); ++q)
            if (q != path) accumulate(rest, q, 1.0);

        int best = -1;
        double best_loss = incumbent_loss;
        const PathParams base = paths_[path];

        // Per-subcarrier outer-product factors that stay fixed during the sweep.
        std::vector<cxd> uw; // k * ns * ns, u (x) w for the swept path
        if (kind != Kind::aoa && kind != Kind::aod) {
            uw.resize(static_cast<size_t>(k_) * ns_ * ns_);
            for (int k = 0; k < k_; ++k)
                for (int i = 0; i < ns_; ++i)
                    for (int j = 0; j < ns_; ++j)
                        uw[idx_kij(k, i, j)] = u_[path][idx_ki(k, i)] * w_[path][idx_ki(k, j)];
        }

        std::vector<cxd> coef_grid(static_cast<size_t>(k_));
        for (size_t g = 0; g < grid.size(); ++g) {
            double l = 0.0;
            switch (kind) {
            case Kind::gain_mag: {
                const cxd gain = std::polar(grid[g], std::arg(base.gain));
                fill_coef(coef_grid, gain, base.delay);
                l = loss_with_coef(rest, uw, coef_grid);
                break;
            }
            case Kind::gain_phase: {
                const cxd gain = std::polar(std::abs(base.gain), grid[g]);
                fill_coef(coef_grid, gain, base.delay);
                l = loss_with_coef(rest, uw, coef_grid);
                break;
            }
            case Kind::delay: {
                fill_coef(coef_grid, base.gain, grid[g]);
                l = loss_with_coef(rest, uw, coef_grid);
                break;
            }
            case Kind::aoa: {
                const std::vector<cxd> u = project_u(make_asteer(grid[g]));
                l = loss_with_uw(rest, u, w_[path], coef_[path]);
                break;
            }
            case Kind::aod: {
                const std::vector<cxd> w = make_w(grid[g]);
                l = loss_with_uw(rest, u_[path], w, coef_[path]);
                break;
            }
            }
            if (l < best_loss) {
                best_loss = l;
                best = static_cast<int>(g);
            }
        }

        if (best >= 0) {
            const double v = grid[static_cast<size_t>(best)];
            switch (kind) {
            case Kind::gain_mag: paths_[path].gain = std::polar(v, std::arg(base.gain)); break;
            case Kind::gain_phase: paths_[path].gain = std::polar(std::abs(base.gain), v); break;
            case Kind::delay: paths_[path].delay = v; break;
            case Kind::aoa: paths_[path].aoa = v; break;
            case Kind::aod: paths_[path].aod = v; break;
            }
            asteer_[path] = make_asteer(paths_[path].aoa);
            u_[path] = project_u(asteer_[path]);
            w_[path] = make_w(paths_[path].aod);
            coef_[path] = make_coef(paths_[path].gain, paths_[path].delay);
        }
        return {best, best_loss};
    }

    std::pair<int, double> sweep_ul_scalar(const UlSlot& slot, const std::vector<double>& grid,
                                           double incumbent_loss)
    {
        // H V~_DL projected per path: s_p[k][n][j] = a_k(n) * sum over the
        // w factor; equivalently cache y_p = coef * w and the raw steering
        // values so each candidate V~_UL only costs the u-projection.
        int best = -1;
        double best_loss = incumbent_loss;
        GivensAngles trial = ul_;
        for (size_t g = 0; g < grid.size(); ++g) {
            auto& v = slot.is_phi ? trial.phi[slot.col][slot.pos] : trial.psi[slot.col][slot.pos];
            v = grid[g];
            const MatC vul = reconstruct_v_tilde(trial, n_, ns_);
            const double l = loss_with_vul(vul);
            if (l < best_loss) {
                best_loss = l;
                best = static_cast<int>(g);
            }
        }
        if (best >= 0) {
            auto& v = slot.is_phi ? ul_.phi[slot.col][slot.pos] : ul_.psi[slot.col][slot.pos];
            v = grid[static_cast<size_t>(best)];
            vul_ = reconstruct_v_tilde(ul_, n_, ns_);
            for (size_t p = 0; p < paths_.size(); ++p) u_[p] = project_u(asteer_[p]);
        }
        return {best, best_loss};
    }

  private:
    size_t idx_ki(int k, int i) const { return static_cast<size_t>(k) * ns_ + i; }
    size_t idx_kij(int k, int i, int j) const { return (static_cast<size_t>(k) * ns_ + i) * ns_ + j; }
    size_t idx_kmi(int k, int mm, int i) const { return (static_cast<size_t>(k) * m_ + mm) * ns_ + i; }

    // Steering values a_k(n) for one arrival angle; phases advance linearly
    // in f_k, so each antenna's column is a single complex recurrence.
    std::vector<cxd> make_asteer(double aoa) const
    {
        std::vector<cxd> out(static_cast<size_t>(k_) * n_);
        const double c0 = -kTwoPi * spacing_ * std::sin(aoa) / kSpeedOfLight;
        const double f0 = freqs_.front();
        const double df = k_ > 1 ? freqs_[1] - freqs_[0] : 0.0;
        for (int q = 0; q < n_; ++q) {
            cxd rot = std::polar(1.0, c0 * f0 * q);
            const cxd step = std::polar(1.0, c0 * df * q);
            for (int k = 0; k < k_; ++k) {
                out[static_cast<size_t>(k) * n_ + q] = rot;
                rot *= step;
            }
        }
        return out;
    }

    // u[k][i] = sum_n vul(n, i) * a_k(n).
    std::vector<cxd> project_u(const std::vector<cxd>& asteer) const
    {
        std::vector<cxd> out(static_cast<size_t>(k_) * ns_, cxd(0.0, 0.0));
        for (int k = 0; k < k_; ++k)
            for (int i = 0; i < ns_; ++i) {
                cxd acc(0.0, 0.0);
                for (int q = 0; q < n_; ++q) acc += vul_(q, i) * asteer[static_cast<size_t>(k) * n_ + q];
                out[idx_ki(k, i)] = acc;
            }
        return out;
    }

    // w[k][j] = sum_m conj(d_k(m)) * vdl_k(m, j).
    std::vector<cxd> make_w(double aod) const
    {
        std::vector<cxd> out(static_cast<size_t>(k_) * ns_, cxd(0.0, 0.0));
        const double c0 = -kTwoPi * spacing_ * std::sin(aod) / kSpeedOfLight;
        const double f0 = freqs_.front();
        const double df = k_ > 1 ? freqs_[1] - freqs_[0] : 0.0;
        for (int q = 0; q < m_; ++q) {
            cxd rot = std::polar(1.0, -c0 * f0 * q); // conjugated AP-side steering
            const cxd step = std::polar(1.0, -c0 * df * q);
            for (int k = 0; k < k_; ++k) {
                for (int i = 0; i < ns_; ++i) out[idx_ki(k, i)] += rot * vdl_[idx_kmi(k, q, i)];
                rot *= step;
            }
        }
        return out;
    }

    std::vector<cxd> make_coef(cxd gain, double delay) const
    {
        std::vector<cxd> out(static_cast<size_t>(k_));
        fill_coef(out, gain, delay);
        return out;
    }

    void fill_coef(std::vector<cxd>& out, cxd gain, double delay) const
    {
        const double f0 = freqs_.front();
        const double df = k_ > 1 ? freqs_[1] - freqs_[0] : 0.0;
        cxd rot = gain * std::polar(1.0, -kTwoPi * f0 * delay);
        const cxd step = std::polar(1.0, -kTwoPi * df * delay);
        for (int k = 0; k < k_; ++k) {
            out[static_cast<size_t>(k)] = rot;
            rot *= step;
        }
    }

    void accumulate(std::vector<cxd>& t, size_t p, double scale) const
    {
        for (int k = 0; k < k_; ++k) {
            const cxd c = coef_[p][static_cast<size_t>(k)] * scale;
            for (int i = 0; i < ns_; ++i) {
                const cxd cu = c * u_[p][idx_ki(k, i)];
                for (int j = 0; j < ns_; ++j) t[idx_kij(k, i, j)] += cu * w_[p][idx_ki(k, j)];
            }
        }
    }

    double loss_of(const std::vector<cxd>& t) const
    {
        double acc = 0.0;
        for (int k = 0; k < k_; ++k) {
            for (int i = 0; i < ns_; ++i) {
                for (int j = 0; j < ns_; ++j) {
                    const cxd v = t[idx_kij(k, i, j)];
                    if (i == j) {
                        const double d = std::abs(v) - sigma_[static_cast<size_t>(i)];
                        acc += d * d;
                    } else {
                        acc += std::norm(v);
                    }
                }
            }
        }
        return acc;
    }

    double loss_with_coef(const std::vector<cxd>& rest, const std::vector<cxd>& uw,
                          const std::vector<cxd>& coef) const
    {
        double acc = 0.0;
        for (int k = 0; k < k_; ++k) {
            const cxd c = coef[static_cast<size_t>(k)];
            for (int i = 0; i < ns_; ++i) {
                for (int j = 0; j < ns_; ++j) {
                    const cxd v = rest[idx_kij(k, i, j)] + c * uw[idx_kij(k, i, j)];
                    if (i == j) {
                        const double d = std::abs(v) - sigma_[static_cast<size_t>(i)];
                        acc += d * d;
                    } else {
                        acc += std::norm(v);
                    }
                }
            }
        }
        return acc;
    }

    double loss_with_uw(const std::vector<cxd>& rest, const std::vector<cxd>& u,
                        const std::vector<cxd>& w, const std::vector<cxd>& coef) const
    {
        double acc = 0.0;
        for (int k = 0; k < k_; ++k) {
            const cxd c = coef[static_cast<size_t>(k)];
            for (int i = 0; i < ns_; ++i) {
                const cxd cu = c * u[idx_ki(k, i)];
                for (int j = 0; j < ns_; ++j) {
                    const cxd v = rest[idx_kij(k, i, j)] + cu * w[idx_ki(k, j)];
                    if (i == j) {
                        const double d = std::abs(v) - sigma_[static_cast<size_t>(i)];
                        acc += d * d;
                    } else {
                        acc += std::norm(v);
                    }
                }
            }
        }
        return acc;
    }

    double loss_with_vul(const MatC& vul) const
    {
        double acc = 0.0;
        std::vector<cxd> row(static_cast<size_t>(ns_) * ns_);
        for (int k = 0; k < k_; ++k) {
            std::fill(row.begin(), row.end(), cxd(0.0, 0.0));
            for (size_t p = 0; p < paths_.size(); ++p) {
                // u for this candidate V~_UL from the cached raw steering sums:
                // recompute directly; N and Ns are tiny.
                const cxd c = coef_[p][static_cast<size_t>(k)];
                for (int i = 0; i < ns_; ++i) {
                    cxd up(0.0, 0.0);
                    for (int n = 0; n < n_; ++n) up += vul(n, i) * asteer_[p][static_cast<size_t>(k) * n_ + n];
                    const cxd cu = c * up;
                    for (int j = 0; j < ns_; ++j) row[static_cast<size_t>(i) * ns_ + j] += cu * w_[p][idx_ki(k, j)];
                }
            }
            for (int i = 0; i < ns_; ++i) {
                for (int j = 0; j < ns_; ++j) {
                    const cxd v = row[static_cast<size_t>(i) * ns_ + j];
                    if (i == j) {
                        const double d = std::abs(v) - sigma_[static_cast<size_t>(i)];
                        acc += d * d;
                    } else {
                        acc += std::norm(v);
                    }
                }
            }
        }
        return acc;
    }

    int k_;
    int n_;
    int m_;
    int ns_;
    double spacing_;
    std::vector<double> freqs_;
    std::vector<double> sigma_;
    std::vector<cxd> vdl_;

    std::vector<PathParams> paths_;
    GivensAngles ul_;
    MatC vul_;
    std::vector<std::vector<cxd>> asteer_;
    std::vector<std::vector<cxd>> u_;
    std::vector<std::vector<cxd>> w_;
    std::vector<std::vector<cxd>> coef_;
};

} // namespace

DescentResult coordinate_descent(const OmegaParams& omega0, const MleProblem& problem,
                                 const ParamGrids& grids)
{
    if (grids.gain_mag.empty() || grids.gain_phase.empty() || grids.aoa.empty() || grids.aod.empty() ||
        grids.delay.empty())
        throw std::invalid_argument("coordinate_descent: empty grid");
    if (omega0.paths.empty()) throw std::invalid_argument("coordinate_descent: omega needs >= 1 path");

    SweepEngine eng(problem);
    eng.set_state(omega0);
    double loss = eng.current_loss();

    DescentResult out;
    out.loss_trace.push_back(loss);

    const auto slots = ul_slots(omega0.ul_angles);
    for (int cycle = 0; cycle < grids.max_cycles; ++cycle) {
        const double before = loss;
        for (size_t p = 0; p < omega0.paths.size(); ++p) {
            loss = eng.sweep_path_scalar(SweepEngine::Kind::delay, p, grids.delay, loss).second;
            loss = eng.sweep_path_scalar(SweepEngine::Kind::aoa, p, grids.aoa, loss).second;
            loss = eng.sweep_path_scalar(SweepEngine::Kind::aod, p, grids.aod, loss).second;
            loss = eng.sweep_path_scalar(SweepEngine::Kind::gain_mag, p, grids.gain_mag, loss).second;
            loss = eng.sweep_path_scalar(SweepEngine::Kind::gain_phase, p, grids.gain_phase, loss).second;
        }
        for (const auto& s : slots) {
            const auto& grid = s.is_phi ? grids.ul_phi : grids.ul_psi;
            if (!grid.empty()) loss = eng.sweep_ul_scalar(s, grid, loss).second;
        }
        out.cycles = cycle + 1;
        out.loss_trace.push_back(loss);
        if (before - loss < grids.rel_tol * std::max(before, 1e-300)) break;
    }

    out.omega = eng.state();
    out.loss = loss;
    return out;
}

namespace {

std::vector<double> linspace_open(double lo, double hi, int n)
{
    // n cell midpoints of (lo, hi); keeps angles away from the +-pi/2 poles.
    std::vector<double> v(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        v[static_cast<size_t>(i)] = lo + (hi - lo) * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    return v;
}

std::vector<double> logspace(double lo, double hi, int n)
{
    std::vector<double> v(static_cast<size_t>(n));
    const double llo = std::log(lo);
    const double lhi = std::log(hi);
    for (int i = 0; i < n; ++i)
        v[static_cast<size_t>(i)] =
            std::exp(llo + (lhi - llo) * static_cast<double>(i) / static_cast<double>(std::max(n - 1, 1)));
    return v;
}

std::vector<double> wrap_points(double lo, double hi, int n) // [lo, hi), endpoint excluded
{
    std::vector<double> v(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        v[static_cast<size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
    return v;
}

std::vector<double> local_grid(double center, double step, int half, double lo, double hi, bool wrap2pi)
{
    std::vector<double> v;
    v.reserve(static_cast<size_t>(2 * half + 1));
    for (int i = -half; i <= half; ++i) {
        double x = center + step * static_cast<double>(i);
        if (wrap2pi) {
            x = std::fmod(x, kTwoPi);
            if (x < 0.0) x += kTwoPi;
        } else {
            if (x < lo || x > hi) continue;
        }
        v.push_back(x);
    }
    if (v.empty()) v.push_back(std::clamp(center, lo, hi));
    return v;
}

ParamGrids zoom_grids(const OmegaParams& omega, const ParamGrids& fine, const SearchConfig& search,
                      int stage)
{
    // Each stage shrinks the local window by 8x around the incumbent; the
    // incumbent itself is always a grid point, so descent stays monotone.
    const double shrink = std::pow(8.0, stage + 1);
    ParamGrids g = fine;
    g.max_cycles = std::max(6, fine.max_cycles / 2);

    const double ang_step = kPi / static_cast<double>(search.angle_fine) / shrink;
    const double t_step = fine.delay.size() > 1 ? (fine.delay[1] - fine.delay[0]) / shrink : 1e-10;
    const double ph_step = kTwoPi / static_cast<double>(search.gain_phase_points) / shrink;
    const double mag_ratio = std::pow(search.gain_hi / search.gain_lo,
                                      1.0 / static_cast<double>(std::max(search.gain_mag_points - 1, 1)));
    const double mag_step_log = std::log(mag_ratio) / shrink;

    // Local windows around the first path; the descent revisits every path
    // with the same offsets applied around its own incumbent via merge below.
    auto around_all = [&](auto accessor, double step, double lo, double hi, bool wrap) {
        std::vector<double> pts;
        for (const auto& p : omega.paths) {
            const auto loc = local_grid(accessor(p), step, 8, lo, hi, wrap);
            pts.insert(pts.end(), loc.begin(), loc.end());
        }
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        return pts;
    };

    g.aoa = around_all([](const PathParams& p) { return p.aoa; }, ang_step, -kPi / 2 + 1e-6, kPi / 2 - 1e-6, false);
    g.aod = around_all([](const PathParams& p) { return p.aod; }, ang_step, -kPi / 2 + 1e-6, kPi / 2 - 1e-6, false);
    g.delay = around_all([](const PathParams& p) { return p.delay; }, t_step, 0.0,
                         std::numeric_limits<double>::infinity(), false);
    g.gain_phase = around_all([](const PathParams& p) { return std::arg(p.gain); }, ph_step, 0.0, 0.0, true);

    std::vector<double> mags;
    for (const auto& p : omega.paths) {
        const double c = std::max(std::abs(p.gain), 1e-6);
        for (int i = -8; i <= 8; ++i) mags.push_back(c * std::exp(mag_step_log * static_cast<double>(i)));
    }
    std::sort(mags.begin(), mags.end());
    g.gain_mag = mags;

    // Uplink angles zoom below codebook resolution the same way.
    auto ul_vals = [&](const std::vector<std::vector<double>>& rows, double step, bool wrap, double hi) {
        std::vector<double> pts;
        for (const auto& row : rows)
            for (double v : row) {
                const auto loc = local_grid(v, step / shrink, 8, 0.0, hi, wrap);
                pts.insert(pts.end(), loc.begin(), loc.end());
            }
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        return pts;
    };
    if (!fine.ul_phi.empty() && !omega.ul_angles.phi.empty()) {
        const double phi_step = fine.ul_phi.size() > 1 ? fine.ul_phi[1] - fine.ul_phi[0] : 0.1;
        g.ul_phi = ul_vals(omega.ul_angles.phi, phi_step, true, kTwoPi);
    }
    if (!fine.ul_psi.empty() && !omega.ul_angles.psi.empty()) {
        const double psi_step = fine.ul_psi.size() > 1 ? fine.ul_psi[1] - fine.ul_psi[0] : 0.05;
        g.ul_psi = ul_vals(omega.ul_angles.psi, psi_step, false, kPi / 2);
    }
    return g;
}

} // namespace

ParamGrids make_fine_grids(const SearchConfig& search, const ArrayConfig& config, const QuantConfig& quant)
{
    ParamGrids g;
    g.max_cycles = search.max_cycles;
    g.rel_tol = search.rel_tol;
    g.aoa = linspace_open(-kPi / 2, kPi / 2, search.angle_fine);
    g.aod = g.aoa;
    g.gain_mag = logspace(search.gain_lo, search.gain_hi, search.gain_mag_points);
    g.gain_phase = wrap_points(0.0, kTwoPi, search.gain_phase_points);

    const double t_max = search.delay_max_factor * search.dist_ap_sta / kSpeedOfLight;
    const double t_step = 1.0 / (config.bandwidth * static_cast<double>(search.delay_fine_div));
    const int nt = std::max(2, static_cast<int>(std::floor(t_max / t_step)) + 1);
    g.delay.resize(static_cast<size_t>(nt));
    for (int i = 0; i < nt; ++i) g.delay[static_cast<size_t>(i)] = t_step * static_cast<double>(i);

    const int n_phi = 1 << quant.phi_bits;
    for (int q = 0; q < n_phi; ++q) g.ul_phi.push_back(dequantize_phi(q, quant.phi_bits));
    const int n_psi = 1 << quant.psi_bits;
    for (int q = 0; q < n_psi; ++q) g.ul_psi.push_back(dequantize_psi(q, quant.psi_bits));
    return g;
}

namespace {

OmegaParams random_probe(Rng& rng, int paths, const SearchConfig& search, const ArrayConfig& config,
                         int streams)
{
    const double t_los = search.dist_ap_sta / kSpeedOfLight;
    const double dt = 1.0 / config.bandwidth;
    const double t_max = search.delay_max_factor * search.dist_ap_sta / kSpeedOfLight;

    OmegaParams o;
    o.paths.resize(static_cast<size_t>(paths));
    for (int p = 0; p < paths; ++p) {
        PathParams& pp = o.paths[static_cast<size_t>(p)];
        const double mag = std::exp(rng.uniform(std::log(search.gain_lo), std::log(search.gain_hi)));
        pp.gain = std::polar(mag, rng.uniform(0.0, kTwoPi));
        if (p == 0) {
            // LoS hypothesis stays inside the ToF-consistency window.
            pp.delay = rng.uniform(std::max(0.0, t_los - dt), t_los + dt);
        } else {
            pp.delay = rng.uniform(t_los, t_max);
        }
        pp.aoa = rng.uniform(-kPi / 2 * 0.98, kPi / 2 * 0.98);
        pp.aod = rng.uniform(-kPi / 2 * 0.98, kPi / 2 * 0.98);
    }
    o.ul_angles = empty_cascade(config.rx_antennas, streams);
    return o;
}

bool params_close(const PathParams& a, const PathParams& b, const ParamGrids& fine)
{
    const double ang_step = fine.aoa.size() > 1 ? fine.aoa[1] - fine.aoa[0] : 1e-3;
    const double t_step = fine.delay.size() > 1 ? fine.delay[1] - fine.delay[0] : 1e-10;
    const double ph_step = fine.gain_phase.size() > 1 ? fine.gain_phase[1] - fine.gain_phase[0] : 0.2;
    const double mag_ratio = fine.gain_mag.size() > 1 ? fine.gain_mag[1] / fine.gain_mag[0] : 1.1;

    if (std::abs(a.delay - b.delay) > t_step) return false;
    if (std::abs(a.aoa - b.aoa) > ang_step) return false;
    if (std::abs(a.aod - b.aod) > ang_step) return false;
    const double ma = std::abs(a.gain);
    const double mb = std::abs(b.gain);
    if (std::max(ma, mb) > std::min(ma, mb) * mag_ratio) return false;
    double dph = std::fmod(std::abs(std::arg(a.gain) - std::arg(b.gain)), kTwoPi);
    dph = std::min(dph, kTwoPi - dph);
    return dph <= ph_step;
}

bool candidates_merge(const ReconCandidate& a, const ReconCandidate& b, const ParamGrids& fine)
{
    if (a.omega.paths.size() != b.omega.paths.size()) return false;
    auto sorted = [](const ReconCandidate& c) {
        std::vector<PathParams> p = c.omega.paths;
        std::sort(p.begin(), p.end(), [](const PathParams& x, const PathParams& y) { return x.delay < y.delay; });
        return p;
    };
    const auto pa = sorted(a);
    const auto pb = sorted(b);
    for (size_t i = 0; i < pa.size(); ++i)
        if (!params_close(pa[i], pb[i], fine)) return false;
    return true;
}

} // namespace

std::vector<ReconCandidate> multi_start_search(const BfiReport& report, const ArrayConfig& config,
                                               const SearchConfig& search, uint64_t rng_seed,
                                               double p_tx, double p_n)
{
    const MleProblem problem(report, config, p_tx, p_n);
    const ParamGrids fine = make_fine_grids(search, config, report.quant);

    struct Slot {
        int paths;
        int restart;
    };
    std::vector<Slot> slots;
    for (int pc : search.path_counts)
        for (int r = 0; r < search.restarts; ++r) slots.push_back({pc, r});

    std::vector<ReconCandidate> results(slots.size());

    const auto run_slot = [&](size_t s) {
        const Slot slot = slots[s];
        Rng rng = Rng::substream(rng_seed, "mle-restart",
                                 static_cast<uint64_t>(slot.paths) * 100003ULL + static_cast<uint64_t>(slot.restart));
        OmegaParams best_probe;
        double best_loss = std::numeric_limits<double>::infinity();
        for (int i = 0; i < search.coarse_probes; ++i) {
            OmegaParams probe = random_probe(rng, slot.paths, search, config, report.streams);
            // Random uplink angles from the codebook grids.
            for (auto& row : probe.ul_angles.phi)
                for (auto& v : row) v = fine.ul_phi[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(fine.ul_phi.size()) - 1))];
            for (auto& row : probe.ul_angles.psi)
                for (auto& v : row) v = fine.ul_psi[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(fine.ul_psi.size()) - 1))];
            const double l = problem.loss(probe);
            if (l < best_loss) {
                best_loss = l;
                best_probe = std::move(probe);
            }
        }

        DescentResult res = coordinate_descent(best_probe, problem, fine);
        int cycles = res.cycles;
        for (int z = 0; z < search.zoom_stages; ++z) {
            res = coordinate_descent(res.omega, problem, zoom_grids(res.omega, fine, search, z));
            cycles += res.cycles;
        }

        ReconCandidate cand;
        cand.omega = res.omega;
        cand.loss = res.loss;
        cand.csi = synthesize_csi(res.omega.paths, config);
        cand.los_delay = res.omega.los_delay();
        cand.restart_index = slot.restart;
        cand.descent_cycles = cycles;
        cand.assumed_paths = slot.paths;
        results[s] = std::move(cand);
    };

    if (search.mode == ExecMode::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (long long s = 0; s < static_cast<long long>(slots.size()); ++s)
            run_slot(static_cast<size_t>(s));
    } else {
        for (size_t s = 0; s < slots.size(); ++s) run_slot(s);
    }

    std::vector<ReconCandidate> pool;
    pool.reserve(results.size());
    for (auto& c : results)
        if (std::isfinite(c.loss)) pool.push_back(std::move(c));

    std::stable_sort(pool.begin(), pool.end(), [](const ReconCandidate& a, const ReconCandidate& b) {
        if (a.loss != b.loss) return a.loss < b.loss;
        if (a.assumed_paths != b.assumed_paths) return a.assumed_paths < b.assumed_paths;
        return a.restart_index < b.restart_index;
    });

    std::vector<ReconCandidate> out;
    for (auto& c : pool) {
        bool dup = false;
        for (const auto& kept : out)
            if (candidates_merge(c, kept, fine)) {
                dup = true;
                break;
            }
        if (!dup) out.push_back(std::move(c));
    }
    return out;
}

GridEvalCount complexity_estimate(int paths, std::uint64_t g_alpha, std::uint64_t g_chi,
                                  std::uint64_t g_gamma, std::uint64_t g_t, std::uint64_t g_phi,
                                  std::uint64_t g_psi, int n_phi_ul, int n_psi_ul)
{
    GridEvalCount c;
    c.per_cycle = static_cast<std::uint64_t>(paths) * (g_alpha + g_chi + g_gamma + g_t) +
                  static_cast<std::uint64_t>(n_phi_ul) * g_phi + static_cast<std::uint64_t>(n_psi_ul) * g_psi;
    const double p = static_cast<double>(paths);
    c.exhaustive = std::pow(static_cast<double>(g_alpha), p) * std::pow(static_cast<double>(g_chi), p) *
                   std::pow(static_cast<double>(g_gamma), p) * std::pow(static_cast<double>(g_t), p) *
                   std::pow(static_cast<double>(g_phi), static_cast<double>(n_phi_ul)) *
                   std::pow(static_cast<double>(g_psi), static_cast<double>(n_psi_ul));
    return c;
}

} // namespace bfisim
