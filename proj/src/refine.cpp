// SPDX-License-Identifier: Apache-2.0
//
// bfisim — beamforming-feedback channel reconstruction and spoofing simulator

#include "bfisim/refine.hpp"

#include <cmath>

namespace bfisim {

double pearson(const std::vector<double>& x, const std::vector<double>& y, bool* degenerate)
{
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("pearson: need equal lengths >= 2");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (degenerate) *degenerate = false;
    if (sxx <= 0.0 || syy <= 0.0) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    return sxy / std::sqrt(sxx * syy);
}

std::vector<std::vector<double>> pair_profiles(const std::vector<CsiTensor>& training)
{
    if (training.empty()) throw std::invalid_argument("pair_profiles: empty training set");
    const int rx = training.front().rx;
    const int tx = training.front().tx;
    const int k_count = training.front().subcarriers;
    const int pairs = rx * tx;

    std::vector<std::vector<double>> prof(static_cast<size_t>(pairs),
                                          std::vector<double>(static_cast<size_t>(k_count), 0.0));
    for (const auto& csi : training) {
        if (csi.rx != rx || csi.tx != tx || csi.subcarriers != k_count)
            throw std::invalid_argument("pair_profiles: inconsistent tensor shapes");
        for (int k = 0; k < k_count; ++k)
            for (int v = 0; v < rx; ++v)
                for (int u = 0; u < tx; ++u)
                    prof[static_cast<size_t>(v * tx + u)][static_cast<size_t>(k)] += std::abs(csi[k](v, u));
    }
    const double inv = 1.0 / static_cast<double>(training.size());
    for (auto& p : prof)
        for (auto& v : p) v *= inv;
    return prof;
}

int select_reference_pair(const std::vector<CsiTensor>& training)
{
    if (training.size() < 2) throw std::invalid_argument("select_reference_pair: need >= 2 training packets");
    const auto prof = pair_profiles(training);
    const int pairs = static_cast<int>(prof.size());
    if (pairs < 2) throw std::invalid_argument("select_reference_pair: need >= 2 antenna pairs");

    int best = 0;
    double best_mean = -2.0;
    for (int e = 0; e < pairs; ++e) {
        double acc = 0.0;
        for (int o = 0; o < pairs; ++o) {
            if (o == e) continue;
            acc += pearson(prof[static_cast<size_t>(e)], prof[static_cast<size_t>(o)]);
        }
        const double mean = acc / static_cast<double>(pairs - 1);
        if (mean > best_mean + 1e-15) { // strict improvement; index tiebreak otherwise
            best_mean = mean;
            best = e;
        }
    }
    return best;
}

RefinementModel fit_weights(const std::vector<CsiTensor>& training, int reference_pair)
{
    if (training.empty()) throw std::invalid_argument("fit_weights: empty training set");
    const int rx = training.front().rx;
    const int tx = training.front().tx;
    const int pairs = rx * tx;
    if (reference_pair < 0 || reference_pair >= pairs) throw std::invalid_argument("fit_weights: bad reference");

    RefinementModel model;
    model.rx = rx;
    model.tx = tx;
    model.reference_pair = reference_pair;
    model.weights.assign(static_cast<size_t>(pairs), 1.0);

    // Through-origin least squares over packets x subcarriers:
    // mu = sum(b_e * b_ref) / sum(b_ref^2).
    std::vector<double> num(static_cast<size_t>(pairs), 0.0);
    double den = 0.0;
    const int rv = reference_pair / tx;
    const int ru = reference_pair % tx;
    for (const auto& csi : training) {
        for (int k = 0; k < csi.subcarriers; ++k) {
            const double bref = std::abs(csi[k](rv, ru));
            den += bref * bref;
            for (int v = 0; v < rx; ++v)
                for (int u = 0; u < tx; ++u)
                    num[static_cast<size_t>(v * tx + u)] += std::abs(csi[k](v, u)) * bref;
        }
    }
    if (den <= 0.0) throw std::invalid_argument("fit_weights: reference amplitudes are all zero");
    for (int e = 0; e < pairs; ++e) model.weights[static_cast<size_t>(e)] = num[static_cast<size_t>(e)] / den;
    model.weights[static_cast<size_t>(reference_pair)] = 1.0;

    const auto prof = pair_profiles(training);
    model.correlations.resize(pairs, pairs);
    for (int a = 0; a < pairs; ++a)
        for (int b = 0; b < pairs; ++b)
            model.correlations(a, b) = a == b ? 1.0 : pearson(prof[static_cast<size_t>(a)], prof[static_cast<size_t>(b)]);
    return model;
}

ReconCandidate apply_refinement(const ReconCandidate& candidate, const RefinementModel& model, double blend)
{
    const CsiTensor& csi = candidate.csi;
    if (csi.rx != model.rx || csi.tx != model.tx)
        throw std::invalid_argument("apply_refinement: candidate/model dimension mismatch");

    ReconCandidate out = candidate; // loss, delay and provenance carry over
    const int rv = model.reference_pair / model.tx;
    const int ru = model.reference_pair % model.tx;
    for (int k = 0; k < csi.subcarriers; ++k) {
        const double bref = std::abs(csi[k](rv, ru));
        for (int v = 0; v < csi.rx; ++v) {
            for (int u = 0; u < csi.tx; ++u) {
                const int pair = v * model.tx + u;
                if (pair == model.reference_pair) continue;
                const cxd old = csi[k](v, u);
                const double target = model.weights[static_cast<size_t>(pair)] * bref;
                const double amp = (1.0 - blend) * std::abs(old) + blend * target;
                const double phase = std::abs(old) > 0.0 ? std::arg(old) : 0.0;
                out.csi[k](v, u) = std::polar(amp, phase);
            }
        }
    }
    return out;
}

} // namespace bfisim
