// SPDX-License-Identifier: Apache-2.0
//
// bfisim — beamforming-feedback channel reconstruction and spoofing simulator

#include "bfisim/channel.hpp"

#include <algorithm>
#include <cmath>

namespace bfisim {

VecC steering_vector(double freq, double angle, int count, double spacing)
{
    if (count < 1) throw std::invalid_argument("steering_vector: count must be >= 1");
    if (!std::isfinite(freq) || !std::isfinite(angle) || !std::isfinite(spacing))
        throw std::invalid_argument("steering_vector: non-finite input");
    VecC v(count);
    const double step = -kTwoPi * freq * spacing * std::sin(angle) / kSpeedOfLight;
    for (int q = 0; q < count; ++q) v(q) = std::polar(1.0, step * static_cast<double>(q));
    return v;
}

CsiTensor synthesize_csi(const std::vector<PathParams>& paths, const ArrayConfig& config)
{
    if (paths.empty()) throw std::invalid_argument("synthesize_csi: empty path list");
    config.validate();
    const int n = config.rx_antennas;
    const int m = config.tx_antennas;
    const auto freqs = config.subcarrier_freqs();
    const double s = config.element_spacing();

    CsiTensor csi(static_cast<int>(freqs.size()), n, m);
    for (size_t k = 0; k < freqs.size(); ++k) {
        const double f = freqs[k];
        MatC& hk = csi.h[k];
        for (const PathParams& p : paths) {
            const VecC a = steering_vector(f, p.aoa, n, s);
            const VecC d = steering_vector(f, p.aod, m, s);
            const cxd scale = p.gain * std::polar(1.0, -kTwoPi * f * p.delay);
            hk.noalias() += scale * (a * d.adjoint());
        }
    }
    return csi;
}

CsiTensor add_measurement_noise(const CsiTensor& csi, double snr_db, Rng& rng)
{
    double power = 0.0;
    for (const auto& hk : csi.h) power += hk.squaredNorm();
    const double elems = static_cast<double>(csi.subcarriers) * csi.rx * csi.tx;
    power /= std::max(elems, 1.0);
    const double noise_var = power / std::pow(10.0, snr_db / 10.0);
    const double sigma = std::sqrt(noise_var / 2.0);

    CsiTensor out = csi;
    for (auto& hk : out.h)
        for (int v = 0; v < out.rx; ++v)
            for (int u = 0; u < out.tx; ++u) hk(v, u) += cxd(sigma * rng.normal(), sigma * rng.normal());
    return out;
}

void ScenarioConfig::validate() const
{
    array.validate();
    if (path_count_min < 1 || path_count_max < path_count_min)
        throw std::invalid_argument("scenario: bad path count range");
    if (dist_min <= 0.0 || dist_max < dist_min) throw std::invalid_argument("scenario: bad distance range");
    if (los_gain <= 0.0) throw std::invalid_argument("scenario: LoS gain must be positive");
    if (nlos_gain_ratio_min <= 0.0 || nlos_gain_ratio_max < nlos_gain_ratio_min || nlos_gain_ratio_max >= 1.0)
        throw std::invalid_argument("scenario: NLoS gain ratio must lie in (0, 1)");
    if (excess_delay_min <= 0.0 || excess_delay_max < excess_delay_min)
        throw std::invalid_argument("scenario: bad excess delay range");
    if (angle_max <= 0.0 || angle_max >= kPi / 2.0)
        throw std::invalid_argument("scenario: angle_max must lie in (0, pi/2)");
}

Scenario sample_random_scenario(Rng& rng, const ScenarioConfig& config)
{
    config.validate();
    Scenario sc;
    sc.array = config.array;
    sc.distance = rng.uniform(config.dist_min, config.dist_max);
    const double t_los = sc.distance / kSpeedOfLight;

    const int p_count = rng.uniform_int(config.path_count_min, config.path_count_max);
    sc.paths.reserve(static_cast<size_t>(p_count));

    PathParams los;
    los.gain = std::polar(config.los_gain, rng.uniform(0.0, kTwoPi));
    los.delay = t_los;
    los.aoa = rng.uniform(-config.angle_max, config.angle_max);
    los.aod = rng.uniform(-config.angle_max, config.angle_max);
    sc.paths.push_back(los);

    std::vector<double> extras;
    for (int p = 1; p < p_count; ++p)
        extras.push_back(rng.uniform(config.excess_delay_min, config.excess_delay_max));
    std::sort(extras.begin(), extras.end());
    for (int p = 1; p < p_count; ++p) {
        PathParams np;
        const double ratio = rng.uniform(config.nlos_gain_ratio_min, config.nlos_gain_ratio_max);
        np.gain = std::polar(config.los_gain * ratio, rng.uniform(0.0, kTwoPi));
        np.delay = t_los + extras[static_cast<size_t>(p - 1)];
        np.aoa = rng.uniform(-config.angle_max, config.angle_max);
        np.aod = rng.uniform(-config.angle_max, config.angle_max);
        sc.paths.push_back(np);
    }
    return sc;
}

Scenario sample_random_scenario(uint64_t rng_seed, const ScenarioConfig& config)
{
    Rng rng(rng_seed);
    return sample_random_scenario(rng, config);
}

} // namespace bfisim
