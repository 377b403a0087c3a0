// SPDX-License-Identifier: Apache-2.0

#include "bfisim/channel.hpp"

#include <doctest.h>

#include <cmath>

using namespace bfisim;

namespace {

// Literal double-loop evaluation of the multipath sum, kept independent of
// the library path it checks.
CsiTensor brute_force_csi(const std::vector<PathParams>& paths, const ArrayConfig& cfg)
{
    const auto freqs = cfg.subcarrier_freqs();
    const double s = cfg.element_spacing();
    CsiTensor out(static_cast<int>(freqs.size()), cfg.rx_antennas, cfg.tx_antennas);
    for (size_t k = 0; k < freqs.size(); ++k) {
        for (int v = 0; v < cfg.rx_antennas; ++v) {
            for (int u = 0; u < cfg.tx_antennas; ++u) {
                cxd acc(0.0, 0.0);
                for (const auto& p : paths) {
                    const cxd a = std::polar(1.0, -kTwoPi * freqs[k] * s * v * std::sin(p.aoa) / kSpeedOfLight);
                    const cxd d = std::polar(1.0, -kTwoPi * freqs[k] * s * u * std::sin(p.aod) / kSpeedOfLight);
                    acc += p.gain * std::polar(1.0, -kTwoPi * freqs[k] * p.delay) * a * std::conj(d);
                }
                out[static_cast<int>(k)](v, u) = acc;
            }
        }
    }
    return out;
}

ArrayConfig small_config(int m, int n, int k)
{
    ArrayConfig c;
    c.tx_antennas = m;
    c.rx_antennas = n;
    c.subcarrier_count = k;
    return c;
}

} // namespace

TEST_CASE("steering vector basics")
{
    const VecC flat = steering_vector(5.0e9, 0.0, 3, 0.03);
    for (int q = 0; q < 3; ++q) {
        CHECK(flat(q).real() == doctest::Approx(1.0));
        CHECK(flat(q).imag() == doctest::Approx(0.0));
    }

    // f = 5 GHz, 30 degrees, spacing 3 cm: element 1 phase is
    // -2*pi*f*s*sin(pi/6)/c = -1.5718825... rad, just past -pi/2.
    const VecC v = steering_vector(5.0e9, kPi / 6.0, 2, 0.03);
    CHECK(v(0) == cxd(1.0, 0.0));
    const double expected_phase = -kTwoPi * 5.0e9 * 0.03 * 0.5 / kSpeedOfLight;
    CHECK(expected_phase == doctest::Approx(-1.5718825).epsilon(1e-6));
    CHECK(std::arg(v(1)) == doctest::Approx(expected_phase));
    CHECK(std::abs(v(1)) == doctest::Approx(1.0));

    const VecC single = steering_vector(2.4e9, 0.7, 1, 0.0625);
    CHECK(single.size() == 1);
    CHECK(single(0) == cxd(1.0, 0.0));

    CHECK_THROWS_AS(steering_vector(5e9, std::nan(""), 2, 0.03), std::invalid_argument);
    CHECK_THROWS_AS(steering_vector(5e9, 0.1, 0, 0.03), std::invalid_argument);
}

TEST_CASE("subcarrier grid spans the bandwidth")
{
    ArrayConfig cfg;
    cfg.bandwidth = 20e6;
    const auto f = cfg.subcarrier_freqs();
    REQUIRE(f.size() == 64);
    CHECK(f.back() - f.front() == doctest::Approx(20e6));
    for (size_t i = 1; i < f.size(); ++i) CHECK(f[i] > f[i - 1]);
    // centered on the carrier
    CHECK(0.5 * (f.front() + f.back()) == doctest::Approx(cfg.carrier_freq));

    ArrayConfig c80;
    c80.bandwidth = 80e6;
    CHECK(c80.n_subcarriers() == 256);
    ArrayConfig c40;
    c40.bandwidth = 40e6;
    CHECK(c40.n_subcarriers() == 128);
}

TEST_CASE("single-path trivial channels")
{
    PathParams p; // gain 1, delay 0, angles 0
    auto csi = synthesize_csi({p}, small_config(1, 1, 8));
    for (int k = 0; k < 8; ++k) {
        CHECK(csi[k](0, 0).real() == doctest::Approx(1.0));
        CHECK(csi[k](0, 0).imag() == doctest::Approx(0.0));
    }

    auto row = synthesize_csi({p}, small_config(2, 1, 4));
    for (int k = 0; k < 4; ++k) {
        CHECK(row[k](0, 0).real() == doctest::Approx(1.0));
        CHECK(row[k](0, 1).real() == doctest::Approx(1.0));
        CHECK(std::abs(row[k](0, 1).imag()) < 1e-12);
    }

    CHECK_THROWS_AS(synthesize_csi({}, small_config(1, 1, 4)), std::invalid_argument);
}

TEST_CASE("synthesis matches the brute-force oracle")
{
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        ArrayConfig cfg = small_config(2, 2, 4);
        std::vector<PathParams> paths;
        const int np = rng.uniform_int(1, 3);
        for (int i = 0; i < np; ++i) {
            PathParams p;
            p.gain = std::polar(rng.uniform(0.1, 2.0), rng.uniform(0.0, kTwoPi));
            p.delay = rng.uniform(0.0, 5e-8);
            p.aoa = rng.uniform(-1.3, 1.3);
            p.aod = rng.uniform(-1.3, 1.3);
            paths.push_back(p);
        }
        const auto fast = synthesize_csi(paths, cfg);
        const auto slow = brute_force_csi(paths, cfg);
        for (int k = 0; k < fast.subcarriers; ++k)
            CHECK((fast[k] - slow[k]).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("synthesis is linear in the path set")
{
    Rng rng(77);
    ArrayConfig cfg = small_config(3, 2, 6);
    std::vector<PathParams> a, b;
    for (int i = 0; i < 2; ++i) {
        PathParams p;
        p.gain = std::polar(rng.uniform(0.2, 1.5), rng.uniform(0.0, kTwoPi));
        p.delay = rng.uniform(0.0, 4e-8);
        p.aoa = rng.uniform(-1.0, 1.0);
        p.aod = rng.uniform(-1.0, 1.0);
        a.push_back(p);
        p.gain *= cxd(0.3, 0.1);
        p.delay += 1e-8;
        b.push_back(p);
    }
    std::vector<PathParams> both = a;
    both.insert(both.end(), b.begin(), b.end());
    const auto ha = synthesize_csi(a, cfg);
    const auto hb = synthesize_csi(b, cfg);
    const auto hab = synthesize_csi(both, cfg);
    for (int k = 0; k < hab.subcarriers; ++k)
        CHECK((hab[k] - ha[k] - hb[k]).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("negated delay conjugates the delay phasor")
{
    PathParams p;
    p.gain = cxd(1.0, 0.0);
    p.delay = 2.0e-8;
    ArrayConfig cfg = small_config(1, 1, 5);
    const auto fwd = synthesize_csi({p}, cfg);
    const auto freqs = cfg.subcarrier_freqs();
    for (int k = 0; k < 5; ++k) {
        const cxd expect = std::conj(std::polar(1.0, -kTwoPi * freqs[static_cast<size_t>(k)] * p.delay));
        const cxd neg = std::polar(1.0, kTwoPi * freqs[static_cast<size_t>(k)] * p.delay);
        CHECK(std::abs(expect - neg) < 1e-12);
        CHECK(std::abs(std::conj(fwd[k](0, 0)) - neg) < 1e-12);
    }
}

TEST_CASE("single path gives rank-one subcarrier matrices")
{
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        PathParams p;
        p.gain = std::polar(rng.uniform(0.2, 2.0), rng.uniform(0.0, kTwoPi));
        p.delay = rng.uniform(0.0, 3e-8);
        p.aoa = rng.uniform(-1.2, 1.2);
        p.aod = rng.uniform(-1.2, 1.2);
        const auto csi = synthesize_csi({p}, small_config(4, 2, 3));
        for (int k = 0; k < csi.subcarriers; ++k) {
            Eigen::JacobiSVD<MatC> svd(csi[k]);
            const auto& s = svd.singularValues();
            CHECK(s(1) < 1e-10 * s(0));
        }
    }
}

TEST_CASE("random scenarios are deterministic and well formed")
{
    ScenarioConfig cfg;
    cfg.array = small_config(2, 2, 16);
    const auto a = sample_random_scenario(0, cfg);
    const auto b = sample_random_scenario(0, cfg);
    REQUIRE(a.paths.size() == b.paths.size());
    for (size_t i = 0; i < a.paths.size(); ++i) {
        CHECK(a.paths[i].gain == b.paths[i].gain);
        CHECK(a.paths[i].delay == b.paths[i].delay);
        CHECK(a.paths[i].aoa == b.paths[i].aoa);
        CHECK(a.paths[i].aod == b.paths[i].aod);
    }
    CHECK(a.distance == b.distance);

    // LoS delay equals dist/c; 3 m is about 10.007 ns.
    ScenarioConfig fixed = cfg;
    fixed.dist_min = fixed.dist_max = 3.0;
    const auto sc = sample_random_scenario(9, fixed);
    CHECK(sc.paths[0].delay == doctest::Approx(3.0 / kSpeedOfLight));
    CHECK(sc.paths[0].delay == doctest::Approx(1.0007e-8).epsilon(1e-3));

    ScenarioConfig p3 = cfg;
    p3.path_count_min = p3.path_count_max = 3;
    for (uint64_t seed = 0; seed < 50; ++seed) {
        const auto s3 = sample_random_scenario(seed, p3);
        REQUIRE(s3.paths.size() == 3);
        for (size_t i = 1; i < 3; ++i) {
            CHECK(s3.paths[i].delay > s3.paths[i - 1].delay);
            CHECK(std::abs(s3.paths[i].gain) < std::abs(s3.paths[0].gain));
        }
    }

    ScenarioConfig bad = cfg;
    bad.dist_min = 5.0;
    bad.dist_max = 1.0;
    CHECK_THROWS_AS(sample_random_scenario(1, bad), std::invalid_argument);
}

TEST_CASE("measurement noise hits the requested SNR")
{
    ScenarioConfig cfg;
    cfg.array = small_config(2, 2, 64);
    const auto sc = sample_random_scenario(3, cfg);
    const auto clean = synthesize_csi(sc.paths, sc.array);
    Rng rng(17);
    double sig = 0.0, noise = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const auto noisy = add_measurement_noise(clean, 20.0, rng);
        for (int k = 0; k < clean.subcarriers; ++k) {
            sig += clean[k].squaredNorm();
            noise += (noisy[k] - clean[k]).squaredNorm();
        }
    }
    CHECK(10.0 * std::log10(sig / noise) == doctest::Approx(20.0).epsilon(0.05));
}
