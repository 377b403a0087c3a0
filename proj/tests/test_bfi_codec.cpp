// SPDX-License-Identifier: Apache-2.0

#include "bfisim/bfi_codec.hpp"
#include "bfisim/channel.hpp"

#include <doctest.h>

#include <cmath>

using namespace bfisim;

namespace {

MatC random_matrix(Rng& rng, int rows, int cols)
{
    MatC h(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) h(r, c) = cxd(rng.normal(), rng.normal());
    return h;
}

// Orthonormal columns with a real non-negative last row, the codec's input
// family, derived through SVD of a random channel.
MatC random_v_tilde(Rng& rng, int m, int ns)
{
    const MatC h = random_matrix(rng, ns, m); // N = ns rows so thin V has ns columns
    const SvdResult svd = compute_svd(h, ns);
    return phase_adjust(svd.v);
}

} // namespace

TEST_CASE("svd of a row vector is normalization")
{
    MatC h(1, 2);
    h << cxd(3.0, 0.0), cxd(4.0, 0.0);
    const SvdResult r = compute_svd(h, 1);
    CHECK(r.sigma(0) == doctest::Approx(5.0));
    // V column is proportional to [3/5, 4/5] up to a unit phase.
    const cxd ratio = r.v(0, 0) / r.v(1, 0);
    CHECK(ratio.real() == doctest::Approx(0.75));
    CHECK(std::abs(ratio.imag()) < 1e-12);
    CHECK(std::abs(r.v(0, 0)) == doctest::Approx(0.6));
    CHECK(std::abs(r.v(1, 0)) == doctest::Approx(0.8));
}

TEST_CASE("svd of identity")
{
    const MatC h = MatC::Identity(2, 2);
    const SvdResult r = compute_svd(h, 2);
    CHECK(r.sigma(0) == doctest::Approx(1.0));
    CHECK(r.sigma(1) == doctest::Approx(1.0));
    CHECK(((r.u * r.v.adjoint()) - MatC::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("svd reconstruction, unitarity, descending order")
{
    Rng rng(11);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = rng.uniform_int(1, 3);
        const int m = rng.uniform_int(1, 4);
        const int ns = std::min(n, m);
        const MatC h = random_matrix(rng, n, m);
        const SvdResult r = compute_svd(h, ns);

        CHECK((r.u.adjoint() * r.u - MatC::Identity(ns, ns)).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((r.v.adjoint() * r.v - MatC::Identity(ns, ns)).cwiseAbs().maxCoeff() < 1e-9);
        for (int i = 1; i < ns; ++i) CHECK(r.sigma(i) <= r.sigma(i - 1));
        for (int i = 0; i < ns; ++i) {
            const VecC lhs = h * r.v.col(i);
            CHECK((lhs - r.sigma(i) * r.u.col(i)).norm() < 1e-8 * (1.0 + r.sigma(i)));
        }
        if (n <= m) { // thin SVD is exact when all streams are kept
            const MatC back = r.u * r.sigma.asDiagonal() * r.v.adjoint();
            CHECK((back - h).cwiseAbs().maxCoeff() / h.cwiseAbs().maxCoeff() < 1e-8);
        }
    }
    CHECK_THROWS_AS(compute_svd(MatC::Constant(1, 1, cxd(std::nan(""), 0.0)), 1), std::invalid_argument);
}

TEST_CASE("phase adjust examples")
{
    MatC v(2, 1);
    v << cxd(1.0, 0.0), cxd(0.0, 1.0);
    const MatC adj = phase_adjust(v);
    CHECK(std::abs(adj(0, 0) - cxd(0.0, -1.0)) < 1e-12);
    CHECK(std::abs(adj(1, 0) - cxd(1.0, 0.0)) < 1e-12);

    MatC pos(2, 1);
    pos << cxd(0.6, 0.0), cxd(0.8, 0.0);
    CHECK((phase_adjust(pos) - pos).cwiseAbs().maxCoeff() < 1e-15);

    Rng rng(23);
    for (int t = 0; t < 30; ++t) {
        const MatC vt = random_v_tilde(rng, 4, 2);
        for (int c = 0; c < vt.cols(); ++c) {
            CHECK(std::abs(vt(3, c).imag()) < 1e-12);
            CHECK(vt(3, c).real() >= -1e-12);
        }
    }

    // magnitudes preserved
    Rng rng2(29);
    const MatC x = random_matrix(rng2, 3, 2);
    CHECK((phase_adjust(x).cwiseAbs() - x.cwiseAbs()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("givens extraction on hand-checked columns")
{
    // Real equal-amplitude column: phi = 0, psi = pi/4.
    MatC v(2, 1);
    v << cxd(1.0 / std::sqrt(2.0), 0.0), cxd(1.0 / std::sqrt(2.0), 0.0);
    auto a = extract_givens_angles(v);
    REQUIRE(a.phi.size() == 1);
    CHECK(a.phi[0][0] == doctest::Approx(0.0));
    CHECK(a.psi[0][0] == doctest::Approx(kPi / 4.0));

    // [e^{j pi/3}/2, sqrt(3)/2]: phi = pi/3 and cos(psi) = 1/2.
    MatC w(2, 1);
    w << std::polar(0.5, kPi / 3.0), cxd(std::sqrt(3.0) / 2.0, 0.0);
    a = extract_givens_angles(w);
    CHECK(a.phi[0][0] == doctest::Approx(kPi / 3.0));
    CHECK(std::cos(a.psi[0][0]) == doctest::Approx(0.5));
    const MatC back = reconstruct_v_tilde(a, 2, 1);
    CHECK((back - w).cwiseAbs().maxCoeff() < 1e-12);

    // Zeroed top amplitude: psi lands on pi/2 with phi = 0 by convention.
    MatC z(2, 1);
    z << cxd(0.0, 0.0), cxd(1.0, 0.0);
    a = extract_givens_angles(z);
    CHECK(a.phi[0][0] == doctest::Approx(0.0));
    CHECK(a.psi[0][0] == doctest::Approx(kPi / 2.0));

    MatC bad(2, 1);
    bad << cxd(2.0, 0.0), cxd(1.0, 0.0);
    CHECK_THROWS_AS(extract_givens_angles(bad), std::invalid_argument);
}

TEST_CASE("reconstruct_v_tilde trivial cases")
{
    GivensAngles a;
    a.phi = {{0.0}};
    a.psi = {{kPi / 4.0}};
    const MatC v = reconstruct_v_tilde(a, 2, 1);
    CHECK(v(0, 0).real() == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(v(1, 0).real() == doctest::Approx(1.0 / std::sqrt(2.0)));

    // All psi = 0 degenerates to phases on the identity columns.
    GivensAngles d;
    d.phi = {{kPi / 3.0, kPi / 5.0}};
    d.psi = {{0.0, 0.0}};
    const MatC vd = reconstruct_v_tilde(d, 3, 1);
    CHECK(std::abs(vd(0, 0) - std::polar(1.0, kPi / 3.0)) < 1e-12);
    CHECK(std::abs(vd(1, 0)) < 1e-12);
    CHECK(std::abs(vd(2, 0)) < 1e-12);

    GivensAngles malformed;
    malformed.phi = {{0.0}};
    malformed.psi = {{0.0, 0.0}};
    CHECK_THROWS_AS(reconstruct_v_tilde(malformed, 2, 1), std::invalid_argument);
}

TEST_CASE("extract/reconstruct round trip on random unitaries")
{
    Rng rng(101);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int m = rng.uniform_int(2, 4);
        const int ns = rng.uniform_int(1, std::min(m, 2));
        const MatC vt = random_v_tilde(rng, m, ns);
        const GivensAngles a = extract_givens_angles(vt);
        for (const auto& row : a.phi)
            for (double x : row) CHECK((x >= 0.0 && x < kTwoPi));
        for (const auto& row : a.psi)
            for (double x : row) CHECK((x >= 0.0 && x <= kPi / 2.0));
        const MatC back = reconstruct_v_tilde(a, m, ns);
        worst = std::max(worst, (back - vt).cwiseAbs().maxCoeff());
        CHECK((back.adjoint() * back - MatC::Identity(ns, ns)).cwiseAbs().maxCoeff() < 1e-10);
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("quantizer codebook floors and half-step bound")
{
    QuantConfig q; // (4, 6)
    // psi = 0 snaps to the smallest codeword pi/64.
    const auto one = quantize_angles(GivensAngles{{{0.0}}, {{0.0}}}, q);
    CHECK(dequantize_psi(one.psi[0][0], 4) == doctest::Approx(kPi / 64.0));

    // phi = pi dequantizes within a half step (pi/64) of pi.
    const auto two = quantize_angles(GivensAngles{{{kPi}}, {{0.3}}}, q);
    CHECK(std::abs(dequantize_phi(two.phi[0][0], 6) - kPi) <= kPi / 64.0 + 1e-12);

    Rng rng(7);
    double worst_phi = 0.0, worst_psi = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double phi = rng.uniform(0.0, kTwoPi);
        const double psi = rng.uniform(0.0, kPi / 2.0);
        const auto idx = quantize_angles(GivensAngles{{{phi}}, {{psi}}}, q);
        const auto ang = dequantize_angles(idx, q);
        double dphi = std::abs(ang.phi[0][0] - phi);
        dphi = std::min(dphi, kTwoPi - dphi); // wraparound
        worst_phi = std::max(worst_phi, dphi);
        worst_psi = std::max(worst_psi, std::abs(ang.psi[0][0] - psi));
    }
    CHECK(worst_phi <= kPi / 64.0 + 1e-12);      // half of 2pi/2^6
    CHECK(worst_psi <= kPi / 64.0 + 1e-12);      // half of (pi/2)/2^4
}

TEST_CASE("asnr follows the dB-average formula")
{
    QuantConfig q;
    Eigen::MatrixXd sigma(4, 1);
    sigma.setConstant(5.0);
    auto ups = compute_asnr(sigma, 1.0, 1.0, q);
    // 10*log10(25) = 13.979 dB, rounded to 14.00 at the 0.25 dB step.
    CHECK(ups[0] == doctest::Approx(14.0));

    Eigen::MatrixXd two(2, 1);
    two << 2.0, 8.0;
    // mean of 10log10(4) and 10log10(64) = 12.0412; step rounding gives 12.0.
    const double exact = 0.5 * (10.0 * std::log10(4.0) + 10.0 * std::log10(64.0));
    CHECK(exact == doctest::Approx(12.0412).epsilon(1e-4));
    QuantConfig fine = q;
    fine.asnr_step_db = 1e-9; // effectively unquantized
    CHECK(compute_asnr(two, 1.0, 1.0, fine)[0] == doctest::Approx(exact));

    // a 100x power ratio shifts the answer by exactly +20 dB
    CHECK(compute_asnr(two, 100.0, 1.0, fine)[0] == doctest::Approx(exact + 20.0));

    bool floor_hit = false;
    Eigen::MatrixXd zero(1, 1);
    zero << 0.0;
    compute_asnr(zero, 1.0, 1.0, q, &floor_hit);
    CHECK(floor_hit);
}

TEST_CASE("asnr inversion recovers the geometric mean")
{
    CHECK(asnr_to_sigma_bar(13.979, 1.0, 1.0) == doctest::Approx(5.0).epsilon(1e-3));

    QuantConfig fine;
    fine.asnr_step_db = 1e-9;
    fine.asnr_min_db = -200.0;
    fine.asnr_max_db = 200.0;
    Eigen::MatrixXd two(2, 1);
    two << 2.0, 8.0;
    const double sbar = asnr_to_sigma_bar(compute_asnr(two, 1.0, 1.0, fine)[0], 1.0, 1.0);
    CHECK(sbar == doctest::Approx(4.0)); // geometric mean sqrt(16)

    // quadrupling P_TX/P_N halves sigma_bar at fixed ASNR
    CHECK(asnr_to_sigma_bar(10.0, 4.0, 1.0) == doctest::Approx(0.5 * asnr_to_sigma_bar(10.0, 1.0, 1.0)));

    Rng rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const int k = rng.uniform_int(2, 16);
        Eigen::MatrixXd s(k, 1);
        double geo = 0.0;
        for (int i = 0; i < k; ++i) {
            s(i, 0) = rng.uniform(0.05, 8.0);
            geo += std::log(s(i, 0));
        }
        geo = std::exp(geo / k);
        const double round_trip = asnr_to_sigma_bar(compute_asnr(s, 2.0, 0.5, fine)[0], 2.0, 0.5);
        CHECK(round_trip == doctest::Approx(geo).epsilon(1e-9));
    }
}

TEST_CASE("encode_bfi on a flat 1x2 channel")
{
    CsiTensor csi(8, 1, 2);
    for (int k = 0; k < 8; ++k) {
        csi[k](0, 0) = cxd(3.0, 0.0);
        csi[k](0, 1) = cxd(4.0, 0.0);
    }
    QuantConfig q;
    const BfiReport rep = encode_bfi(csi, q, 1.0, 1.0);
    CHECK(rep.streams == 1);
    CHECK(rep.tx_antennas == 2);
    CHECK(rep.asnr_db[0] == doctest::Approx(14.0)); // sigma = 5 everywhere

    // angles decode to |V| close to [3/5, 4/5]
    const MatC vt = report_v_tilde(rep, 0);
    CHECK(std::abs(vt(0, 0)) == doctest::Approx(0.6).epsilon(0.05));
    CHECK(std::abs(vt(1, 0)) == doctest::Approx(0.8).epsilon(0.05));
}

TEST_CASE("encode_bfi handles degenerate identity channels")
{
    CsiTensor csi(4, 2, 2);
    for (int k = 0; k < 4; ++k) csi[k] = MatC::Identity(2, 2);
    const BfiReport rep = encode_bfi(csi, QuantConfig{}, 1.0, 1.0);
    CHECK(rep.streams == 2);
    REQUIRE(rep.angles.size() == 4);
    for (const auto& a : rep.angles) {
        REQUIRE(a.phi.size() == 1); // min(Ns, M-1) = 1 column processed
        CHECK(a.phi[0].size() == 1);
        CHECK(a.psi[0].size() == 1);
    }
    const MatC vt = report_v_tilde(rep, 0);
    CHECK((vt.adjoint() * vt - MatC::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("report round trip stays within the quantization bound")
{
    Rng rng(301);
    ScenarioConfig sc;
    sc.array.tx_antennas = 2;
    sc.array.rx_antennas = 2;
    sc.array.subcarrier_count = 16;
    double worst = 0.0;
    for (int trial = 0; trial < 30; ++trial) {
        const auto scenario = sample_random_scenario(rng, sc);
        const auto csi = synthesize_csi(scenario.paths, scenario.array);
        const auto rep = encode_bfi(csi, QuantConfig{}, 1.0, 1e-3);
        for (int k = 0; k < rep.subcarriers; ++k) {
            const SvdResult svd = compute_svd(csi[k], rep.streams);
            const MatC truth = phase_adjust(svd.v);
            const MatC dec = report_v_tilde(rep, k);
            worst = std::max(worst, (dec.cwiseAbs() - truth.cwiseAbs()).cwiseAbs().maxCoeff());
        }
    }
    CHECK(worst <= 0.08);
}

TEST_CASE("real positive scaling leaves angles alone and shifts ASNR")
{
    Rng rng(41);
    ScenarioConfig sc;
    sc.array.tx_antennas = 3;
    sc.array.rx_antennas = 2;
    sc.array.subcarrier_count = 8;
    const auto scenario = sample_random_scenario(rng, sc);
    auto csi = synthesize_csi(scenario.paths, scenario.array);

    QuantConfig fine;
    fine.asnr_step_db = 1e-9;
    fine.asnr_min_db = -300.0;
    fine.asnr_max_db = 300.0;
    const auto rep1 = encode_bfi(csi, fine, 1.0, 1e-3);

    CsiTensor scaled = csi;
    const double alpha = 2.5;
    for (auto& hk : scaled.h) hk *= alpha;
    const auto rep2 = encode_bfi(scaled, fine, 1.0, 1e-3);

    for (int k = 0; k < rep1.subcarriers; ++k) {
        CHECK(rep1.angles[static_cast<size_t>(k)].phi == rep2.angles[static_cast<size_t>(k)].phi);
        CHECK(rep1.angles[static_cast<size_t>(k)].psi == rep2.angles[static_cast<size_t>(k)].psi);
    }
    for (size_t i = 0; i < rep1.asnr_db.size(); ++i)
        CHECK(rep2.asnr_db[i] - rep1.asnr_db[i] == doctest::Approx(20.0 * std::log10(alpha)).epsilon(1e-6));
}
