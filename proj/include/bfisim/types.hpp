// SPDX-License-Identifier: Apache-2.0
//
// bfisim — beamforming-feedback channel reconstruction and spoofing simulator

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace bfisim {

using cxd = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;
using VecD = Eigen::VectorXd;

inline constexpr double kSpeedOfLight = 299792458.0; // m/s
inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

// How a data-parallel kernel is driven. The serial path is the reference;
// the parallel path must produce bit-identical output for any thread count.
enum class ExecMode { serial, parallel };

// Uniform linear arrays at both ends, AP = beamformer (M antennas),
// STA = beamformee (N antennas).
struct ArrayConfig {
    int tx_antennas = 2;          // M, AP side
    int rx_antennas = 2;          // N, STA side
    int streams = 0;              // N_s; 0 means min(M, N)
    double spacing = 0.0;         // element spacing in meters; 0 means half wavelength
    double carrier_freq = 5.18e9; // Hz
    double bandwidth = 20e6;      // Hz
    int subcarrier_count = 0;     // K; 0 means standard count for the bandwidth

    int n_streams() const { return streams > 0 ? streams : std::min(tx_antennas, rx_antennas); }

    int n_subcarriers() const
    {
        if (subcarrier_count > 0) return subcarrier_count;
        if (bandwidth >= 80e6) return 256;
        if (bandwidth >= 40e6) return 128;
        return 64;
    }

    double element_spacing() const
    {
        return spacing > 0.0 ? spacing : 0.5 * kSpeedOfLight / carrier_freq;
    }

    // K equally spaced frequencies centered on the carrier, span exactly B.
    std::vector<double> subcarrier_freqs() const
    {
        const int k = n_subcarriers();
        std::vector<double> f(static_cast<size_t>(k));
        if (k == 1) {
            f[0] = carrier_freq;
            return f;
        }
        const double lo = carrier_freq - 0.5 * bandwidth;
        for (int i = 0; i < k; ++i)
            f[static_cast<size_t>(i)] = lo + bandwidth * static_cast<double>(i) / static_cast<double>(k - 1);
        return f;
    }

    void validate() const
    {
        if (tx_antennas < 1 || rx_antennas < 1) throw std::invalid_argument("antenna counts must be positive");
        if (n_streams() > std::min(tx_antennas, rx_antennas))
            throw std::invalid_argument("stream count exceeds min(M, N)");
        if (carrier_freq <= 0.0 || bandwidth <= 0.0) throw std::invalid_argument("carrier/bandwidth must be positive");
        if (element_spacing() <= 0.0) throw std::invalid_argument("element spacing must be positive");
        if (n_subcarriers() < 1) throw std::invalid_argument("subcarrier count must be positive");
    }
};

// One propagation path of the geometric multipath model.
struct PathParams {
    cxd gain{1.0, 0.0};  // complex attenuation, |gain| > 0
    double delay = 0.0;  // seconds, >= 0
    double aoa = 0.0;    // radians, arrival angle at the STA array, (-pi/2, pi/2)
    double aod = 0.0;    // radians, departure angle at the AP array, (-pi/2, pi/2)
};

// Per-subcarrier complex channel matrices, h[k] is N x M (STA rows, AP columns).
struct CsiTensor {
    int subcarriers = 0; // K
    int rx = 0;          // N
    int tx = 0;          // M
    std::vector<MatC> h;

    CsiTensor() = default;
    CsiTensor(int k, int n, int m)
        : subcarriers(k), rx(n), tx(m), h(static_cast<size_t>(k), MatC::Zero(n, m))
    {
    }

    MatC& operator[](int k) { return h[static_cast<size_t>(k)]; }
    const MatC& operator[](int k) const { return h[static_cast<size_t>(k)]; }

    bool same_shape(const CsiTensor& o) const
    {
        return subcarriers == o.subcarriers && rx == o.rx && tx == o.tx;
    }

    // Flattened amplitude vector ordered subcarrier-major, then (v, u) pairs in
    // row-major order; the layout every template/key consumer relies on.
    std::vector<double> amplitudes() const
    {
        std::vector<double> a;
        a.reserve(static_cast<size_t>(subcarriers) * static_cast<size_t>(rx) * static_cast<size_t>(tx));
        for (const auto& hk : h)
            for (int v = 0; v < rx; ++v)
                for (int u = 0; u < tx; ++u) a.push_back(std::abs(hk(v, u)));
        return a;
    }
};

} // namespace bfisim
