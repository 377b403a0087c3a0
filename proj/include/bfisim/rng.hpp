// SPDX-License-Identifier: Apache-2.0
//
// bfisim — beamforming-feedback channel reconstruction and spoofing simulator

#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace bfisim {

// Deterministic PRNG with platform-independent output. Every random quantity
// in the pipeline flows from one root seed through named substreams, so
// toggling one stage never perturbs the draws of another.
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(splitmix(seed ^ 0x9e3779b97f4a7c15ULL)) {}

    static uint64_t substream_seed(uint64_t root, std::string_view name, uint64_t index)
    {
        // FNV-1a over the name, then mixed with root and index.
        uint64_t h = 1469598103934665603ULL;
        for (char c : name) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ULL;
        }
        h ^= splitmix(root + 0x632be59bd9b4e019ULL);
        h ^= splitmix(index + 0xd1b54a32d192ed03ULL);
        return splitmix(h);
    }

    static Rng substream(uint64_t root, std::string_view name, uint64_t index = 0)
    {
        return Rng(substream_seed(root, name, index));
    }

    uint64_t next_u64()
    {
        // xorshift64* keeps the generator tiny and byte-stable everywhere.
        uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545F4914F6CDD1DULL;
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int uniform_int(int lo, int hi) // inclusive bounds
    {
        const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(next_u64() % span);
    }

    // Standard normal via Box-Muller; no cached state so draws stay
    // reproducible under any call interleaving.
    double normal()
    {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

  private:
    static uint64_t splitmix(uint64_t x)
    {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    uint64_t state_;
};

} // namespace bfisim
