#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>

namespace quadmod {

// Deterministic random stream. A (seed, stream, substream) triple fully
// determines the sequence on every platform: mt19937_64 has a fixed spec,
// and the uniform/Gaussian transforms below avoid std::distributions,
// whose output is implementation-defined.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t substream = 0) {
        std::seed_seq seq{
            static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
            static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
            static_cast<std::uint32_t>(substream), static_cast<std::uint32_t>(substream >> 32),
            0x9e3779b9u};
        eng_.seed(seq);
    }

    std::uint64_t next_u64() { return eng_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). Rejection keeps it exactly unbiased.
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Standard normal via the polar (Marsaglia) method; second value cached.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

  private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Identifies a stream without holding generator state; simulation entry
// points take a key so they can derive independent substreams internally.
struct RngKey {
    std::uint64_t seed = 1;
    std::uint64_t stream = 0;

    RngStream substream(std::uint64_t substream_id) const {
        return RngStream(seed, stream, substream_id);
    }
};

}  // namespace quadmod
