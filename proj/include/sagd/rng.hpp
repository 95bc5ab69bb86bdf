#pragma once

#include <cmath>
#include <cstdint>

namespace sagd {

// SplitMix64 finalizer. Used both as a stream-seed mixer and, iterated, as
// the uniform generator itself (it passes BigCrush and is trivially
// reproducible across platforms, unlike std::normal_distribution).
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Derive an independent stream seed for (sample, channel) from a master
/// seed. Counter-based: the stream for a given triple never depends on how
/// the batch is chunked or which thread draws it.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t sample, std::uint64_t channel) {
    std::uint64_t h = mix64(seed ^ 0xD6E8FEB86659FD93ULL);
    h = mix64(h ^ (sample + 0x9E3779B97F4A7C15ULL));
    h = mix64(h ^ (channel + 0xC2B2AE3D27D4EB4FULL));
    return h;
}

/// Deterministic Gaussian stream (SplitMix64 + Box-Muller).
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_bits() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in (0, 1]; never 0, so log() below is safe.
    double next_uniform() {
        return static_cast<double>((next_bits() >> 11) + 1) * 0x1.0p-53;
    }

    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_uniform();
        double u2 = next_uniform();
        double mag = std::sqrt(-2.0 * std::log(u1));
        double ang = 6.283185307179586476925286766559 * u2;
        spare_ = mag * std::sin(ang);
        have_spare_ = true;
        return mag * std::cos(ang);
    }

    void fill_gaussian(double* out, long n) {
        for (long i = 0; i < n; ++i) out[i] = next_gaussian();
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace sagd
