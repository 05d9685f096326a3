#pragma once

#include <cstdint>

namespace rbsde::rng {

// Counter-based generator built on the splitmix64 output function: the
// n-th draw of a stream is mix64(seed + (n+1)*GAMMA), so any cell of any
// stream can be produced in O(1) from (seed, index) alone. That is what
// makes parallel and serial path loops bit-identical.

inline constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// n-th 64-bit output of the stream keyed by `seed` (n starts at 0).
inline std::uint64_t at(std::uint64_t seed, std::uint64_t n) {
    return mix64(seed + (n + 1) * kGamma);
}

/// Decorrelates purpose-tagged sub-seeds from one user seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return mix64(seed + kGamma) ^ mix64(tag * 0xD1B54A32D192ED03ULL + kGamma);
}

/// Uniform on (0,1): centered 52-bit bins, never returns 0 or 1.
inline double to_uniform(std::uint64_t bits) {
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

/// Inverse of the standard normal CDF (Wichura's PPND16 rational
/// approximation, accurate to ~1e-16 over (0,1)).
double normal_icdf(double p);

inline double normal_at(std::uint64_t seed, std::uint64_t n) {
    return normal_icdf(to_uniform(at(seed, n)));
}

/// Small sequential stream for test fixtures and random sampling where
/// counter addressing is not needed.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : seed_(seed), n_(0) {}

    std::uint64_t next_bits() { return at(seed_, n_++); }
    double next_uniform() { return to_uniform(next_bits()); }
    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * next_uniform();
    }
    double next_normal() { return normal_icdf(next_uniform()); }
    std::uint64_t next_index(std::uint64_t m) { return next_bits() % m; }

private:
    std::uint64_t seed_;
    std::uint64_t n_;
};

} // namespace rbsde::rng
