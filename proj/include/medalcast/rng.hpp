#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace medalcast {

/// FNV-1a 64-bit hash. Used to derive per-module / per-value RNG streams so
/// draws never depend on platform std::hash or on insertion order.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// SplitMix64: tiny, fast, and fully reproducible across platforms.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform in [-1, 1).
    double uniform_sym() { return 2.0 * uniform() - 1.0; }

    /// Standard normal via Box-Muller; deterministic (no cached spare).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    /// Integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next() % n; }

private:
    std::uint64_t state_;
};

/// Derives an independent stream from the run seed and a stream name, so
/// adding a consumer never perturbs the draws of another.
inline SplitMix64 named_stream(std::uint64_t seed, std::string_view name) {
    SplitMix64 mixer(seed ^ fnv1a(name));
    // One warm-up round decorrelates nearby seeds.
    mixer.next();
    return mixer;
}

/// Stream keyed by (seed, name, index); used for per-cell / per-value draws.
inline SplitMix64 named_stream(std::uint64_t seed, std::string_view name,
                               std::uint64_t index) {
    SplitMix64 mixer(seed ^ fnv1a(name) ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
    mixer.next();
    return mixer;
}

} // namespace medalcast
