#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace roomtone {

// Deterministic random source. The mt19937_64 stream is pinned by the
// standard and the mappings below are hand-rolled, so a given seed produces
// the same values on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; u is kept away from 0.
    double normal() {
        const double u = double((engine_() >> 11) + 1) * 0x1.0p-53;
        const double v = uniform();
        return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * 3.141592653589793238462643 * v);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    // Normal truncated to [0, inf) by rejection; clamps after too many
    // rejections so a badly-shifted spec cannot hang the generator.
    double truncated_normal(double mean, double sigma) {
        if (sigma <= 0.0) return mean > 0.0 ? mean : 0.0;
        for (int attempt = 0; attempt < 1000; ++attempt) {
            const double x = normal(mean, sigma);
            if (x >= 0.0) return x;
        }
        return 0.0;
    }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

// FNV-1a, used to derive per-room substreams and to fingerprint configs.
inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 14695981039346656037ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
    std::uint64_t h = fnv1a64(label);
    // splitmix64 finalizer over the combination keeps per-label streams apart.
    std::uint64_t z = master ^ (h + 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace roomtone
