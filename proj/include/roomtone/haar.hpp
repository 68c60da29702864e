#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace roomtone {

namespace detail {

inline bool is_pow2(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

inline void require_pow2(std::size_t n, const char* what) {
    if (!is_pow2(n))
        throw std::invalid_argument(std::string(what) + ": length must be a power of two >= 2, got " +
                                    std::to_string(n));
}

}  // namespace detail

// Full orthonormal Haar decomposition. For an 8-vector this yields 1 scaling
// coefficient followed by 7 detail coefficients in coarse-to-fine order:
// [s, d_level3, d_level2 x2, d_level1 x4]. Orthonormal convention, so the
// transform preserves the Euclidean norm exactly (Parseval).
inline std::vector<double> haar_transform(std::span<const double> signal) {
    detail::require_pow2(signal.size(), "haar_transform");
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    std::vector<double> out(signal.begin(), signal.end());
    std::vector<double> tmp(signal.size());
    for (std::size_t len = signal.size(); len >= 2; len /= 2) {
        const std::size_t half = len / 2;
        for (std::size_t i = 0; i < half; ++i) {
            tmp[i] = (out[2 * i] + out[2 * i + 1]) * inv_sqrt2;         // smooth
            tmp[half + i] = (out[2 * i] - out[2 * i + 1]) * inv_sqrt2;  // detail
        }
        std::copy(tmp.begin(), tmp.begin() + len, out.begin());
    }
    return out;
}

inline std::vector<double> inverse_haar(std::span<const double> coeffs) {
    detail::require_pow2(coeffs.size(), "inverse_haar");
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    std::vector<double> out(coeffs.begin(), coeffs.end());
    std::vector<double> tmp(coeffs.size());
    for (std::size_t len = 2; len <= coeffs.size(); len *= 2) {
        const std::size_t half = len / 2;
        for (std::size_t i = 0; i < half; ++i) {
            tmp[2 * i] = (out[i] + out[half + i]) * inv_sqrt2;
            tmp[2 * i + 1] = (out[i] - out[half + i]) * inv_sqrt2;
        }
        std::copy(tmp.begin(), tmp.begin() + len, out.begin());
    }
    return out;
}

// 8-bin convenience wrappers.
struct HaarCoefficients {
    std::array<double, 8> values{};
};

inline HaarCoefficients haar_transform(const std::array<double, 8>& signal) {
    auto v = haar_transform(std::span<const double>(signal));
    HaarCoefficients c;
    std::copy(v.begin(), v.end(), c.values.begin());
    return c;
}

inline std::array<double, 8> inverse_haar(const HaarCoefficients& coeffs) {
    auto v = inverse_haar(std::span<const double>(coeffs.values));
    std::array<double, 8> out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

}  // namespace roomtone
