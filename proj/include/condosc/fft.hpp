#pragma once

// Minimal iterative radix-2 FFT, enough for the tabulated spectral paths.
// transform(x, +1) computes X_k = sum_n x_n exp(+2 pi i k n / N) without
// normalization; the inverse is transform(x, -1) divided by N.

#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace condosc::fft {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline void transform(std::vector<std::complex<double>>& x, int sign) {
    const std::size_t n = x.size();
    if (!is_power_of_two(n)) throw std::invalid_argument("fft: size must be a power of two");
    if (sign != 1 && sign != -1) throw std::invalid_argument("fft: sign must be +-1");

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto u = x[i + k];
                const auto v = x[i + k + len / 2] * w;
                x[i + k] = u + v;
                x[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

inline void inverse(std::vector<std::complex<double>>& x) {
    transform(x, -1);
    const double norm = 1.0 / static_cast<double>(x.size());
    for (auto& v : x) v *= norm;
}

}  // namespace condosc::fft
