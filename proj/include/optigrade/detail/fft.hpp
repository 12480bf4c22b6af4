#pragma once
// fft.hpp - iterative radix-2 FFT for power-of-two sizes, plus the 2-D
// transform and center shift used by the diffraction simulation.

#include <complex>
#include <vector>

#include "optigrade/common.hpp"

namespace optigrade::detail {

/// In-place forward DFT. n must be a power of two.
inline void fft(std::complex<double>* a, int n) {
    // bit-reversal permutation
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        double ang = -2.0 * 3.141592653589793238462643383279502884 / len;
        std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (int k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

/// Forward 2-D DFT of a square grid, rows then columns.
inline void fft2d(std::vector<std::complex<double>>& a, int n) {
    for (int y = 0; y < n; ++y) fft(a.data() + size_t(y) * n, n);
    std::vector<std::complex<double>> col(n);
    for (int x = 0; x < n; ++x) {
        for (int y = 0; y < n; ++y) col[y] = a[size_t(y) * n + x];
        fft(col.data(), n);
        for (int y = 0; y < n; ++y) a[size_t(y) * n + x] = col[y];
    }
}

/// Squared magnitude of the 2-D DFT with the zero-frequency bin moved to
/// the grid center (n/2, n/2).
inline Grid<double> power_spectrum_centered(const Grid<double>& in) {
    const int n = in.width;
    std::vector<std::complex<double>> buf(size_t(n) * n);
    for (size_t i = 0; i < buf.size(); ++i) buf[i] = in.data[i];
    fft2d(buf, n);
    Grid<double> out(n, n);
    const int half = n / 2;
    for (int y = 0; y < n; ++y) {
        int sy = (y + half) % n;  // out row y <- raw row (y+half) mod n
        for (int x = 0; x < n; ++x) {
            int sx = (x + half) % n;
            out.at(y, x) = std::norm(buf[size_t(sy) * n + sx]);
        }
    }
    return out;
}

}  // namespace optigrade::detail
