#pragma once

// Small complex-arithmetic kernels shared by the forward flow and the
// inverse (zipper) composition.

#include <cmath>
#include <complex>

namespace sle {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

/// Square root with image in the closed upper half-plane.
///
/// For c off the positive real axis this is the unique root with Im > 0.
/// For c on [0, inf) the root is real and nonnegative. Written out by hand
/// because std::sqrt(complex) dominates the O(N^2) trace kernels.
inline cplx sqrt_upper(cplx c) noexcept {
    const double a = c.real();
    const double b = c.imag();
    if (b == 0.0) {
        if (a >= 0.0) return {std::sqrt(a), 0.0};
        return {0.0, std::sqrt(-a)};
    }
    const double r = std::sqrt(a * a + b * b);
    if (a >= 0.0) {
        const double re = std::sqrt(0.5 * (r + a));
        // re > 0 here since b != 0
        double im = 0.5 * b / re;
        return im >= 0.0 ? cplx{re, im} : cplx{-re, -im};
    }
    const double im = std::sqrt(0.5 * (r - a));
    // im > 0, pick the sign of re so that re * im has the sign of b / 2
    return {0.5 * b / im, im};
}

inline double abs2(cplx z) noexcept { return z.real() * z.real() + z.imag() * z.imag(); }

} // namespace sle
