#pragma once

// Closed-form regularity exponents of SLE_kappa traces.

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sle {

struct ExponentTable {
    double kappa = 0.0;
    double d = 0.0;     ///< psi-variation exponent, min(1 + kappa/8, 2)
    double alpha = 0.0; ///< Hoelder exponent
    double beta = 0.0;  ///< logarithmic exponent
    double p = 0.0;     ///< 1 / beta
    bool critical = false; ///< kappa = 8, where the Hoelder statement is excluded
};

inline ExponentTable exponent_formulas(double kappa) {
    if (!(kappa > 0.0)) throw std::domain_error("exponent_formulas: kappa must be positive");
    ExponentTable e;
    e.kappa = kappa;
    e.d = std::min(1.0 + kappa / 8.0, 2.0);
    const double s = std::sqrt(8.0 + kappa);
    e.alpha = 1.0 - kappa / (24.0 + 2.0 * kappa - 8.0 * s);
    e.beta = kappa / ((12.0 + kappa) * s - 4.0 * (8.0 + kappa));
    e.p = 1.0 / e.beta;
    e.critical = std::abs(kappa - 8.0) < 1e-12;
    if (e.critical) {
        // sqrt(16) = 4 makes both denominators exact
        e.alpha = 0.0;
        e.beta = 0.5;
        e.p = 2.0;
    }
    return e;
}

/// p from the optimised moment exponent a = (16 - 4 sqrt(kappa + 8)) / kappa.
inline double exponent_p_from_moments(double kappa) {
    if (!(kappa > 0.0)) throw std::domain_error("exponent_p_from_moments: kappa must be positive");
    const double a = (16.0 - 4.0 * std::sqrt(kappa + 8.0)) / kappa;
    return 2.0 - a * a * kappa / 8.0 - a * kappa / 4.0 + a;
}

} // namespace sle
