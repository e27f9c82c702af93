#pragma once

// psi-variation and Hoelder-type moduli of sampled planar paths.

#include "slelab/complex_util.hpp"
#include "slelab/io.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace sle {

/// max(log x, 1).
inline double log_star(double x) {
    if (!(x > 0.0)) throw std::domain_error("log_star: argument must be positive");
    return std::max(std::log(x), 1.0);
}

/// Gauge psi_{p,q}: x^p (log 1/x)^{-q} on [0, x0], continued beyond x0 so that
/// psi^{1/p} is affine there with matching slope.
class PsiSpec {
public:
    PsiSpec(double p, double q = 0.0, double x0 = 0.5) : p_(p), q_(q), x0_(x0) {
        if (!(p >= 1.0)) throw std::invalid_argument("PsiSpec: p must be >= 1");
        if (!(q >= 0.0)) throw std::invalid_argument("PsiSpec: q must be >= 0");
        if (!(x0 > 0.0 && x0 < 1.0)) throw std::invalid_argument("PsiSpec: x0 must lie in (0,1)");
        const double r = q_ / p_;
        const double L0 = std::log(1.0 / x0_);
        root_at_x0_ = x0_ * std::pow(L0, -r);
        root_slope_ = std::pow(L0, -r) * (1.0 + r / L0);
    }

    double p() const noexcept { return p_; }
    double q() const noexcept { return q_; }
    double x0() const noexcept { return x0_; }
    bool pure_power() const noexcept { return q_ == 0.0; }

    double operator()(double x) const {
        if (!(x >= 0.0)) throw std::domain_error("psi: argument must be nonnegative");
        if (x == 0.0) return 0.0;
        if (q_ == 0.0) return p_ == 1.0 ? x : std::pow(x, p_);
        if (x <= x0_) return std::pow(x, p_) * std::pow(std::log(1.0 / x), -q_);
        return std::pow(root_at_x0_ + root_slope_ * (x - x0_), p_);
    }

    /// Inverse gauge: the unique x >= 0 with psi(x) = y.
    double inverse(double y) const {
        if (!(y >= 0.0)) throw std::domain_error("psi inverse: argument must be nonnegative");
        if (y == 0.0) return 0.0;
        const double root = std::pow(y, 1.0 / p_);
        if (q_ == 0.0) return root;
        if (root >= root_at_x0_) return x0_ + (root - root_at_x0_) / root_slope_;
        auto f = [&](double x) { return (*this)(x) - y; };
        auto tol = boost::math::tools::eps_tolerance<double>(52);
        auto [a, b] = boost::math::tools::bisect(f, 0.0, x0_, tol);
        return 0.5 * (a + b);
    }

private:
    double p_, q_, x0_;
    double root_at_x0_ = 0.0; ///< psi(x0)^{1/p}
    double root_slope_ = 0.0; ///< (psi^{1/p})'(x0)
};

/// phi(t) = t^alpha (log* 1/t)^beta l(log* 1/t)^beta with l(s) = (log* s)^{1+eps}.
/// With `with_ell` false the l factor is dropped.
struct ModulusSpec {
    double alpha = 0.5;
    double beta = 0.0;
    double ell_epsilon = 0.1;
    bool with_ell = true;

    constexpr void validate() const {
        if (!(ell_epsilon > 0.0)) throw std::invalid_argument("ModulusSpec: ell_epsilon must be positive");
    }
};

inline double ell(const ModulusSpec& m, double s) { return std::pow(log_star(s), 1.0 + m.ell_epsilon); }

inline double modulus(const ModulusSpec& m, double t) {
    if (!(t > 0.0)) throw std::domain_error("modulus: argument must be positive");
    const double L = log_star(1.0 / t);
    double v = std::pow(t, m.alpha) * std::pow(L, m.beta);
    if (m.with_ell) v *= std::pow(ell(m, L), m.beta);
    return v;
}

/// True when phi is nondecreasing across `samples` log-spaced points of [t_min, t_max].
inline bool modulus_nondecreasing(const ModulusSpec& m, double t_min, double t_max, int samples = 2000) {
    double prev = modulus(m, t_min);
    for (int i = 1; i < samples; ++i) {
        const double t = t_min * std::pow(t_max / t_min, static_cast<double>(i) / (samples - 1));
        const double cur = modulus(m, t);
        if (cur < prev * (1.0 - 1e-13)) return false;
        prev = cur;
    }
    return true;
}

/// Planar path sampled at strictly increasing times.
struct SampledPath {
    std::vector<double> times;
    std::vector<cplx> points;

    SampledPath() = default;
    SampledPath(std::vector<double> t, std::vector<cplx> z) : times(std::move(t)), points(std::move(z)) {
        validate();
    }

    std::size_t size() const noexcept { return times.size(); }

    void validate() const {
        if (times.size() != points.size()) throw std::invalid_argument("SampledPath: array lengths differ");
        if (times.size() < 2) throw std::invalid_argument("SampledPath: need at least two samples");
        for (std::size_t i = 1; i < times.size(); ++i)
            if (!(times[i] > times[i - 1])) throw std::invalid_argument("SampledPath: times must increase strictly");
    }

    /// Every `stride`-th sample, always keeping the last one.
    SampledPath subsample(std::size_t stride) const {
        if (stride == 0) throw std::invalid_argument("subsample: stride must be positive");
        SampledPath out;
        for (std::size_t i = 0; i < size(); i += stride) {
            out.times.push_back(times[i]);
            out.points.push_back(points[i]);
        }
        if (out.times.back() != times.back()) {
            out.times.push_back(times.back());
            out.points.push_back(points.back());
        }
        return out;
    }
};

inline io::CsvTable path_to_csv(const SampledPath& path) {
    io::CsvTable t({"t", "re", "im"});
    for (std::size_t i = 0; i < path.size(); ++i) t.add(path.times[i], path.points[i].real(), path.points[i].imag());
    return t;
}

inline SampledPath path_from_csv(const io::CsvTable& t) {
    const auto ct = t.column("t"), cr = t.column("re"), ci = t.column("im");
    std::vector<double> times;
    std::vector<cplx> pts;
    for (std::size_t r = 0; r < t.size(); ++r) {
        times.push_back(t.number(r, ct));
        pts.emplace_back(t.number(r, cr), t.number(r, ci));
    }
    return SampledPath(std::move(times), std::move(pts));
}

/// psi(xy) / [(xy)^p (log* 1/x)^{-q} (log* y)^q]; empty when the denominator vanishes.
inline std::optional<double> psi_upper_bound_check(const PsiSpec& psi, double x, double y) {
    if (!(x >= 0.0 && y >= 0.0)) throw std::domain_error("psi_upper_bound_check: arguments must be nonnegative");
    if (x == 0.0 || y == 0.0) return std::nullopt;
    const double xy = x * y;
    const double den = std::pow(xy, psi.p()) * std::pow(log_star(1.0 / x), -psi.q()) * std::pow(log_star(y), psi.q());
    if (!(den > 0.0) || !std::isfinite(den)) return std::nullopt;
    return psi(xy) / den;
}

/// Supremum of sum psi(|x_{i+1} - x_i| / M) over subsets of the sample indices.
///
/// best[j] is the largest sum over chains ending at j; each chain is summed
/// left to right from 0, which keeps the result bitwise identical to direct
/// enumeration.
inline double psi_var_value(const SampledPath& path, const PsiSpec& psi, double M) {
    if (!(M > 0.0)) throw std::invalid_argument("psi_var_value: M must be positive");
    const std::size_t n = path.points.size();
    if (n < 2) return 0.0;
    const auto& x = path.points;
    if (psi.pure_power() && psi.p() == 1.0) {
        // triangle inequality: the full partition is optimal
        double sum = 0.0;
        for (std::size_t j = 1; j < n; ++j) sum += std::abs(x[j] - x[j - 1]) / M;
        return sum;
    }
    std::vector<double> best(n, 0.0);
    double result = 0.0;
    for (std::size_t j = 1; j < n; ++j) {
        double b = 0.0;
        for (std::size_t i = 0; i < j; ++i) b = std::max(b, best[i] + psi(std::abs(x[j] - x[i]) / M));
        best[j] = b;
        result = std::max(result, b);
    }
    return result;
}

/// Exhaustive maximum over all subsets with both endpoints kept. Exponential; test oracle only.
inline double psi_var_brute_force(const SampledPath& path, const PsiSpec& psi, double M) {
    const std::size_t n = path.points.size();
    if (n < 2) return 0.0;
    if (n > 24) throw std::invalid_argument("psi_var_brute_force: too many points");
    const std::size_t interior = n - 2;
    double result = 0.0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << interior); ++mask) {
        double sum = 0.0;
        std::size_t prev = 0;
        for (std::size_t k = 0; k < interior; ++k) {
            if (mask & (std::uint64_t{1} << k)) {
                sum += psi(std::abs(path.points[k + 1] - path.points[prev]) / M);
                prev = k + 1;
            }
        }
        sum += psi(std::abs(path.points[n - 1] - path.points[prev]) / M);
        result = std::max(result, sum);
    }
    return result;
}

/// inf{M > 0 : V^M <= 1}, to relative tolerance `tol`. Zero for a constant path.
inline double psi_var_constant(const SampledPath& path, const PsiSpec& psi, double tol = 1e-10) {
    if (!(tol > 0.0)) throw std::invalid_argument("psi_var_constant: tol must be positive");
    double max_inc = 0.0, length = 0.0;
    const auto& x = path.points;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i > 0) length += std::abs(x[i] - x[i - 1]);
        for (std::size_t j = i + 1; j < x.size(); ++j) max_inc = std::max(max_inc, std::abs(x[j] - x[i]));
    }
    if (max_inc == 0.0) return 0.0;
    // V^lo >= psi(psi^{-1}(1)) = 1 and, by superadditivity, V^hi <= psi(length / hi) = 1
    const double unit = psi.inverse(1.0);
    double lo = max_inc / unit;
    double hi = length / unit;
    while (hi - lo > tol * lo) {
        const double mid = std::sqrt(lo * hi);
        if (psi_var_value(path, psi, mid) > 1.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// max over sampled pairs s < t of |x(t) - x(s)| / phi(t - s).
inline double holder_ratio_sup(const SampledPath& path, const ModulusSpec& m) {
    m.validate();
    const std::size_t n = path.size();
    if (n < 2) throw std::invalid_argument("holder_ratio_sup: need at least two samples");
    const auto& t = path.times;
    const auto& x = path.points;
    const double step = (t.back() - t.front()) / static_cast<double>(n - 1);
    bool uniform = true;
    for (std::size_t i = 1; i < n && uniform; ++i)
        uniform = std::abs((t[i] - t[0]) - step * static_cast<double>(i)) <= 1e-9 * step;
    double best = 0.0;
    if (uniform) {
        // phi depends on the lag alone
        std::vector<double> inv_phi(n);
        for (std::size_t k = 1; k < n; ++k) inv_phi[k] = 1.0 / modulus(m, step * static_cast<double>(k));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) best = std::max(best, std::abs(x[j] - x[i]) * inv_phi[j - i]);
        return best;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) best = std::max(best, std::abs(x[j] - x[i]) / modulus(m, t[j] - t[i]));
    return best;
}

} // namespace sle
