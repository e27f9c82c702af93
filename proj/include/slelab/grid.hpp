#pragma once

// The forward grid H(h, M, T) = { +-hj/8 + i h(1 + k/8) : |x| <= M, y <= sqrt(1+4T) },
// sums over it, Koebe distortion checks on explicit maps, and the search for
// grid points whose forward flow lands near a prescribed point.

#include "slelab/complex_util.hpp"
#include "slelab/driving.hpp"
#include "slelab/io.hpp"
#include "slelab/loewner_flow.hpp"
#include "slelab/parallel.hpp"
#include "slelab/psi_variation.hpp"
#include "slelab/rng.hpp"
#include "slelab/trace.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

namespace sle {

struct GridSpec {
    double h = 1.0;
    double M = 1.0;
    double T = 1.0;

    double y_top() const { return std::sqrt(1.0 + 4.0 * T); }

    void validate() const {
        if (!(h > 0.0 && h <= 1.0)) throw std::invalid_argument("GridSpec: h must lie in (0,1]");
        if (!(M >= 0.0 && T >= 0.0)) throw std::invalid_argument("GridSpec: M and T must be nonnegative");
        if (y_top() < h) throw std::invalid_argument("GridSpec: empty grid, sqrt(1+4T) < h");
    }

    /// Largest j with h j / 8 <= M.
    long j_max() const { return static_cast<long>(std::floor(8.0 * M / h * (1.0 + 1e-12) + 1e-12)); }
    /// Largest k with h (1 + k/8) <= sqrt(1+4T).
    long k_max() const { return static_cast<long>(std::floor(8.0 * (y_top() / h - 1.0) * (1.0 + 1e-12) + 1e-12)); }

    double x(long j) const { return h * static_cast<double>(j) / 8.0; }
    double y(long k) const { return h * (1.0 + static_cast<double>(k) / 8.0); }
    std::size_t size() const { return static_cast<std::size_t>(2 * j_max() + 1) * static_cast<std::size_t>(k_max() + 1); }
};

/// All grid points, row by row from the bottom, left to right.
inline std::vector<cplx> enumerate_grid(const GridSpec& g) {
    g.validate();
    const long J = g.j_max(), K = g.k_max();
    std::vector<cplx> pts;
    pts.reserve(g.size());
    for (long k = 0; k <= K; ++k)
        for (long j = -J; j <= J; ++j) pts.emplace_back(g.x(j), g.y(k));
    return pts;
}

/// Distance from z to the grid, via the nearest lattice index.
inline double grid_distance(const GridSpec& g, cplx z) {
    const long J = g.j_max(), K = g.k_max();
    const long j = std::clamp(std::lround(z.real() * 8.0 / g.h), -J, J);
    const long k = std::clamp(std::lround((z.imag() / g.h - 1.0) * 8.0), 0L, K);
    return std::abs(z - cplx{g.x(j), g.y(k)});
}

/// Maximum grid distance over n uniform points of [-M, M] x [h, sqrt(1+4T)].
inline double covering_check(const GridSpec& g, long n, std::uint64_t seed) {
    g.validate();
    RandomStream rng(seed, 0);
    double worst = 0.0;
    for (long i = 0; i < n; ++i) {
        const cplx z{-g.M + 2.0 * g.M * rng.uniform(), g.h + (g.y_top() - g.h) * rng.uniform()};
        worst = std::max(worst, grid_distance(g, z));
    }
    return worst;
}

/// Terms (1 + x^2/y^2)^{-a/2} with closed forms for the common exponents.
class DecayFactor {
public:
    explicit DecayFactor(double a) : a_(a) {}
    double operator()(double r2) const { // r2 = x^2 / y^2
        if (a_ == 0.0) return 1.0;
        if (a_ == 2.0) return 1.0 / (1.0 + r2);
        if (a_ == 1.0) return 1.0 / std::sqrt(1.0 + r2);
        if (a_ == 0.5) return 1.0 / std::sqrt(std::sqrt(1.0 + r2));
        return std::pow(1.0 + r2, -0.5 * a_);
    }

private:
    double a_;
};

/// sum of y^zeta (1 + x^2/y^2)^{-a/2} over grid points with y >= y_min.
inline double capped_grid_sum(const GridSpec& g, double a, double zeta, double y_min) {
    g.validate();
    const long J = g.j_max(), K = g.k_max();
    const DecayFactor decay(a);
    double total = 0.0;
    for (long k = 0; k <= K; ++k) {
        const double y = g.y(k);
        if (y < y_min * (1.0 - 1e-12)) continue;
        const double inv_y2 = 1.0 / (y * y);
        const double hx = g.h / 8.0;
        double row = 0.0;
        for (long j = 1; j <= J; ++j) {
            const double x = hx * static_cast<double>(j);
            row += decay(x * x * inv_y2);
        }
        total += std::pow(y, zeta) * (1.0 + 2.0 * row);
    }
    return total;
}

inline double grid_sum(const GridSpec& g, double a, double zeta) { return capped_grid_sum(g, a, zeta, g.h); }

/// Reference summation over the enumerated points; test oracle.
inline double grid_sum_direct(const GridSpec& g, double a, double zeta) {
    double total = 0.0;
    for (cplx z : enumerate_grid(g)) {
        const double x = z.real(), y = z.imag();
        total += std::pow(y, zeta) * std::pow(1.0 + x * x / (y * y), -0.5 * a);
    }
    return total;
}

enum class GridRegime { below, critical, above };

/// Which of the three cases applies, per the threshold of the sum in y.
inline GridRegime grid_regime(double a, double zeta) {
    const double e = a > 1.0 ? zeta + 1.0 : a == 1.0 ? zeta + 1.0 : zeta + a;
    if (std::abs(e + 1.0) < 1e-12) return GridRegime::critical;
    return e < -1.0 ? GridRegime::below : GridRegime::above;
}

/// Growth rate of grid_sum as h -> 0, up to a constant depending on (a, zeta, M, T).
inline double predicted_rate(double a, double zeta, double h) {
    const double L = log_star(1.0 / h);
    const GridRegime r = grid_regime(a, zeta);
    if (r == GridRegime::above) return std::pow(h, -2.0);
    if (a > 1.0) return r == GridRegime::below ? std::pow(h, zeta) : std::pow(h, -2.0) * L;
    if (a == 1.0) return r == GridRegime::below ? std::pow(h, zeta) * L : std::pow(h, -2.0) * L * L;
    return r == GridRegime::below ? std::pow(h, zeta + a - 1.0) : std::pow(h, -2.0) * L;
}

struct GridSumRow {
    double h, a, zeta, sum, predicted;
};

inline io::CsvTable grid_sum_csv(const std::vector<GridSumRow>& rows) {
    io::CsvTable t({"h", "a", "zeta", "sum", "predicted"});
    for (const auto& r : rows) t.add(r.h, r.a, r.zeta, r.sum, r.predicted);
    return t;
}

// ---------------------------------------------------------------------------
// Koebe distortion on explicit univalent maps of H.

struct UnivalentMap {
    virtual ~UnivalentMap() = default;
    virtual cplx f(cplx w) const = 0;
    virtual cplx df(cplx w) const = 0;
    /// Inverse on f(H); empty for points outside the image.
    virtual std::optional<cplx> g(cplx z) const = 0;
    virtual cplx dg(cplx z) const = 0;
};

struct IdentityMap final : UnivalentMap {
    cplx f(cplx w) const override { return w; }
    cplx df(cplx) const override { return 1.0; }
    std::optional<cplx> g(cplx z) const override {
        if (!(z.imag() > 0.0)) return std::nullopt;
        return z;
    }
    cplx dg(cplx) const override { return 1.0; }
};

/// z -> c z + b with c > 0 and Im b >= 0; the image is the half-plane above Im b.
struct AffineMap final : UnivalentMap {
    double c;
    cplx b;
    AffineMap(double c_, cplx b_) : c(c_), b(b_) {
        if (!(c > 0.0) || b.imag() < 0.0) throw std::invalid_argument("AffineMap: need c > 0 and Im b >= 0");
    }
    cplx f(cplx w) const override { return c * w + b; }
    cplx df(cplx) const override { return c; }
    std::optional<cplx> g(cplx z) const override {
        const cplx w = (z - b) / c;
        if (!(w.imag() > 0.0)) return std::nullopt;
        return w;
    }
    cplx dg(cplx) const override { return 1.0 / c; }
};

/// w -> sqrt(w^2 - 4t): H onto H minus the slit (0, 2i sqrt(t)].
struct InverseSlitMap final : UnivalentMap {
    double t;
    explicit InverseSlitMap(double t_) : t(t_) {
        if (!(t > 0.0)) throw std::invalid_argument("InverseSlitMap: t must be positive");
    }
    cplx f(cplx w) const override { return inverse_slit_root(w, 4.0 * t); }
    cplx df(cplx w) const override { return w / f(w); }
    std::optional<cplx> g(cplx z) const override {
        if (!(z.imag() > 0.0)) return std::nullopt;
        if (z.real() == 0.0 && z.imag() <= 2.0 * std::sqrt(t)) return std::nullopt;
        return sqrt_upper(z * z + 4.0 * t);
    }
    cplx dg(cplx z) const override { return z / sqrt_upper(z * z + 4.0 * t); }
};

inline constexpr double koebe_ratio_lo = 48.0 / 125.0;
inline constexpr double koebe_ratio_hi = 80.0 / 27.0;

struct KoebeReport {
    long samples = 0;
    long skipped = 0;
    long violations = 0;
    double max_distance_ratio = 0.0; ///< max |g(z) - w| / (v/2)
    double min_deriv_ratio = std::numeric_limits<double>::infinity();
    double max_deriv_ratio = 0.0;
};

/// Samples w = u + iv uniformly in [-u_range, u_range] x [v_min, v_max] and z
/// uniformly in B(f(w), v |f'(w)| / 8), and checks |g(z) - w| < v/2 and the
/// derivative ratio band.
inline KoebeReport koebe_check(const UnivalentMap& map, long n, std::uint64_t seed, double u_range = 2.0,
                               double v_min = 0.05, double v_max = 2.0) {
    RandomStream rng(seed, 0);
    KoebeReport rep;
    for (long i = 0; i < n; ++i) {
        const cplx w{-u_range + 2.0 * u_range * rng.uniform(), v_min + (v_max - v_min) * rng.uniform()};
        const double v = w.imag();
        const cplx fw = map.f(w);
        const double radius = 0.125 * v * std::abs(map.df(w));
        const double rad = radius * std::sqrt(rng.uniform());
        const double ang = 2.0 * pi * rng.uniform();
        const cplx z = fw + std::polar(rad, ang);
        ++rep.samples;
        const auto gz = map.g(z);
        if (!gz) {
            ++rep.skipped;
            continue;
        }
        const double dist_ratio = std::abs(*gz - w) / (0.5 * v);
        const double ratio = std::abs(map.dg(z)) * std::abs(map.df(w)); // |g'(z)| / |g'(f(w))|
        rep.max_distance_ratio = std::max(rep.max_distance_ratio, dist_ratio);
        rep.min_deriv_ratio = std::min(rep.min_deriv_ratio, ratio);
        rep.max_deriv_ratio = std::max(rep.max_deriv_ratio, ratio);
        if (!(dist_ratio < 1.0) || ratio < koebe_ratio_lo || ratio > koebe_ratio_hi) ++rep.violations;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Forward-grid witnesses.

struct WitnessOptions {
    double slack = 0.01;     ///< relative slack on both inequalities
    bool exhaustive = false; ///< flow every grid point instead of the Koebe neighbourhood
};

struct WitnessResult {
    bool found = false;
    double t = 0.0;
    double u = 0.0;
    double v = 0.0;
    double r = 0.0;
    double deriv = 0.0; ///< |fhat'(u + iv)|
    cplx z;              ///< witness start point
    cplx Z;              ///< its relative position at time t
    double gprime = 0.0; ///< |g_t'(z)|
    bool y_in_band = false;  ///< Y in [v/2, 3v/2]
    bool slope_ok = false;   ///< |X / Y| <= 1
    std::size_t candidates = 0;
    std::size_t grid_size = 0;
};

namespace detail {

inline WitnessResult witness_search(const DrivingPath& driving, std::size_t k, cplx target, double r, double M,
                                    const WitnessOptions& opt) {
    WitnessResult res;
    res.t = driving.time(k);
    res.u = target.real();
    res.v = target.imag();
    res.r = r;
    const double v = target.imag();
    if (!(v > 0.0 && v <= 1.0)) throw std::invalid_argument("witness: v must lie in (0,1]");
    if (!(r > 0.0)) throw std::invalid_argument("witness: r must be positive");
    const FhatValue fz = fhat_full(driving, k, target);
    res.deriv = fz.deriv;
    GridSpec g{r * v, M, driving.time(k)};
    if (g.y_top() < g.h) return res;
    res.grid_size = g.size();
    // Koebe growth on B(target, v): the preimage of B(target, (1+slack) v/2)
    // lies within (1+s)/2 / (1-(1+s)/2)^2 * v |fhat'| of fhat(target)
    const double rho = 0.5 * (1.0 + opt.slack);
    const double reach = opt.exhaustive ? INFINITY : 1.25 * rho / ((1.0 - rho) * (1.0 - rho)) * v * fz.deriv;
    std::vector<FlowPoint> cand;
    const long J = g.j_max(), K = g.k_max();
    const long j_lo = opt.exhaustive ? -J : std::max(-J, static_cast<long>(std::floor((fz.value.real() - reach) * 8.0 / g.h)));
    const long j_hi = opt.exhaustive ? J : std::min(J, static_cast<long>(std::ceil((fz.value.real() + reach) * 8.0 / g.h)));
    const long k_lo = opt.exhaustive ? 0 : std::max(0L, static_cast<long>(std::floor(((fz.value.imag() - reach) / g.h - 1.0) * 8.0)));
    const long k_hi = opt.exhaustive ? K : std::min(K, static_cast<long>(std::ceil(((fz.value.imag() + reach) / g.h - 1.0) * 8.0)));
    for (long j = j_lo; j <= j_hi; ++j)
        for (long kk = k_lo; kk <= k_hi; ++kk) {
            const cplx z{g.x(j), g.y(kk)};
            if (std::abs(z - fz.value) <= reach) cand.emplace_back(z);
        }
    res.candidates = cand.size();
    run_flow(driving, cand, k);
    const double gp_max = (80.0 / 27.0) / r * (1.0 + opt.slack);
    const double dist_max = 0.5 * v * (1.0 + opt.slack);
    // candidates are generated in lexicographic (Re, Im) order
    for (const auto& p : cand) {
        if (!p.alive()) continue;
        const cplx Z = p.Z();
        const double gp = std::exp(p.log_gprime);
        if (std::abs(Z - target) <= dist_max && gp <= gp_max) {
            res.found = true;
            res.z = p.z0;
            res.Z = Z;
            res.gprime = gp;
            res.y_in_band = Z.imag() >= 0.5 * v * (1.0 - opt.slack) && Z.imag() <= 1.5 * v * (1.0 + opt.slack);
            res.slope_ok = std::abs((Z.real() - target.real()) / Z.imag()) <= 1.0 + opt.slack;
            return res;
        }
    }
    return res;
}

} // namespace detail

/// A point of H(rv, max|xi|, t_k) whose flow satisfies |Z_t(z) - iv| <= v/2
/// and |g_t'(z)| <= (80/27)/r, both up to the configured slack.
inline WitnessResult fw_grid_witness(const DrivingPath& driving, std::size_t k, double v, double r,
                                     const WitnessOptions& opt = {}) {
    return detail::witness_search(driving, k, cplx{0.0, v}, r, driving.max_abs(k), opt);
}

/// Off-axis variant on the enlarged grid H(rv, 2 max|xi| + 4 sqrt(t_k), t_k); requires r > 12.
inline WitnessResult fw_grid_witness_offaxis(const DrivingPath& driving, std::size_t k, double u, double v, double r,
                                             const WitnessOptions& opt = {}) {
    if (!(r > 12.0)) throw std::invalid_argument("fw_grid_witness_offaxis: r must exceed 12");
    const double M = 2.0 * driving.max_abs(k) + 4.0 * std::sqrt(driving.time(k));
    return detail::witness_search(driving, k, cplx{u, v}, r, M, opt);
}

struct FarFieldReport {
    long samples = 0;
    double min_gprime = std::numeric_limits<double>::infinity();
    double max_gprime = 0.0;
    long violations = 0; ///< outside [1/12, 27/4]
};

/// |g_t'(z)| for n points with |z| in [R0, 4 R0], R0 = 2 max|xi| + 4 sqrt(t_k).
inline FarFieldReport far_field_check(const DrivingPath& driving, std::size_t k, long n, std::uint64_t seed) {
    const double R0 = 2.0 * driving.max_abs(k) + 4.0 * std::sqrt(driving.time(k));
    RandomStream rng(seed, 0);
    std::vector<FlowPoint> pts;
    for (long i = 0; i < n; ++i) {
        const double rad = R0 * (1.0 + 1e-9 + 3.0 * rng.uniform());
        const double ang = pi * (1e-3 + (1.0 - 2e-3) * rng.uniform());
        pts.emplace_back(std::polar(rad, ang));
    }
    run_flow(driving, pts, k);
    FarFieldReport rep;
    for (const auto& p : pts) {
        ++rep.samples;
        const double gp = std::exp(p.log_gprime);
        rep.min_gprime = std::min(rep.min_gprime, gp);
        rep.max_gprime = std::max(rep.max_gprime, gp);
        if (!p.alive() || gp < 1.0 / 12.0 || gp > 27.0 / 4.0) ++rep.violations;
    }
    return rep;
}

inline io::CsvTable witness_csv(const std::vector<WitnessResult>& rows) {
    io::CsvTable t({"t", "v", "r", "z_re", "z_im", "gprime", "found"});
    for (const auto& w : rows) t.add(w.t, w.v, w.r, w.z.real(), w.z.imag(), w.gprime, w.found);
    return t;
}

} // namespace sle
