#pragma once

// Radial and usual Bessel processes with their clocks.
//
// The radial process d theta = (1/2 + nu) cot(theta) dt + dB is integrated in
// the coordinates u = log tan(theta / 2) and c = C_t = int sin^{-2}(theta):
//     du = -nu tanh(u) dc + dW_c,     dt = sech^2(u) dc.
// A fixed clock step dc = base_step is the real-time substep
// base_step * sin^2(theta); for nu = 0 the u increments are exact.

#include "slelab/complex_util.hpp"
#include "slelab/parallel.hpp"
#include "slelab/rng.hpp"
#include "slelab/stats.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace sle {

struct NuSpeed {
    double nu;
    double speed;
};

/// Index and speed of the angle process of SLE_kappa.
inline NuSpeed kappa_to_nu(double kappa) {
    if (!(kappa > 0.0)) throw std::domain_error("kappa_to_nu: kappa must be positive");
    return {0.5 - 4.0 / kappa, kappa};
}

/// Index of the real Bessel process X_t(x) of SLE_kappa (run at speed kappa).
inline double kappa_to_nu_tilde(double kappa) {
    if (!(kappa > 0.0)) throw std::domain_error("kappa_to_nu_tilde: kappa must be positive");
    return 2.0 / kappa - 0.5;
}

struct BesselConfig {
    double nu = 0.0;
    double theta0 = pi / 2;
    double base_step = 1e-3; ///< clock step in the interior
    double absorb_eps = 1e-6;
    double horizon = 1.0;
    double speed = 1.0; ///< runs at speed `speed` by rescaling time

    void validate() const {
        if (!(theta0 > 0.0 && theta0 < pi)) throw std::invalid_argument("BesselConfig: theta0 must lie in (0, pi)");
        if (!(base_step > 0.0 && absorb_eps > 0.0 && horizon > 0.0 && speed > 0.0))
            throw std::invalid_argument("BesselConfig: base_step, absorb_eps, horizon and speed must be positive");
    }
};

/// State of the radial process in (u, clock, time) coordinates.
struct RadialState {
    double u = 0.0;
    double clock = 0.0;
    double t = 0.0;
    bool absorbed = false;

    double theta() const noexcept { return 2.0 * std::atan(std::exp(u)); }
    double sin_theta() const noexcept { return 1.0 / std::cosh(u); }
};

inline double theta_to_u(double theta) { return std::log(std::tan(0.5 * theta)); }

/// Unit-speed radial Bessel integrator.
class RadialIntegrator {
public:
    explicit RadialIntegrator(const BesselConfig& cfg) : nu_(cfg.nu), base_(cfg.base_step) {
        cfg.validate();
        u_abs_ = -std::log(std::tan(0.5 * cfg.absorb_eps));
        absorbing_ = cfg.nu < 0.0;
    }

    RadialState start(double theta0) const { return RadialState{theta_to_u(theta0), 0.0, 0.0, false}; }

    /// Clock step at u. Far from the interior (|u| > 2, i.e. sin(theta) < 0.27)
    /// the drift is nearly constant and the step grows quadratically in |u|.
    double clock_step(double u) const noexcept {
        const double far = std::max(std::abs(u) - 2.0, 0.0);
        return base_ + far * far * (1.0 / 16.0);
    }

    /// One substep, not passing real time t_limit nor clock c_limit.
    /// Returns false once the state is absorbed or a limit is reached.
    bool step(RadialState& s, RandomStream& rng, double t_limit, double c_limit = INFINITY) const {
        if (s.absorbed || s.t >= t_limit || s.clock >= c_limit) return false;
        double h = clock_step(s.u);
        const double sech2 = 1.0 / (std::cosh(s.u) * std::cosh(s.u));
        bool final_t = false;
        if (s.t + sech2 * h >= t_limit) {
            h = (t_limit - s.t) / sech2;
            final_t = true;
        }
        bool final_c = false;
        if (s.clock + h >= c_limit) {
            h = c_limit - s.clock;
            final_t = false;
            final_c = true;
        }
        const double u_old = s.u;
        const double u_new = u_old - nu_ * std::tanh(u_old) * h + std::sqrt(h) * rng.normal();
        if (absorbing_) {
            bool hit = std::abs(u_new) >= u_abs_;
            if (!hit && u_new * u_old > 0.0) {
                const double a = u_abs_ - std::abs(u_old), b = u_abs_ - std::abs(u_new);
                hit = rng.uniform() < std::exp(-2.0 * a * b / h);
            }
            if (hit) {
                s.u = u_new >= 0.0 ? u_abs_ : -u_abs_;
                s.clock += h;
                s.t += sech2 * h;
                s.absorbed = true;
                return false;
            }
        }
        const double sech2_new = 1.0 / (std::cosh(u_new) * std::cosh(u_new));
        s.u = u_new;
        s.clock += h;
        if (final_t)
            s.t = t_limit;
        else
            s.t += 0.5 * (sech2 + sech2_new) * h;
        if (final_c) s.clock = c_limit;
        return !(s.t >= t_limit || s.clock >= c_limit);
    }

    /// Runs to real time t_limit (or absorption, or clock c_limit).
    void run(RadialState& s, RandomStream& rng, double t_limit, double c_limit = INFINITY) const {
        while (step(s, rng, t_limit, c_limit)) {
        }
    }

private:
    double nu_;
    double base_;
    double u_abs_;
    bool absorbing_;
};

struct BesselPath {
    std::vector<double> times;
    std::vector<double> thetas;
    std::vector<double> clock; ///< C_t at each recorded time
    std::optional<double> absorbed_at;
};

/// Records every `record_stride`-th substep of one path.
inline BesselPath simulate_radial(const BesselConfig& cfg, std::uint64_t seed, std::uint64_t stream = 0,
                                  std::size_t record_stride = 1) {
    if (record_stride == 0) throw std::invalid_argument("simulate_radial: record_stride must be positive");
    RadialIntegrator integ(cfg);
    RandomStream rng(seed, stream);
    RadialState s = integ.start(cfg.theta0);
    BesselPath p;
    // speed k: theta_k(t) = theta_1(k t) and C^k_t = C^1_{k t} / k
    const double k = cfg.speed;
    auto record = [&] {
        p.times.push_back(s.t / k);
        p.thetas.push_back(s.theta());
        p.clock.push_back(s.clock / k);
    };
    record();
    std::size_t i = 0;
    bool more = true;
    while (more) {
        more = integ.step(s, rng, cfg.horizon * k);
        if (++i % record_stride == 0 || !more) record();
    }
    if (s.absorbed) p.absorbed_at = s.t / k;
    return p;
}

/// Endpoint of one path at the horizon (or at absorption).
inline RadialState radial_endpoint(const BesselConfig& cfg, std::uint64_t seed, std::uint64_t stream) {
    RadialIntegrator integ(cfg);
    RandomStream rng(seed, stream);
    RadialState s = integ.start(cfg.theta0);
    integ.run(s, rng, cfg.horizon * cfg.speed);
    s.t /= cfg.speed;
    s.clock /= cfg.speed;
    return s;
}

/// int_0^pi sin(y)^{1+2nu} dy by adaptive Gauss-Kronrod quadrature.
inline double sine_power_integral(double nu) {
    auto f = [nu](double y) { return std::pow(std::sin(y), 1.0 + 2.0 * nu); };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, pi, 15, 1e-14);
}

/// Closed form of the integral above: sqrt(pi) Gamma(1+nu) / Gamma(3/2+nu).
inline double sine_power_integral_exact(double nu) {
    return std::sqrt(pi) * boost::math::tgamma_ratio(1.0 + nu, 1.5 + nu);
}

/// Stationary density c_nu sin(y)^{1+2nu} of the radial process with nu >= 0.
class StationaryDensity {
public:
    explicit StationaryDensity(double nu) : nu_(nu) {
        if (!(nu >= 0.0)) throw std::domain_error("stationary_density: nu must be nonnegative");
        c_ = 1.0 / sine_power_integral(nu);
    }
    double normaliser() const noexcept { return c_; }
    double operator()(double y) const {
        if (!(y > 0.0 && y < pi)) throw std::domain_error("stationary_density: y must lie in (0, pi)");
        return c_ * std::pow(std::sin(y), 1.0 + 2.0 * nu_);
    }
    /// Mean of the density over [a, b].
    double bin_average(double a, double b) const {
        auto f = [this](double y) { return std::pow(std::sin(y), 1.0 + 2.0 * nu_); };
        return c_ * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 10, 1e-13) / (b - a);
    }

private:
    double nu_;
    double c_;
};

inline double stationary_density(double nu, double y) { return StationaryDensity(nu)(y); }

/// Change-of-measure martingale along a recorded path.
struct ComMartingale {
    double a = 0.0;
    std::vector<double> values;
};

/// log M_t = a log(sin theta_t / sin theta_0) + a (a/2 + 1/2 + nu) t - a (a/2 + nu) C_t.
inline double com_log_martingale(double a, double nu, double sin_ratio, double t, double clock) {
    if (a == 0.0) return 0.0;
    return a * std::log(sin_ratio) + a * (0.5 * a + 0.5 + nu) * t - a * (0.5 * a + nu) * clock;
}

inline ComMartingale com_martingale(const BesselPath& path, double a, double nu) {
    ComMartingale m;
    m.a = a;
    if (path.thetas.empty()) return m;
    const double s0 = std::sin(path.thetas.front());
    for (std::size_t i = 0; i < path.times.size(); ++i) {
        if (path.absorbed_at && path.times[i] >= *path.absorbed_at) break;
        m.values.push_back(std::exp(com_log_martingale(a, nu, std::sin(path.thetas[i]) / s0, path.times[i], path.clock[i])));
    }
    return m;
}

/// Sample mean and standard error of M_{t ^ T_eps} over n paths.
inline stats::MeanSe martingale_mean(const BesselConfig& cfg, double a, long n, std::uint64_t seed, unsigned workers = 1) {
    std::vector<double> vals(static_cast<std::size_t>(n));
    const double s0 = std::sin(cfg.theta0);
    parallel_for(vals.size(), workers, [&](std::size_t i) {
        const RadialState s = radial_endpoint(cfg, seed, i);
        // on absorption the ratio is frozen at the threshold
        vals[i] = std::exp(com_log_martingale(a, cfg.nu, s.sin_theta() / s0, s.t, s.clock));
    });
    return stats::mean_se(vals);
}

/// Histogram of theta at the horizon over n paths, as densities on `bins` equal bins.
inline std::vector<double> theta_histogram(const BesselConfig& cfg, long n, int bins, std::uint64_t seed,
                                           unsigned workers = 1) {
    std::vector<double> theta(static_cast<std::size_t>(n));
    parallel_for(theta.size(), workers, [&](std::size_t i) { theta[i] = radial_endpoint(cfg, seed, i).theta(); });
    std::vector<double> hist(static_cast<std::size_t>(bins), 0.0);
    const double w = pi / bins;
    for (double th : theta) {
        int b = static_cast<int>(th / w);
        b = std::clamp(b, 0, bins - 1);
        hist[static_cast<std::size_t>(b)] += 1.0;
    }
    for (double& h : hist) h /= static_cast<double>(n) * w;
    return hist;
}

/// Sup-norm gap between the histogram at the horizon and the bin-averaged stationary density.
inline double stationary_discrepancy(const BesselConfig& cfg, long n, int bins, std::uint64_t seed, unsigned workers = 1) {
    const auto hist = theta_histogram(cfg, n, bins, seed, workers);
    const StationaryDensity f(cfg.nu);
    const double w = pi / bins;
    double worst = 0.0;
    for (int b = 0; b < bins; ++b) worst = std::max(worst, std::abs(hist[static_cast<std::size_t>(b)] - f.bin_average(b * w, (b + 1) * w)));
    return worst;
}

/// Fraction of n paths absorbed by the horizon.
inline double absorption_fraction(const BesselConfig& cfg, long n, std::uint64_t seed, unsigned workers = 1) {
    std::vector<char> hit(static_cast<std::size_t>(n), 0);
    parallel_for(hit.size(), workers, [&](std::size_t i) { hit[i] = radial_endpoint(cfg, seed, i).absorbed ? 1 : 0; });
    long c = 0;
    for (char h : hit) c += h;
    return static_cast<double>(c) / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Usual Bessel process d rho = dB + (nu_tilde + 1/2) / rho dt.

/// Euler step with substep h = step_scale * rho^2; never lets rho reach 0.
struct UsualBesselStep {
    double rho_new;
    double h;
};

inline UsualBesselStep usual_bessel_step(double rho, double nu_tilde, double step_scale, RandomStream& rng) {
    const double h = step_scale * rho * rho;
    double r = rho + (nu_tilde + 0.5) / rho * h + std::sqrt(h) * rng.normal();
    // reflect the (vanishingly rare) overshoot through the origin
    if (r <= 0.0) r = std::max(-r, 1e-300);
    return {r, h};
}

/// Clock int_0^{sigma_R} rho^{-2} dt for the two-dimensional process started
/// at rho0 and stopped at R rho0. Clocks beyond `clock_cap` are returned as
/// +infinity (censored).
inline double usual_bessel_clock_sample(double rho0, double R, RandomStream& rng, double step_scale = 0.01,
                                        double clock_cap = INFINITY) {
    if (!(rho0 > 0.0)) throw std::invalid_argument("usual_bessel_clock_sample: rho0 must be positive");
    if (!(R > 1.0)) throw std::invalid_argument("usual_bessel_clock_sample: R must exceed 1");
    const double target = R * rho0;
    double rho = rho0, clock = 0.0;
    while (true) {
        const auto [r, h] = usual_bessel_step(rho, 0.0, step_scale, rng);
        const double inc = 0.5 * h * (1.0 / (rho * rho) + 1.0 / (r * r));
        if (r >= target) {
            const double lam = (target - rho) / (r - rho);
            return clock + lam * inc;
        }
        // crossing of the barrier by the bridge between the two samples
        if (rng.uniform() < std::exp(-2.0 * (target - rho) * (target - r) / h)) return clock + 0.5 * inc;
        clock += inc;
        rho = r;
        if (clock > clock_cap) return INFINITY;
    }
}

inline double usual_bessel_clock_sample(double rho0, double R, std::uint64_t seed, std::uint64_t stream = 0) {
    RandomStream rng(seed, stream);
    return usual_bessel_clock_sample(rho0, R, rng);
}

/// P(T_{log R} <= r) for a standard Brownian hitting time.
inline double usual_bessel_clock_cdf(double R, double r) {
    if (r <= 0.0) return 0.0;
    return std::erfc(std::log(R) / std::sqrt(2.0 * r));
}

inline double usual_bessel_clock_density(double R, double r) {
    if (r <= 0.0) return 0.0;
    const double L = std::abs(std::log(R));
    return L / std::sqrt(2.0 * pi * r * r * r) * std::exp(-L * L / (2.0 * r));
}

inline std::vector<double> usual_bessel_clocks(double rho0, double R, long n, std::uint64_t seed, double step_scale,
                                               double clock_cap, unsigned workers = 1) {
    std::vector<double> out(static_cast<std::size_t>(n));
    parallel_for(out.size(), workers, [&](std::size_t i) {
        RandomStream rng(seed, i);
        out[i] = usual_bessel_clock_sample(rho0, R, rng, step_scale, clock_cap);
    });
    return out;
}

struct HittingResult {
    double probability = 0.0;
    double se = 0.0;
    double predicted = 0.0;    ///< (eps / x)^{2 nu_tilde}
    double truncation = 0.0;   ///< bound on the bias from stopping at the escape radius
};

/// Fraction of paths from x that reach eps at some time >= t0. A path that
/// reaches r_far = escape_factor * x after t0 is counted as never returning;
/// the bias from that is at most (eps / r_far)^{2 nu_tilde}.
inline HittingResult hitting_probability_check(double nu_tilde, double x, double eps, double t0, long n,
                                               std::uint64_t seed, double step_scale = 0.005,
                                               double escape_factor = 1000.0, unsigned workers = 1) {
    if (!(nu_tilde > 0.0)) throw std::invalid_argument("hitting_probability_check: nu_tilde must be positive");
    if (!(x >= eps && eps > 0.0)) throw std::invalid_argument("hitting_probability_check: need x >= eps > 0");
    HittingResult res;
    res.predicted = std::pow(eps / x, 2.0 * nu_tilde);
    const double r_far = escape_factor * x;
    res.truncation = std::pow(eps / r_far, 2.0 * nu_tilde);
    if (x == eps && t0 == 0.0) {
        res.probability = 1.0;
        return res;
    }
    std::vector<char> hit(static_cast<std::size_t>(n), 0);
    parallel_for(hit.size(), workers, [&](std::size_t i) {
        RandomStream rng(seed, i);
        double rho = x, t = 0.0;
        while (true) {
            const auto [r, h] = usual_bessel_step(rho, nu_tilde, step_scale, rng);
            const double t_new = t + h;
            if (t_new >= t0) {
                if (r <= eps || rng.uniform() < std::exp(-2.0 * (rho - eps) * (r - eps) / h)) {
                    hit[i] = 1;
                    return;
                }
                if (r >= r_far) return;
            }
            rho = r;
            t = t_new;
        }
    });
    long c = 0;
    for (char h : hit) c += h;
    res.probability = static_cast<double>(c) / static_cast<double>(n);
    res.se = std::sqrt(std::max(res.probability * (1.0 - res.probability), 1e-300) / static_cast<double>(n));
    return res;
}

// ---------------------------------------------------------------------------
// Clock functionals of the radial process.

struct TailFit {
    std::vector<double> x;        ///< thresholds
    std::vector<double> survival; ///< empirical P(C_t / t^2 > x)
    double slope = 0.0;
    double slope_se = 0.0;
    long tail_count = 0; ///< paths beyond the largest threshold
    bool widened = false;
};

struct TailConfig {
    double x_min = 1e2;
    double x_max = 1e4;
    int points = 9;
    double base_step = 1e-3;
    long min_tail = 30; ///< fewer paths beyond x_max than this widens the window downwards
    unsigned workers = 1;
};

/// Survival curve of C_t / t^2 for nu = 0 and its log-log slope on [x_min, x_max].
/// Paths whose clock passes t^2 x_max are stopped there.
inline TailFit critical_clock_tail(double t, double theta0, long n, std::uint64_t seed, const TailConfig& tc = {}) {
    if (!(t >= 1.0)) throw std::invalid_argument("critical_clock_tail: t must be at least 1");
    BesselConfig cfg;
    cfg.nu = 0.0;
    cfg.theta0 = theta0;
    cfg.base_step = tc.base_step;
    cfg.horizon = t;
    const RadialIntegrator integ(cfg);
    const double cap = tc.x_max * t * t;
    std::vector<double> ratio(static_cast<std::size_t>(n));
    parallel_for(ratio.size(), tc.workers, [&](std::size_t i) {
        RandomStream rng(seed, i);
        RadialState s = integ.start(theta0);
        integ.run(s, rng, t, cap);
        ratio[i] = s.t < t ? INFINITY : s.clock / (t * t);
    });
    std::sort(ratio.begin(), ratio.end());
    TailFit fit;
    double lo = tc.x_min;
    auto beyond = [&](double x) {
        return static_cast<long>(ratio.end() - std::upper_bound(ratio.begin(), ratio.end(), x));
    };
    fit.tail_count = static_cast<long>(ratio.end() - std::lower_bound(ratio.begin(), ratio.end(), tc.x_max));
    if (fit.tail_count < tc.min_tail) {
        lo = tc.x_min / 10.0;
        fit.widened = true;
    }
    std::vector<double> lx, ly;
    for (int j = 0; j < tc.points; ++j) {
        const double x = lo * std::pow(tc.x_max / lo, static_cast<double>(j) / (tc.points - 1));
        const long b = j == tc.points - 1 ? fit.tail_count : beyond(x);
        const double sv = static_cast<double>(b) / static_cast<double>(n);
        fit.x.push_back(x);
        fit.survival.push_back(sv);
        if (b > 0) {
            lx.push_back(std::log(x));
            ly.push_back(std::log(sv));
        }
    }
    if (lx.size() >= 2) {
        const auto lf = stats::fit_line(lx, ly);
        fit.slope = lf.slope;
        fit.slope_se = lf.slope_se;
    }
    return fit;
}

/// E[C_t] at each t by Monte Carlo, and the fitted log-log growth exponent.
struct GrowthFit {
    std::vector<double> t;
    std::vector<double> mean_clock;
    double exponent = 0.0;
};

inline GrowthFit clock_growth(double nu, double theta0, const std::vector<double>& ts, long n, std::uint64_t seed,
                              double base_step = 1e-2, unsigned workers = 1) {
    GrowthFit g;
    std::vector<double> lx, ly;
    for (double t : ts) {
        BesselConfig cfg{nu, theta0, base_step, 1e-6, t, 1.0};
        std::vector<double> c(static_cast<std::size_t>(n));
        parallel_for(c.size(), workers, [&](std::size_t i) { c[i] = radial_endpoint(cfg, seed, i).clock; });
        const double m = stats::mean_se(c).mean;
        g.t.push_back(t);
        g.mean_clock.push_back(m);
        lx.push_back(std::log(t));
        ly.push_back(std::log(m));
    }
    g.exponent = stats::fit_line(lx, ly).slope;
    return g;
}

/// P(T_0 > t) at each t for nu < 0 and the fitted log-linear decay rate.
struct SurvivalFit {
    std::vector<double> t;
    std::vector<double> survival;
    double rate = 0.0; ///< slope of log P(T_0 > t) against t
};

inline SurvivalFit survival_decay(double nu, double theta0, const std::vector<double>& ts, long n, std::uint64_t seed,
                                  double base_step = 1e-3, double absorb_eps = 1e-6, unsigned workers = 1) {
    if (!(nu < 0.0)) throw std::invalid_argument("survival_decay: nu must be negative");
    const double t_max = *std::max_element(ts.begin(), ts.end());
    BesselConfig cfg{nu, theta0, base_step, absorb_eps, t_max, 1.0};
    std::vector<double> death(static_cast<std::size_t>(n));
    parallel_for(death.size(), workers, [&](std::size_t i) {
        const RadialState s = radial_endpoint(cfg, seed, i);
        death[i] = s.absorbed ? s.t : INFINITY;
    });
    SurvivalFit f;
    std::vector<double> ly;
    for (double t : ts) {
        const long alive = std::count_if(death.begin(), death.end(), [t](double d) { return d > t; });
        const double sv = static_cast<double>(alive) / static_cast<double>(n);
        f.t.push_back(t);
        f.survival.push_back(sv);
        ly.push_back(std::log(std::max(sv, 1e-300)));
    }
    f.rate = stats::fit_line(f.t, ly).slope;
    return f;
}

} // namespace sle
