#pragma once

// Conformal-radius parametrisation s -> sigma(s, z), the angle process, the
// exact exponential identities for Y and |g'| along it, and the excursion
// stopping times of X^2/Y^2 between the levels 1 and b.
//
// Along an elementary step Upsilon, Y and |g'| evolve smoothly while X jumps
// only at the driving shift, so s = -log(Upsilon)/4 is exact at step ends and
// the clock integral is a trapezoid over each step from its shifted start w.

#include "slelab/complex_util.hpp"
#include "slelab/driving.hpp"
#include "slelab/io.hpp"
#include "slelab/loewner_flow.hpp"
#include "slelab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace sle {

/// arccot(X / Y) in (0, pi).
inline double theta_of_point(double X, double Y) {
    if (!(Y > 0.0)) throw std::domain_error("theta_of_point: Y must be positive");
    return std::atan2(Y, X);
}

enum class SigmaStatus { ok, swallowed, horizon };

inline std::string to_string(SigmaStatus s) {
    switch (s) {
    case SigmaStatus::ok: return "ok";
    case SigmaStatus::swallowed: return "swallowed";
    case SigmaStatus::horizon: return "horizon";
    }
    return "unknown";
}

struct SigmaValue {
    double t = std::numeric_limits<double>::infinity();
    SigmaStatus status = SigmaStatus::horizon;
    bool finite() const noexcept { return status == SigmaStatus::ok; }
};

inline double s_start(cplx z0) { return -0.25 * std::log(z0.imag()); }

/// First time log Upsilon_t(z) reaches -4s, linearly interpolated between steps.
inline SigmaValue sigma_of_s(const FlowHistory& h, double s) {
    const double s0 = s_start(h.z0);
    if (s < s0) throw std::domain_error("sigma_of_s: s below the starting level");
    const double target = -4.0 * s;
    if (h.log_upsilon.front() <= target) return {0.0, SigmaStatus::ok};
    for (std::size_t k = 1; k < h.size(); ++k) {
        if (h.log_upsilon[k] <= target) {
            const double a = h.log_upsilon[k - 1], b = h.log_upsilon[k];
            const double lam = (a - target) / (a - b);
            return {h.t[k - 1] + lam * (h.t[k] - h.t[k - 1]), SigmaStatus::ok};
        }
    }
    return {std::numeric_limits<double>::infinity(), h.swallowed ? SigmaStatus::swallowed : SigmaStatus::horizon};
}

/// Record of one point along the conformal-radius parametrisation.
/// Arrays cover the prefix of requested levels reached before swallowing or
/// the horizon; `end_status` tells which one stopped the record.
struct RadialSample {
    cplx z0;
    double s0 = 0.0;
    std::vector<double> s_values;
    std::vector<double> sigma;
    std::vector<double> theta_hat;
    std::vector<double> X_sigma;
    std::vector<double> Y_sigma;
    std::vector<double> log_gprime;
    std::vector<double> clock_int; ///< int_{s0}^{s} sin^{-2}(theta_hat)
    std::vector<double> cot_int;   ///< int_{s0}^{s} cot^2(theta_hat)
    SigmaStatus end_status = SigmaStatus::ok;
    double s_end = std::numeric_limits<double>::infinity(); ///< level at swallowing or horizon

    std::size_t size() const noexcept { return s_values.size(); }
};

/// Flows z0 under `driving` and samples the radial record on the levels
/// s0 + i ds, i = 0, 1, ..., up to s_max.
inline RadialSample radial_sample(const DrivingPath& driving, cplx z0, double ds, double s_max) {
    if (!(ds > 0.0)) throw std::invalid_argument("radial_sample: ds must be positive");
    RadialSample r;
    r.z0 = z0;
    r.s0 = s_start(z0);
    FlowPoint p(z0);
    const auto& xi = driving.xi();
    auto inv_sin2 = [](cplx z) { return abs2(z) / (z.imag() * z.imag()); };
    auto cot2 = [](cplx z) { return z.real() * z.real() / (z.imag() * z.imag()); };

    auto push = [&](double s, double t, cplx z, double lg, double clock, double cot) {
        r.s_values.push_back(s);
        r.sigma.push_back(t);
        r.theta_hat.push_back(theta_of_point(z.real(), z.imag()));
        r.X_sigma.push_back(z.real());
        r.Y_sigma.push_back(z.imag());
        r.log_gprime.push_back(lg);
        r.clock_int.push_back(clock);
        r.cot_int.push_back(cot);
    };

    std::size_t next = 0;
    auto level = [&](std::size_t i) { return r.s0 + ds * static_cast<double>(i); };
    push(r.s0, 0.0, p.Z(), 0.0, 0.0, 0.0);
    next = 1;
    double s_prev = r.s0, clock = 0.0, cot = 0.0;
    for (std::size_t k = 1; k <= driving.steps() && level(next) <= s_max; ++k) {
        const double lg_prev = p.log_gprime;
        const double logY_prev = std::log(p.Y);
        const StepInfo st = step_point(p, xi[k] - xi[k - 1], driving.dt(), driving.time(k));
        if (!p.alive()) {
            r.end_status = SigmaStatus::swallowed;
            r.s_end = s_prev;
            return r;
        }
        const double s_new = -0.25 * p.log_upsilon;
        const double dsk = s_new - s_prev;
        const double clock_new = clock + 0.5 * dsk * (inv_sin2(st.w) + inv_sin2(st.z_new));
        const double cot_new = cot + 0.5 * dsk * (cot2(st.w) + cot2(st.z_new));
        while (level(next) <= s_new && level(next) <= s_max) {
            const double s = level(next);
            const double lam = dsk > 0.0 ? (s - s_prev) / dsk : 1.0;
            const double t = driving.time(k - 1) + lam * driving.dt();
            const double X = st.w.real() + lam * (st.z_new.real() - st.w.real());
            const double logY = logY_prev + lam * (std::log(p.Y) - logY_prev);
            push(s, t, cplx{X, std::exp(logY)}, lg_prev + lam * (p.log_gprime - lg_prev),
                 clock + lam * (clock_new - clock), cot + lam * (cot_new - cot));
            ++next;
        }
        s_prev = s_new;
        clock = clock_new;
        cot = cot_new;
    }
    if (level(next) <= s_max) {
        r.end_status = SigmaStatus::horizon;
        r.s_end = s_prev;
    }
    return r;
}

/// max over the record of |Y - Im z0 exp(-2 clock)| / Y.
inline double verify_Y_identity(const RadialSample& r) {
    double err = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double pred = r.z0.imag() * std::exp(-2.0 * r.clock_int[i]);
        err = std::max(err, std::abs(r.Y_sigma[i] - pred) / r.Y_sigma[i]);
    }
    return err;
}

/// max over the record of the relative gap between |g'| and exp(2(s-s0) - 2 int cot^2).
inline double verify_gprime_identity(const RadialSample& r) {
    double err = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double pred = 2.0 * (r.s_values[i] - r.s0) - 2.0 * r.cot_int[i];
        err = std::max(err, std::abs(std::expm1(pred - r.log_gprime[i])));
    }
    return err;
}

/// Relative residual of d sigma / ds = |Z|^4 / Y^2, by centred differences.
inline double sigma_dynamics_residual(const RadialSample& r) {
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < r.size(); ++i) {
        const double fd = (r.sigma[i + 1] - r.sigma[i - 1]) / (r.s_values[i + 1] - r.s_values[i - 1]);
        const double X = r.X_sigma[i], Y = r.Y_sigma[i];
        const double rhs = (X * X + Y * Y) * (X * X + Y * Y) / (Y * Y);
        worst = std::max(worst, std::abs(fd - rhs) / rhs);
    }
    return worst;
}

inline io::CsvTable radial_to_csv(const RadialSample& r) {
    io::CsvTable t({"s", "sigma", "theta", "Y", "clock"});
    for (std::size_t i = 0; i < r.size(); ++i) t.add(r.s_values[i], r.sigma[i], r.theta_hat[i], r.Y_sigma[i], r.clock_int[i]);
    return t;
}

inline constexpr double infinite_level = std::numeric_limits<double>::infinity();

/// One excursion of X^2/Y^2 from level 1 up to level b.
struct ExcursionRecord {
    double b = 2.0;
    double s_bar = 0.0;
    double S = infinite_level;
    double T = infinite_level;
    int n = 0;
};

/// Stopping times S_0 <= T_0 <= S_1 <= ... inside [s_bar - 2, s_bar + 1]:
/// S_n is the first level at or after T_{n-1} (strictly after) where the
/// ratio is <= 1, and T_n the first level from S_n where it is >= b, capped at
/// s_bar + 1 or at the end of the record. Only finite S_n are returned.
inline std::vector<ExcursionRecord> excursions(const RadialSample& r, double s_bar, double b = 2.0) {
    if (!(b > 1.0)) throw std::invalid_argument("excursions: b must exceed 1");
    const double lo = s_bar - 2.0, hi = s_bar + 1.0;
    std::vector<ExcursionRecord> out;
    auto ratio = [&](std::size_t i) {
        const double q = r.X_sigma[i] / r.Y_sigma[i];
        return q * q;
    };
    std::size_t i = 0;
    while (i < r.size() && r.s_values[i] < lo) ++i;
    const double record_end = r.size() ? r.s_values.back() : lo;
    const double cap = std::min(hi, r.end_status == SigmaStatus::ok ? hi : record_end);
    bool strict = false; // after T_n the search for S_{n+1} starts strictly later
    int n = 0;
    while (true) {
        if (strict) ++i;
        while (i < r.size() && r.s_values[i] <= hi && ratio(i) > 1.0) ++i;
        if (i >= r.size() || r.s_values[i] > hi) break;
        ExcursionRecord e;
        e.b = b;
        e.s_bar = s_bar;
        e.n = n++;
        e.S = r.s_values[i];
        while (i < r.size() && r.s_values[i] <= hi && ratio(i) < b) ++i;
        if (i >= r.size() || r.s_values[i] > hi) {
            e.T = cap;
            out.push_back(e);
            break;
        }
        e.T = r.s_values[i];
        out.push_back(e);
        if (e.T >= hi) break;
        strict = true;
    }
    return out;
}

/// Frequencies of {S_n < infinity}, n = 0, 1, ..., over independent paths.
struct ExcursionStats {
    std::vector<double> frequency; ///< P(S_n < infinity) estimates
    std::vector<long> counts;
    long paths = 0;
};

struct ExcursionMcConfig {
    double kappa = 6.0;
    cplx z0{0.0, 1.0};
    double s_bar = 0.0;
    double b = 2.0;
    double dt = 2e-5;
    double T = 1.0;
    double ds = 1e-3;
    long paths = 10000;
    std::uint64_t seed = 1;
    unsigned workers = 1;
};

inline ExcursionStats excursion_mc(const ExcursionMcConfig& cfg) {
    std::vector<int> per_path(static_cast<std::size_t>(cfg.paths), 0);
    parallel_for(per_path.size(), cfg.workers, [&](std::size_t i) {
        const auto d = DrivingPath::brownian(cfg.kappa, cfg.T, cfg.dt, cfg.seed, i);
        const auto r = radial_sample(d, cfg.z0, cfg.ds, cfg.s_bar + 1.0);
        per_path[i] = static_cast<int>(excursions(r, cfg.s_bar, cfg.b).size());
    });
    ExcursionStats st;
    st.paths = cfg.paths;
    const int n_max = per_path.empty() ? 0 : *std::max_element(per_path.begin(), per_path.end());
    st.counts.assign(static_cast<std::size_t>(n_max), 0);
    for (int c : per_path)
        for (int n = 0; n < c; ++n) ++st.counts[static_cast<std::size_t>(n)];
    for (long c : st.counts) st.frequency.push_back(static_cast<double>(c) / static_cast<double>(cfg.paths));
    return st;
}

} // namespace sle
