#pragma once

// Forward chordal Loewner flow by composition of exact vertical-slit maps.
//
// Step k replaces the relative coordinate Z = g - xi_{k-1} by
//     W = Z - (xi_k - xi_{k-1}),   Z' = sqrt(W^2 + 4 dt),
// which is the exact flow over one step with the driving value frozen at xi_k.

#include "slelab/complex_util.hpp"
#include "slelab/driving.hpp"
#include "slelab/io.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sle {

inline constexpr double swallow_rel_eps = 1e-12;

enum class PointStatus { alive, swallowed };

struct FlowPoint {
    cplx z0;
    double X = 0.0;           ///< Re(g_t(z0) - xi_t)
    double Y = 0.0;           ///< Im g_t(z0)
    double log_gprime = 0.0;  ///< log |g_t'(z0)|
    double log_upsilon = 0.0; ///< log(Y / |g_t'|)
    PointStatus status = PointStatus::alive;
    double t_swallow = std::numeric_limits<double>::infinity();

    explicit FlowPoint(cplx z) : z0(z), X(z.real()), Y(z.imag()), log_upsilon(std::log(z.imag())) {
        if (!(z.imag() > 0.0)) throw std::domain_error("FlowPoint: start must lie in the upper half-plane");
    }

    bool alive() const noexcept { return status == PointStatus::alive; }
    cplx Z() const noexcept { return {X, Y}; }
};

/// Start and end relative coordinates of one elementary step.
struct StepInfo {
    cplx w;     ///< after the driving shift
    cplx z_new; ///< after the slit map
};

/// Advances one point by one step; returns the step's endpoints.
/// Swallowed points are left untouched.
inline StepInfo step_point(FlowPoint& p, double dxi, double dt, double t_new) noexcept {
    const cplx w{p.X - dxi, p.Y};
    if (!p.alive()) return {w, w};
    const cplx z = sqrt_upper(w * w + 4.0 * dt);
    const double threshold = swallow_rel_eps * p.z0.imag();
    if (!(z.imag() >= threshold) || z.imag() == 0.0) {
        p.status = PointStatus::swallowed;
        p.t_swallow = t_new;
        return {w, z};
    }
    p.log_gprime += 0.5 * (std::log(abs2(w)) - std::log(abs2(z)));
    p.X = z.real();
    p.Y = z.imag();
    p.log_upsilon = std::log(p.Y) - p.log_gprime;
    return {w, z};
}

/// One step for every point.
inline void advance_flow(std::span<FlowPoint> points, double xi_old, double xi_new, double dt, double t_new) {
    if (!(dt > 0.0)) throw std::invalid_argument("advance_flow: dt must be positive");
    const double dxi = xi_new - xi_old;
    for (auto& p : points) step_point(p, dxi, dt, t_new);
}

/// Flows `points` through steps 1..k_end of `driving`.
inline void run_flow(const DrivingPath& driving, std::span<FlowPoint> points, std::size_t k_end) {
    if (k_end > driving.steps()) throw std::out_of_range("run_flow: step index beyond the driving path");
    const auto& xi = driving.xi();
    for (std::size_t k = 1; k <= k_end; ++k) advance_flow(points, xi[k - 1], xi[k], driving.dt(), driving.time(k));
}

/// Per-step record of a single tracked point. Entry 0 is the initial state;
/// entry k > 0 holds the state after step k and the shifted start w of that step.
struct FlowHistory {
    cplx z0;
    std::vector<double> t;
    std::vector<cplx> Z;
    std::vector<cplx> w;
    std::vector<double> log_gprime;
    std::vector<double> log_upsilon;
    bool swallowed = false;
    double t_swallow = std::numeric_limits<double>::infinity();

    std::size_t size() const noexcept { return t.size(); }
};

/// Flows one point and records every step until k_end or swallowing.
inline FlowHistory track_point(const DrivingPath& driving, cplx z0, std::size_t k_end) {
    if (k_end > driving.steps()) throw std::out_of_range("track_point: step index beyond the driving path");
    FlowPoint p(z0);
    FlowHistory h;
    h.z0 = z0;
    h.t.reserve(k_end + 1);
    h.Z.reserve(k_end + 1);
    h.w.reserve(k_end + 1);
    h.log_gprime.reserve(k_end + 1);
    h.log_upsilon.reserve(k_end + 1);
    auto record = [&](double t, cplx w) {
        h.t.push_back(t);
        h.Z.push_back(p.Z());
        h.w.push_back(w);
        h.log_gprime.push_back(p.log_gprime);
        h.log_upsilon.push_back(p.log_upsilon);
    };
    record(0.0, z0);
    const auto& xi = driving.xi();
    for (std::size_t k = 1; k <= k_end; ++k) {
        const StepInfo s = step_point(p, xi[k] - xi[k - 1], driving.dt(), driving.time(k));
        if (!p.alive()) {
            h.swallowed = true;
            h.t_swallow = p.t_swallow;
            break;
        }
        record(driving.time(k), s.w);
    }
    return h;
}

/// First time the point is swallowed (infinite if it survives the horizon).
inline double swallow_time(const DrivingPath& driving, cplx z0) {
    FlowPoint p(z0);
    const auto& xi = driving.xi();
    for (std::size_t k = 1; k <= driving.steps(); ++k) {
        step_point(p, xi[k] - xi[k - 1], driving.dt(), driving.time(k));
        if (!p.alive()) return p.t_swallow;
    }
    return std::numeric_limits<double>::infinity();
}

/// log|g_t'| by trapezoid quadrature of -2 (X^2 - Y^2) / (X^2 + Y^2)^2 along
/// each elementary step. Throws if the point was swallowed.
inline double log_gprime_direct(const FlowHistory& h) {
    if (h.swallowed) throw std::domain_error("log_gprime_direct: point was swallowed");
    auto rate = [](cplx z) {
        const double r2 = abs2(z);
        return -2.0 * (z.real() * z.real() - z.imag() * z.imag()) / (r2 * r2);
    };
    double acc = 0.0;
    for (std::size_t k = 1; k < h.size(); ++k) acc += 0.5 * (h.t[k] - h.t[k - 1]) * (rate(h.w[k]) + rate(h.Z[k]));
    return acc;
}

/// Upsilon_t(z) = Y_t / |g_t'(z)|, half the conformal radius of z in H_t.
inline double conformal_radius(const FlowPoint& p) {
    if (!p.alive()) throw std::domain_error("conformal_radius: point was swallowed");
    return std::exp(p.log_upsilon);
}

/// Re[(g_t(iR) - iR) iR]; approximates hcap(K_t) when R is large against the hull.
inline double hcap_estimate(const DrivingPath& driving, std::size_t k, double R) {
    if (!(R > 0.0)) throw std::invalid_argument("hcap_estimate: R must be positive");
    FlowPoint p(cplx{0.0, R});
    run_flow(driving, std::span<FlowPoint>(&p, 1), k);
    if (!p.alive()) throw std::domain_error("hcap_estimate: probe point was swallowed, R too small");
    const cplx g = cplx{p.X + driving[k], p.Y};
    const cplx iR{0.0, R};
    return ((g - iR) * iR).real();
}

struct HcapCheck {
    double estimate_small_R = 0.0;
    double estimate_large_R = 0.0;
    bool consistent = false; ///< the two radii agree within tolerance
};

inline HcapCheck hcap_check(const DrivingPath& driving, std::size_t k, double R1, double R2, double rel_tol) {
    HcapCheck c;
    c.estimate_small_R = hcap_estimate(driving, k, R1);
    c.estimate_large_R = hcap_estimate(driving, k, R2);
    const double scale = std::max(std::abs(c.estimate_large_R), std::numeric_limits<double>::min());
    c.consistent = std::abs(c.estimate_small_R - c.estimate_large_R) <= rel_tol * scale;
    return c;
}

inline io::CsvTable flow_snapshot(std::span<const FlowPoint> points) {
    io::CsvTable t({"re0", "im0", "X", "Y", "log_gprime", "status"});
    for (const auto& p : points)
        t.add(p.z0.real(), p.z0.imag(), p.X, p.Y, p.log_gprime, std::string(p.alive() ? "alive" : "swallowed"));
    return t;
}

} // namespace sle
