#pragma once

// Trace points and uniformising-map evaluations by backward composition of
// inverse slit maps.
//
// With u relative to xi_k, one inverse step is
//     u <- sqrt(u^2 - 4 dt) + (xi_j - xi_{j-1}),   j = k, ..., 1,
// so fhat_k(w) = g_k^{-1}(w + xi_k) and gamma(t_k) = fhat_k(0).

#include "slelab/complex_util.hpp"
#include "slelab/driving.hpp"
#include "slelab/io.hpp"
#include "slelab/loewner_flow.hpp"
#include "slelab/psi_variation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace sle {

inline constexpr double branch_rel_eps = 1e-14;

/// sqrt(u^2 - c) continued from the upper half-plane; real u keeps its sign.
inline cplx inverse_slit_root(cplx u, double c) noexcept {
    cplx r = sqrt_upper(u * u - c);
    if (r.imag() == 0.0 && u.real() < 0.0) r = -r;
    return r;
}

struct FhatValue {
    cplx value;
    double deriv = 1.0;   ///< |fhat_k'(w)|
    bool flagged = false; ///< some step passed within the branch tolerance of the cut
};

/// fhat_k(w) together with |fhat_k'(w)|.
inline FhatValue fhat_full(const DrivingPath& driving, std::size_t k, cplx w) {
    if (k > driving.steps()) throw std::out_of_range("fhat: step index beyond the driving path");
    if (w.imag() < 0.0) throw std::domain_error("fhat: w must lie in the closed upper half-plane");
    const auto& xi = driving.xi();
    const double c = 4.0 * driving.dt();
    FhatValue out{w, 1.0, false};
    cplx u = w;
    double deriv = 1.0;
    bool flagged = false;
    for (std::size_t j = k; j >= 1; --j) {
        const cplx a = u * u - c;
        const double u2 = abs2(u);
        if (abs2(a) < branch_rel_eps * branch_rel_eps * std::max(1.0, u2) * std::max(1.0, u2)) flagged = true;
        cplx r = sqrt_upper(a);
        if (r.imag() == 0.0 && u.real() < 0.0) r = -r;
        if (u2 > 0.0) deriv *= std::sqrt(u2 / abs2(r));
        u = r + (xi[j] - xi[j - 1]);
    }
    out.value = u + xi[0];
    out.deriv = deriv;
    out.flagged = flagged;
    return out;
}

inline cplx fhat_eval(const DrivingPath& driving, std::size_t k, cplx w) { return fhat_full(driving, k, w).value; }

inline double fhat_deriv(const DrivingPath& driving, std::size_t k, cplx w) {
    if (!(w.imag() > 0.0)) throw std::domain_error("fhat_deriv: w must lie in the open upper half-plane");
    return fhat_full(driving, k, w).deriv;
}

inline cplx trace_point(const DrivingPath& driving, std::size_t k) {
    if (k > driving.steps()) throw std::out_of_range("trace_point: step index beyond the driving path");
    return fhat_full(driving, k, cplx{0.0, 0.0}).value;
}

/// gamma(t_k) for k = 0..steps. Quadratic in the step count; four chains
/// run interleaved to overlap the sqrt latency.
inline std::vector<cplx> compute_trace(const DrivingPath& driving) {
    const std::size_t n = driving.steps();
    const auto& xi = driving.xi();
    std::vector<double> dxi(n + 1, 0.0);
    for (std::size_t j = 1; j <= n; ++j) dxi[j] = xi[j] - xi[j - 1];
    const double c = 4.0 * driving.dt();
    // the first inverse step sends 0 to 2i sqrt(dt)
    const cplx tip{0.0, std::sqrt(c)};
    std::vector<cplx> gamma(n + 1);
    gamma[0] = cplx{0.0, 0.0};
    std::size_t k = 1;
    for (; k + 3 <= n; k += 4) {
        cplx u0 = tip + dxi[k], u1 = tip + dxi[k + 1], u2 = tip + dxi[k + 2], u3 = tip + dxi[k + 3];
        u3 = sqrt_upper(u3 * u3 - c) + dxi[k + 2];
        u3 = sqrt_upper(u3 * u3 - c) + dxi[k + 1];
        u2 = sqrt_upper(u2 * u2 - c) + dxi[k + 1];
        for (std::size_t j = k; j >= 2; --j) {
            const double d = dxi[j];
            u1 = sqrt_upper(u1 * u1 - c) + d;
            u2 = sqrt_upper(u2 * u2 - c) + d;
            u3 = sqrt_upper(u3 * u3 - c) + d;
            u0 = sqrt_upper(u0 * u0 - c) + dxi[j - 1];
        }
        // u0 has consumed steps k..1 and u1..u3 have reached step 1
        u1 = sqrt_upper(u1 * u1 - c) + dxi[1];
        u2 = sqrt_upper(u2 * u2 - c) + dxi[1];
        u3 = sqrt_upper(u3 * u3 - c) + dxi[1];
        gamma[k] = u0 + xi[0];
        gamma[k + 1] = u1 + xi[0];
        gamma[k + 2] = u2 + xi[0];
        gamma[k + 3] = u3 + xi[0];
    }
    for (; k <= n; ++k) gamma[k] = trace_point(driving, k);
    return gamma;
}

inline SampledPath trace_path(const DrivingPath& driving) {
    auto pts = compute_trace(driving);
    std::vector<double> t(pts.size());
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = driving.time(k);
    return SampledPath(std::move(t), std::move(pts));
}

inline io::CsvTable trace_to_csv(const SampledPath& trace) { return path_to_csv(trace); }

/// |fhat(2iv) - fhat(iv)| / (v |fhat'(iv)|); bounded by a Koebe constant.
inline double dyadic_increment_ratio(const DrivingPath& driving, std::size_t k, double v) {
    if (!(v > 0.0 && v <= 1.0)) throw std::invalid_argument("dyadic_increment_ratio: v must lie in (0,1]");
    const FhatValue a = fhat_full(driving, k, cplx{0.0, v});
    const cplx b = fhat_eval(driving, k, cplx{0.0, 2.0 * v});
    return std::abs(b - a.value) / (v * a.deriv);
}

/// Bound for the ratio above. On the disk of radius y about iy, a univalent
/// map satisfies |f'(iv)| >= |f'(iy)| (1-r)/(1+r)^3 with r = 1 - v/y, and
/// integrating |f'(iy)| over y in [v, 2v] gives 6 log 2 - 1/2.
inline const double koebe_increment_bound = 6.0 * std::log(2.0) - 0.5;

struct DyadicCheck {
    double ratio = 0.0;
    bool within_bound = false;
};

inline DyadicCheck dyadic_increment_bound_check(const DrivingPath& driving, std::size_t k, double v,
                                                double bound = koebe_increment_bound) {
    const double r = dyadic_increment_ratio(driving, k, v);
    return {r, r <= bound};
}

/// max_k |gamma(t_{k+1}) - gamma(t_k)|.
inline double max_increment(const std::vector<cplx>& gamma) {
    double m = 0.0;
    for (std::size_t k = 1; k < gamma.size(); ++k) m = std::max(m, std::abs(gamma[k] - gamma[k - 1]));
    return m;
}

/// Largest increment over pairs of trace samples a fixed time lag apart.
inline double max_lag_increment(const std::vector<cplx>& gamma, std::size_t lag) {
    double m = 0.0;
    for (std::size_t k = lag; k < gamma.size(); ++k) m = std::max(m, std::abs(gamma[k] - gamma[k - lag]));
    return m;
}

struct DerivativeSample {
    double t;
    double u;
    double v;
    double deriv;
    bool flagged;
};

/// |fhat_k'(u + iv)| at every requested (k, u, v) triple.
inline std::vector<DerivativeSample> derivative_scan(const DrivingPath& driving, const std::vector<std::size_t>& ks,
                                                     const std::vector<double>& us, const std::vector<double>& vs) {
    std::vector<DerivativeSample> out;
    for (std::size_t k : ks)
        for (double u : us)
            for (double v : vs) {
                const FhatValue f = fhat_full(driving, k, cplx{u, v});
                out.push_back({driving.time(k), u, v, f.deriv, f.flagged});
            }
    return out;
}

inline io::CsvTable derivative_scan_csv(const std::vector<DerivativeSample>& scan) {
    io::CsvTable t({"t", "u", "v", "deriv", "flagged"});
    for (const auto& s : scan) t.add(s.t, s.u, s.v, s.deriv, s.flagged);
    return t;
}

/// diam(gamma[s,t]) / (|t-s|^{1/2} |fhat_s'(i |t-s|^{1/2})|); diagnostic only.
inline double diameter_derivative_ratio(const DrivingPath& driving, const std::vector<cplx>& gamma, std::size_t ks,
                                        std::size_t kt) {
    if (!(ks < kt) || kt >= gamma.size()) throw std::invalid_argument("diameter_derivative_ratio: need ks < kt");
    double diam = 0.0;
    for (std::size_t i = ks; i <= kt; ++i)
        for (std::size_t j = i + 1; j <= kt; ++j) diam = std::max(diam, std::abs(gamma[j] - gamma[i]));
    const double h = std::sqrt(driving.time(kt) - driving.time(ks));
    return diam / (h * fhat_deriv(driving, ks, cplx{0.0, h}));
}

/// Hull size diagnostics at step k.
struct HullReport {
    double t = 0.0;
    double hcap_est = 0.0;
    double height_est = 0.0; ///< max Im over the trace up to t
    double diam_est = 0.0;   ///< diameter of the trace and its base point
};

inline HullReport hull_report(const DrivingPath& driving, const std::vector<cplx>& gamma, std::size_t k, double R) {
    if (k >= gamma.size()) throw std::out_of_range("hull_report: step index beyond the trace");
    HullReport r;
    r.t = driving.time(k);
    r.hcap_est = k == 0 ? 0.0 : hcap_estimate(driving, k, R);
    double lo = 0.0, hi = 0.0;
    for (std::size_t j = 0; j <= k; ++j) {
        r.height_est = std::max(r.height_est, gamma[j].imag());
        lo = std::min(lo, gamma[j].real());
        hi = std::max(hi, gamma[j].real());
    }
    // the hull is contained in [lo, hi] x [0, height]
    r.diam_est = std::hypot(hi - lo, r.height_est);
    return r;
}

/// height^2 <= c1 hcap and hcap <= c2 diam height.
inline bool hull_bounds_hold(const HullReport& r, double c1, double c2) {
    return r.height_est * r.height_est <= c1 * r.hcap_est && r.hcap_est <= c2 * r.diam_est * r.height_est;
}

} // namespace sle
