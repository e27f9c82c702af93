#pragma once

// Seeded experiment runners. Each returns a CSV table plus a summary; the
// writer adds a key=value sidecar (config, version, wall time) and a gnuplot
// script. Tables depend only on the config, never on the worker count.

#include "slelab/bessel.hpp"
#include "slelab/driving.hpp"
#include "slelab/exponents.hpp"
#include "slelab/grid.hpp"
#include "slelab/io.hpp"
#include "slelab/parallel.hpp"
#include "slelab/psi_variation.hpp"
#include "slelab/stats.hpp"
#include "slelab/trace.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#ifndef SLELAB_VERSION
#define SLELAB_VERSION "unknown"
#endif

namespace sle {

inline constexpr std::array<const char*, 8> experiment_names = {"trace",  "psivar",  "holder",  "unifmap",
                                                                "bessel", "gridsum", "witness", "exponents"};

inline bool is_registered_experiment(const std::string& name) {
    return std::find(experiment_names.begin(), experiment_names.end(), name) != experiment_names.end();
}

inline std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        std::size_t used = 0;
        const double v = std::stod(item, &used);
        if (item.find_first_not_of(" \t", used) != std::string::npos)
            throw std::invalid_argument("list: not a number: '" + item + "'");
        out.push_back(v);
    }
    return out;
}

struct ExperimentConfig {
    std::string name = "trace";
    double kappa = 2.0;
    double T = 1.0;
    double dt = 1e-3;
    long n = 1;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    std::string out_dir = ".";
    io::KeyValues extra; ///< experiment-specific keys, including tol.* entries

    double get(const std::string& key, double fallback) const {
        const auto it = extra.find(key);
        return it == extra.end() ? fallback : std::stod(it->second);
    }
    std::string get_str(const std::string& key, const std::string& fallback) const {
        const auto it = extra.find(key);
        return it == extra.end() ? fallback : it->second;
    }
    std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const {
        const auto it = extra.find(key);
        return it == extra.end() ? fallback : parse_list(it->second);
    }
    double tolerance(const std::string& key, double fallback) const { return get("tol." + key, fallback); }

    void validate() const {
        if (!is_registered_experiment(name)) throw std::invalid_argument("unknown experiment '" + name + "'");
        // kappa = 0 is the deterministic control
        if (!(kappa >= 0.0)) throw std::invalid_argument("config: kappa must be nonnegative");
        if (!(T > 0.0 && dt > 0.0 && n > 0)) throw std::invalid_argument("config: T, dt and n must be positive");
        if (dt > T) throw std::invalid_argument("config: dt must not exceed T");
    }

    /// Applies key=value settings; unknown keys land in `extra`.
    void apply(const io::KeyValues& kv) {
        for (const auto& [k, v] : kv) {
            if (k == "experiment" || k == "name") name = v;
            else if (k == "kappa") kappa = std::stod(v);
            else if (k == "T") T = std::stod(v);
            else if (k == "dt") dt = std::stod(v);
            else if (k == "n") n = std::stol(v);
            else if (k == "seed") seed = std::stoull(v);
            else if (k == "workers") workers = static_cast<unsigned>(std::stoul(v));
            else if (k == "out") out_dir = v;
            else extra[k] = v;
        }
    }

    io::KeyValues to_key_values() const {
        io::KeyValues kv = extra;
        kv["experiment"] = name;
        kv["kappa"] = io::fmt_double(kappa);
        kv["T"] = io::fmt_double(T);
        kv["dt"] = io::fmt_double(dt);
        kv["n"] = std::to_string(n);
        kv["seed"] = std::to_string(seed);
        kv["workers"] = std::to_string(workers);
        kv["out"] = out_dir;
        return kv;
    }

    std::size_t steps() const { return static_cast<std::size_t>(std::llround(T / dt)); }
};

struct ExperimentReport {
    std::string name;
    io::CsvTable table;
    io::KeyValues summary;
    std::string plot_using = "1:2"; ///< gnuplot column spec
    double wall_seconds = 0.0;
};

inline std::string plot_script(const ExperimentReport& r) {
    std::string s;
    s += "# gnuplot script for " + r.name + ".csv\n";
    s += "set datafile separator ','\n";
    s += "set key autotitle columnhead\n";
    s += "set terminal pngcairo size 900,600\n";
    s += "set output '" + r.name + ".png'\n";
    s += "plot '" + r.name + ".csv' using " + r.plot_using + " with linespoints\n";
    return s;
}

/// Writes <out>/<name>.csv, <name>.meta and <name>.gp.
inline void write_report(const ExperimentReport& r, const ExperimentConfig& cfg) {
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    r.table.save((dir / (r.name + ".csv")).string());
    io::KeyValues meta;
    for (const auto& [k, v] : cfg.to_key_values()) meta["config." + k] = v;
    for (const auto& [k, v] : r.summary) meta["result." + k] = v;
    meta["version"] = SLELAB_VERSION;
    meta["wall_seconds"] = io::fmt_double(r.wall_seconds);
    io::save_text((dir / (r.name + ".meta")).string(), io::format_key_values(meta));
    io::save_text((dir / (r.name + ".gp")).string(), plot_script(r));
}

namespace detail {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline std::size_t pow2(int e) { return std::size_t{1} << e; }

} // namespace detail

// ---------------------------------------------------------------------------

inline ExperimentReport run_sle_trace(const ExperimentConfig& cfg) {
    detail::Stopwatch sw;
    const auto d = DrivingPath::brownian(cfg.kappa, cfg.T, cfg.dt, cfg.seed);
    const auto tr = trace_path(d);
    ExperimentReport r{"trace", trace_to_csv(tr), {}, "2:3"};
    r.summary["steps"] = std::to_string(d.steps());
    r.summary["max_increment"] = io::fmt_double(max_increment(tr.points));
    r.wall_seconds = sw.seconds();
    return r;
}

/// Values of a path functional across dyadic refinements for several seeds:
/// values[g][seed][level], level 0 coarsest.
struct RefinementStudy {
    std::vector<std::string> labels;
    std::vector<std::vector<std::vector<double>>> values;
    std::vector<std::size_t> steps; ///< step count at each level

    /// Median over seeds of value[level] / value[level - 1].
    double median_ratio(std::size_t g, std::size_t level) const {
        std::vector<double> r;
        for (const auto& s : values[g]) r.push_back(s[level] / s[level - 1]);
        return stats::median(r);
    }
    /// Median over seeds of value[finest] / value[coarsest].
    double median_total_ratio(std::size_t g) const {
        std::vector<double> r;
        for (const auto& s : values[g]) r.push_back(s.back() / s.front());
        return stats::median(r);
    }
    io::CsvTable to_csv() const {
        io::CsvTable t({"seed", "level", "steps", "functional", "value"});
        for (std::size_t g = 0; g < labels.size(); ++g)
            for (std::size_t s = 0; s < values[g].size(); ++s)
                for (std::size_t l = 0; l < steps.size(); ++l)
                    t.add(static_cast<long>(s), static_cast<long>(l), static_cast<long>(steps[l]), labels[g], values[g][s][l]);
        return t;
    }
};

/// Per seed, traces at step counts N / 2^(levels-1), ..., N from one
/// Brownian path; `eval(trace, g)` computes functional g at each level.
template <class Eval>
RefinementStudy refinement_study(const ExperimentConfig& cfg, int levels, std::vector<std::string> labels, Eval&& eval,
                                 double t_start = 0.0) {
    if (levels < 2) throw std::invalid_argument("refinement_study: need at least two levels");
    const std::size_t N = cfg.steps();
    if (N % detail::pow2(levels - 1) != 0) throw std::invalid_argument("refinement_study: T/dt must divide into dyadic levels");
    RefinementStudy st;
    st.labels = std::move(labels);
    st.values.assign(st.labels.size(), std::vector<std::vector<double>>(static_cast<std::size_t>(cfg.n)));
    for (int l = 0; l < levels; ++l) st.steps.push_back(N / detail::pow2(levels - 1 - l));
    parallel_for(static_cast<std::size_t>(cfg.n), cfg.workers, [&](std::size_t s) {
        const auto fine = DrivingPath::brownian(cfg.kappa, cfg.T, cfg.dt, cfg.seed, s);
        for (int l = 0; l < levels; ++l) {
            const auto d = fine.coarsen(detail::pow2(levels - 1 - l));
            SampledPath tr = trace_path(d);
            if (t_start > 0.0) {
                const auto first = static_cast<std::size_t>(std::ceil(t_start / d.dt() - 1e-9));
                tr = SampledPath(std::vector<double>(tr.times.begin() + static_cast<long>(first), tr.times.end()),
                                 std::vector<cplx>(tr.points.begin() + static_cast<long>(first), tr.points.end()));
            }
            for (std::size_t g = 0; g < st.labels.size(); ++g) {
                auto& slot = st.values[g][s];
                if (slot.empty()) slot.resize(static_cast<std::size_t>(levels));
                slot[static_cast<std::size_t>(l)] = eval(tr, g);
            }
        }
    });
    return st;
}

struct PsiVariationResult {
    RefinementStudy study;
    std::vector<double> p_values;
};

/// V^1 of the trace for plain x^p gauges (keys `p`) and psi_{d,q} gauges (keys `q`).
inline PsiVariationResult psi_variation_study(const ExperimentConfig& cfg) {
    if (std::abs(cfg.kappa - 8.0) < 1e-12) throw std::invalid_argument("psivar: kappa = 8 is excluded");
    const int levels = static_cast<int>(cfg.get("levels", 4));
    const auto ps = cfg.get_list("p", {1.0, 1.6});
    const auto qs = cfg.get_list("q", {});
    const double d = exponent_formulas(cfg.kappa).d;
    std::vector<PsiSpec> gauges;
    std::vector<std::string> labels;
    for (double p : ps) {
        gauges.emplace_back(p);
        labels.push_back("p=" + io::fmt_double(p));
    }
    for (double q : qs) {
        gauges.emplace_back(d, q, cfg.get("x0", 0.5));
        labels.push_back("psi_d_q=" + io::fmt_double(q));
    }
    PsiVariationResult res;
    res.p_values = ps;
    res.study = refinement_study(cfg, levels, labels,
                                 [&](const SampledPath& tr, std::size_t g) { return psi_var_value(tr, gauges[g], 1.0); });
    return res;
}

inline ExperimentReport experiment_psi_variation(const ExperimentConfig& cfg) {
    detail::Stopwatch sw;
    const auto res = psi_variation_study(cfg);
    ExperimentReport r{"psivar", res.study.to_csv(), {}, "2:5"};
    for (std::size_t g = 0; g < res.study.labels.size(); ++g) {
        for (std::size_t l = 1; l < res.study.steps.size(); ++l)
            r.summary["ratio." + res.study.labels[g] + ".level" + std::to_string(l)] =
                io::fmt_double(res.study.median_ratio(g, l));
        r.summary["total_ratio." + res.study.labels[g]] = io::fmt_double(res.study.median_total_ratio(g));
    }
    r.wall_seconds = sw.seconds();
    return r;
}

/// Modulus for kappa: (alpha, beta) from the closed forms, or (log* 1/t)^{-1/4+eps} at kappa = 8.
inline ModulusSpec kappa_modulus(double kappa, double alpha_shift = 0.0, double eps = 0.1) {
    const auto e = exponent_formulas(kappa);
    if (e.critical) return ModulusSpec{0.0 + alpha_shift, -0.25 + eps, eps, false};
    return ModulusSpec{e.alpha + alpha_shift, e.beta, eps, true};
}

inline RefinementStudy holder_study(const ExperimentConfig& cfg) {
    const int levels = static_cast<int>(cfg.get("levels", 4));
    const double shift = cfg.get("alpha_shift", 0.05);
    const double eps = cfg.get("ell_epsilon", 0.1);
    const double t0 = cfg.get("t0", 0.0);
    const std::vector<ModulusSpec> mods = {kappa_modulus(cfg.kappa, 0.0, eps), kappa_modulus(cfg.kappa, shift, eps),
                                           kappa_modulus(cfg.kappa, -shift, eps)};
    const std::vector<std::string> labels = {"alpha", "alpha+" + io::fmt_double(shift), "alpha-" + io::fmt_double(shift)};
    return refinement_study(
        cfg, levels, labels, [&](const SampledPath& tr, std::size_t g) { return holder_ratio_sup(tr, mods[g]); }, t0);
}

inline ExperimentReport experiment_holder_modulus(const ExperimentConfig& cfg) {
    detail::Stopwatch sw;
    const auto st = holder_study(cfg);
    ExperimentReport r{"holder", st.to_csv(), {}, "2:5"};
    for (std::size_t g = 0; g < st.labels.size(); ++g)
        r.summary["total_ratio." + st.labels[g]] = io::fmt_double(st.median_total_ratio(g));
    r.wall_seconds = sw.seconds();
    return r;
}

/// Fitted power of v in sup_t |fhat_t'(iv)| for v = 2^{-m}.
struct UnifMapResult {
    std::vector<double> v;
    std::vector<double> median_sup;
    std::vector<double> slopes; ///< one fitted power per seed
    double median_slope = 0.0;
    double slope_ci_lo = 0.0; ///< 2.5% and 97.5% empirical quantiles over seeds
    double slope_ci_hi = 0.0;
    double predicted = 0.0; ///< 2 alpha - 1 (kappa > 8), -1 at kappa = 8, 0 for the bounded control
};

inline UnifMapResult unif_map_study(const ExperimentConfig& cfg) {
    if (cfg.kappa != 0.0 && cfg.kappa < 8.0) throw std::invalid_argument("unifmap: kappa must be >= 8 (or 0 as control)");
    const auto ms = cfg.get_list("m", {1, 2, 3, 4, 5});
    const auto stride = static_cast<std::size_t>(cfg.get("t_stride", 16));
    UnifMapResult res;
    for (double m : ms) res.v.push_back(std::pow(2.0, -m));
    const auto e = cfg.kappa > 0.0 ? exponent_formulas(cfg.kappa) : ExponentTable{};
    res.predicted = cfg.kappa == 0.0 ? 0.0 : e.critical ? -1.0 : 2.0 * e.alpha - 1.0;
    std::vector<std::vector<double>> sups(static_cast<std::size_t>(cfg.n), std::vector<double>(ms.size()));
    parallel_for(static_cast<std::size_t>(cfg.n), cfg.workers, [&](std::size_t s) {
        const auto d = DrivingPath::brownian(cfg.kappa, cfg.T, cfg.dt, cfg.seed, s);
        for (std::size_t i = 0; i < ms.size(); ++i) {
            double best = 0.0;
            for (std::size_t k = stride; k <= d.steps(); k += stride)
                best = std::max(best, fhat_deriv(d, k, cplx{0.0, res.v[i]}));
            if (d.steps() % stride) best = std::max(best, fhat_deriv(d, d.steps(), cplx{0.0, res.v[i]}));
            sups[s][i] = best;
        }
    });
    std::vector<double> lv;
    for (double v : res.v) lv.push_back(std::log(v));
    for (const auto& row : sups) {
        std::vector<double> ly;
        for (double x : row) ly.push_back(std::log(x));
        res.slopes.push_back(stats::fit_line(lv, ly).slope);
    }
    for (std::size_t i = 0; i < ms.size(); ++i) {
        std::vector<double> col;
        for (const auto& row : sups) col.push_back(row[i]);
        res.median_sup.push_back(stats::median(col));
    }
    std::vector<double> sorted = res.slopes;
    std::sort(sorted.begin(), sorted.end());
    res.median_slope = stats::median(sorted);
    auto q = [&](double f) { return sorted[static_cast<std::size_t>(std::floor(f * static_cast<double>(sorted.size() - 1)))]; };
    res.slope_ci_lo = q(0.025);
    res.slope_ci_hi = q(0.975);
    return res;
}

inline ExperimentReport experiment_unif_map_scaling(const ExperimentConfig& cfg) {
    detail::Stopwatch sw;
    const auto res = unif_map_study(cfg);
    io::CsvTable t({"v", "median_sup"});
    for (std::size_t i = 0; i < res.v.size(); ++i) t.add(res.v[i], res.median_sup[i]);
    ExperimentReport r{"unifmap", t, {}, "1:2"};
    r.summary["fitted_power"] = io::fmt_double(res.median_slope);
    r.summary["fitted_power_ci_lo"] = io::fmt_double(res.slope_ci_lo);
    r.summary["fitted_power_ci_hi"] = io::fmt_double(res.slope_ci_hi);
    r.summary["predicted_power"] = io::fmt_double(res.predicted);
    r.wall_seconds = sw.seconds();
    return r;
}

inline ExperimentReport experiment_bessel_suite(const ExperimentConfig& cfg) {
    detail::Stopwatch sw;
    io::CsvTable t({"check", "value", "target", "tolerance", "pass"});
    const long n = cfg.n;
    const unsigned w = cfg.workers;
    const auto seed = cfg.seed;
    {
        const auto clocks = usual_bessel_clocks(1.0, std::exp(1.0), n, seed, cfg.get("clock_step", 0.01),
                                                cfg.get("clock_cap", 1000.0), w);
        const double ks = stats::ks_distance(clocks, [](double r) { return usual_bessel_clock_cdf(std::exp(1.0), r); },
                                             cfg.get("clock_cap", 1000.0));
        const double tol = cfg.tolerance("clock_ks", 0.02);
        t.add(std::string("usual_clock_ks"), ks, 0.0, tol, ks < tol);
    }
    {
        TailConfig tc;
        tc.workers = w;
        const auto fit = critical_clock_tail(1.0, pi / 2, n, seed + 1, tc);
        const double tol = cfg.tolerance("tail_slope", 0.1);
        t.add(std::string("critical_tail_slope"), fit.slope, -0.5, tol, std::abs(fit.slope + 0.5) <= tol);
    }
    {
        BesselConfig bc{0.5, pi / 2, cfg.get("density_step", 1e-2), 1e-6, 5.0, 1.0};
        const double gap = stationary_discrepancy(bc, n, 50, seed + 2, w);
        const double tol = cfg.tolerance("density_sup", 0.05);
        t.add(std::string("stationary_density_sup"), gap, 0.0, tol, gap <= tol);
    }
    {
        const auto h = hitting_probability_check(0.5, 2.0, 1.0, 0.0, n, seed + 3, 0.005, 1000.0, w);
        t.add(std::string("hitting_probability"), h.probability, h.predicted, 3.0 * h.se,
              std::abs(h.probability - h.predicted) <= 3.0 * h.se);
    }
    {
        BesselConfig bc{0.5, pi / 2, cfg.get("martingale_step", 1e-3), 1e-6, 1.0, 1.0};
        const auto m = martingale_mean(bc, 1.0, n, seed + 4, w);
        t.add(std::string("martingale_mean"), m.mean, 1.0, 3.0 * m.se, std::abs(m.mean - 1.0) <= 3.0 * m.se);
    }
    ExperimentReport r{"bessel", t, {}, "0:2"};
    r.wall_seconds = sw.seconds();
    return r;
}

/// The nine regimes of the grid-sum table, one (a, zeta) pair each.
inline const std::vector<std::array<double, 2>>& grid_regime_pairs() {
    static const std::vector<std::array<double, 2>> pairs = {{2.0, -3.0}, {2.0, -2.0}, {2.0, 0.0},
                                                             {1.0, -3.0}, {1.0, -2.0}, {1.0, 0.0},
                                                             {0.5, -2.0}, {0.5, -1.5}, {0.5, 0.0}};
    return pairs;
}

inline std::vector<GridSumRow> grid_sum_sweep(double M, double T, int e_min, int e_max) {
    std::vector<GridSumRow> rows;
    for (const auto& [a, z] : grid_regime_pairs())
        for (int e = e_min; e <= e_max; ++e) {
            const double h = std::ldexp(1.0, -e);
            rows.push_back({h, a, z, grid_sum(GridSpec{h, M, T}, a, z), predicted_rate(a, z, h)});
        }
    return rows;
}

inline ExperimentReport experiment_grid_sum(const ExperimentConfig& cfg) {
    detail::Stopwatch sw;
    const auto rows = grid_sum_sweep(cfg.get("M", 1.0), cfg.T, static_cast<int>(cfg.get("h_exp_min", 4)),
                                     static_cast<int>(cfg.get("h_exp_max", 8)));
    ExperimentReport r{"gridsum", grid_sum_csv(rows), {}, "1:($4/$5)"};
    r.wall_seconds = sw.seconds();
    return r;
}

/// Witness searches at n random (t, v) events with r = |fhat_t'(iv)|.
/// Events with r v > 1 (grid mesh above 1) are redrawn.
inline std::vector<WitnessResult> witness_sweep(const DrivingPath& d, long n, std::uint64_t seed, double v_min,
                                                double v_max, unsigned workers = 1) {
    std::vector<WitnessResult> out(static_cast<std::size_t>(n));
    parallel_for(out.size(), workers, [&](std::size_t i) {
        RandomStream rng(seed, i);
        for (int attempt = 0; attempt < 1000; ++attempt) {
            const auto k = std::min(d.steps(), 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(d.steps())));
            const double v = v_min * std::pow(v_max / v_min, rng.uniform());
            const double r = fhat_deriv(d, k, cplx{0.0, v});
            if (r * v > 1.0) continue;
            out[i] = fw_grid_witness(d, k, v, r);
            return;
        }
        throw std::runtime_error("witness_sweep: no admissible event with r v <= 1");
    });
    return out;
}

inline ExperimentReport experiment_witness(const ExperimentConfig& cfg) {
    detail::Stopwatch sw;
    const auto d = DrivingPath::brownian(cfg.kappa, cfg.T, cfg.dt, cfg.seed);
    const auto res = witness_sweep(d, cfg.n, cfg.seed + 1, cfg.get("v_min", 0.05), cfg.get("v_max", 1.0), cfg.workers);
    ExperimentReport r{"witness", witness_csv(res), {}, "1:2"};
    r.summary["found"] = std::to_string(std::count_if(res.begin(), res.end(), [](const auto& w) { return w.found; }));
    r.summary["events"] = std::to_string(res.size());
    r.wall_seconds = sw.seconds();
    return r;
}

inline ExperimentReport experiment_exponents(const ExperimentConfig& cfg) {
    detail::Stopwatch sw;
    io::CsvTable t({"kappa", "d", "alpha", "beta", "p", "p_from_moments", "critical"});
    for (double k : cfg.get_list("kappas", {0.5, 1, 2, 4, 6, 8, 12, 16})) {
        const auto e = exponent_formulas(k);
        t.add(k, e.d, e.alpha, e.beta, e.p, exponent_p_from_moments(k), e.critical);
    }
    ExperimentReport r{"exponents", t, {}, "1:3"};
    r.wall_seconds = sw.seconds();
    return r;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.name == "trace") return run_sle_trace(cfg);
    if (cfg.name == "psivar") return experiment_psi_variation(cfg);
    if (cfg.name == "holder") return experiment_holder_modulus(cfg);
    if (cfg.name == "unifmap") return experiment_unif_map_scaling(cfg);
    if (cfg.name == "bessel") return experiment_bessel_suite(cfg);
    if (cfg.name == "gridsum") return experiment_grid_sum(cfg);
    if (cfg.name == "witness") return experiment_witness(cfg);
    return experiment_exponents(cfg);
}

} // namespace sle
