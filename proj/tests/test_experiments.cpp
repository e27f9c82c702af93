#include "slelab/experiments.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace sle;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ExperimentConfig base(const std::string& name) {
    ExperimentConfig c;
    c.name = name;
    c.kappa = 2.0;
    c.T = 1.0;
    c.dt = 1.0 / 256.0;
    c.n = 4;
    c.seed = 5;
    return c;
}

} // namespace

TEST_CASE("zero-kappa trace is the vertical slit", "[experiments]") {
    auto c = base("trace");
    c.kappa = 0.0;
    const auto r = run_sle_trace(c);
    const auto& t = r.table;
    for (std::size_t i = 1; i < t.size(); ++i) {
        const double time = t.number(i, 0);
        REQUIRE_THAT(t.number(i, 1), WithinAbs(0.0, 1e-14));
        REQUIRE_THAT(t.number(i, 2), WithinRel(2.0 * std::sqrt(time), 1e-12));
    }
}

TEST_CASE("same seed gives identical CSV bytes", "[experiments]") {
    auto c = base("trace");
    c.kappa = 6.0;
    CHECK(run_sle_trace(c).table.str() == run_sle_trace(c).table.str());
    auto c2 = c;
    c2.seed = 6;
    CHECK(run_sle_trace(c).table.str() != run_sle_trace(c2).table.str());
}

TEST_CASE("results do not depend on the worker count", "[experiments]") {
    auto c = base("psivar");
    c.n = 5;
    c.extra["levels"] = "2";
    const auto one = experiment_psi_variation(c).table.str();
    c.workers = 3;
    CHECK(experiment_psi_variation(c).table.str() == one);
    auto h = base("bessel");
    h.n = 300;
    const auto b1 = experiment_bessel_suite(h).table.str();
    h.workers = 4;
    CHECK(experiment_bessel_suite(h).table.str() == b1);
}

TEST_CASE("psi-variation study brackets the exponent for kappa = 2", "[experiments]") {
    auto c = base("psivar");
    c.dt = 1.0 / 1024.0;
    c.n = 6;
    c.extra["levels"] = "3";
    const auto res = psi_variation_study(c);
    REQUIRE(res.study.labels.size() == 2);
    // growth at p = 1 and stability at p = 1.6 between successive meshes
    CHECK(res.study.median_ratio(0, 1) > 1.05);
    CHECK(res.study.median_ratio(1, 1) < 1.2);
    CHECK(res.study.median_ratio(1, 2) < 1.2);
}

TEST_CASE("psi-variation gauges include psi_{d,q}", "[experiments]") {
    auto c = base("psivar");
    c.n = 2;
    c.extra["levels"] = "2";
    c.extra["q"] = "1.5";
    const auto res = psi_variation_study(c);
    REQUIRE(res.study.labels.size() == 3);
    CHECK(res.study.labels[2] == "psi_d_q=1.5");
    c.kappa = 8.0;
    CHECK_THROWS_AS(psi_variation_study(c), std::invalid_argument);
}

TEST_CASE("straight-line variation equals its length", "[experiments]") {
    const SampledPath p({0.0, 0.5, 1.0}, {cplx{0.0, 0.0}, cplx{1.5, 0.0}, cplx{3.0, 0.0}});
    CHECK_THAT(psi_var_value(p, PsiSpec(1.0), 1.0), WithinRel(3.0, 1e-15));
}

TEST_CASE("zero-kappa modulus away from the origin is finite", "[experiments]") {
    auto c = base("holder");
    c.kappa = 0.0;
    c.n = 1;
    c.extra["levels"] = "2";
    c.extra["t0"] = "0.25";
    // kappa = 0 is outside the closed forms; use the explicit 1/2 modulus
    const auto d = DrivingPath::zero(1.0, 1.0 / 256.0);
    auto tr = trace_path(d);
    const SampledPath tail(std::vector<double>(tr.times.begin() + 64, tr.times.end()),
                           std::vector<cplx>(tr.points.begin() + 64, tr.points.end()));
    const double r = holder_ratio_sup(tail, ModulusSpec{0.5, 0.0, 0.1, false});
    CHECK(std::isfinite(r));
    // |2 sqrt t - 2 sqrt s| <= |t - s|^{1/2} (2 / (sqrt t + sqrt s)) |t - s|^{1/2} <= 2 |t-s|^{1/2}
    CHECK(r <= 2.0);
}

TEST_CASE("Hoelder study orders shifted exponents", "[experiments]") {
    auto c = base("holder");
    c.kappa = 6.0;
    c.dt = 1.0 / 1024.0;
    c.n = 6;
    c.extra["levels"] = "3";
    const auto st = holder_study(c);
    // |t - s| <= 1 makes the inflated modulus the smaller one at every level
    for (std::size_t s = 0; s < st.values[0].size(); ++s)
        for (std::size_t l = 0; l < 3; ++l) {
            REQUIRE(std::isfinite(st.values[2][s][l]));
            REQUIRE(st.values[1][s][l] >= st.values[0][s][l]);
            REQUIRE(st.values[0][s][l] >= st.values[2][s][l]);
        }
}

TEST_CASE("critical modulus uses the log power", "[experiments]") {
    const auto m = kappa_modulus(8.0, 0.0, 0.1);
    CHECK(m.alpha == 0.0);
    CHECK_THAT(m.beta, WithinAbs(-0.15, 1e-15));
    CHECK_FALSE(m.with_ell);
    const auto m6 = kappa_modulus(6.0, 0.05);
    CHECK_THAT(m6.alpha, WithinRel(exponent_formulas(6.0).alpha + 0.05, 1e-15));
}

TEST_CASE("zero-kappa derivative scaling is the slit closed form", "[experiments]") {
    auto c = base("unifmap");
    c.kappa = 0.0;
    c.n = 1;
    c.dt = 1e-2;
    c.extra["m"] = "1,2,3,4";
    c.extra["t_stride"] = "10";
    const auto r = unif_map_study(c);
    for (std::size_t i = 0; i < r.v.size(); ++i) {
        const double v = r.v[i];
        // the sup is attained at the first sampled time t = 0.1
        CHECK_THAT(r.median_sup[i], WithinRel(v / std::sqrt(v * v + 0.4), 1e-12));
    }
    // a smooth slit has a bounded derivative
    CHECK(r.predicted == 0.0);
    CHECK(r.median_slope > 0.0);
}

TEST_CASE("derivative sup does not decrease with the horizon", "[experiments]") {
    auto c = base("unifmap");
    c.kappa = 12.0;
    c.n = 2;
    c.dt = 1e-3;
    c.T = 0.5;
    c.extra["m"] = "2,3";
    c.extra["t_stride"] = "1";
    const auto a = unif_map_study(c);
    c.T = 1.0;
    const auto b = unif_map_study(c);
    for (std::size_t i = 0; i < a.median_sup.size(); ++i) CHECK(b.median_sup[i] >= a.median_sup[i]);
    c.kappa = 6.0;
    CHECK_THROWS_AS(unif_map_study(c), std::invalid_argument);
}

TEST_CASE("exponent table experiment", "[experiments]") {
    const auto r = experiment_exponents(base("exponents"));
    REQUIRE(r.table.size() == 8);
    for (std::size_t i = 0; i < r.table.size(); ++i) {
        const double k = r.table.number(i, 0);
        if (k > 1.0 && k != 8.0) CHECK_THAT(r.table.number(i, 5), WithinRel(r.table.number(i, 4), 1e-10));
    }
}

TEST_CASE("config parsing, validation and registered names", "[experiments]") {
    ExperimentConfig c;
    std::istringstream in("experiment = gridsum\nkappa=3\nT = 2\ndt=0.01\nn=7\nseed=9\ntol.clock_ks=0.05\nM=0.5\n");
    c.apply(io::parse_key_values(in));
    CHECK(c.name == "gridsum");
    CHECK(c.kappa == 3.0);
    CHECK(c.n == 7);
    CHECK(c.seed == 9);
    CHECK(c.tolerance("clock_ks", 1.0) == 0.05);
    CHECK(c.get("M", 1.0) == 0.5);
    CHECK(c.get("missing", 4.0) == 4.0);
    CHECK_NOTHROW(c.validate());
    c.name = "nope";
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.name = "trace";
    c.dt = -1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    CHECK(parse_list("1, 2.5,3") == std::vector<double>{1.0, 2.5, 3.0});
    CHECK_THROWS(parse_list("1,x"));
}

TEST_CASE("reports write CSV, metadata and plot script", "[experiments]") {
    const auto dir = std::filesystem::temp_directory_path() / "slelab_test_out";
    std::filesystem::remove_all(dir);
    auto c = base("exponents");
    c.out_dir = dir.string();
    const auto r = run_experiment(c);
    write_report(r, c);
    CHECK(std::filesystem::exists(dir / "exponents.csv"));
    CHECK(std::filesystem::exists(dir / "exponents.gp"));
    const auto meta = io::load_key_values((dir / "exponents.meta").string());
    CHECK(meta.at("version") == SLELAB_VERSION);
    CHECK(meta.count("wall_seconds") == 1);
    CHECK(meta.at("config.experiment") == "exponents");
    std::filesystem::remove_all(dir);
}

TEST_CASE("grid-sum and witness experiments run", "[experiments]") {
    auto g = base("gridsum");
    g.T = 0.75;
    g.extra["M"] = "0.5";
    g.extra["h_exp_max"] = "5";
    CHECK(run_experiment(g).table.size() == 9 * 2);
    auto w = base("witness");
    w.kappa = 6.0;
    w.dt = 1e-2;
    w.n = 5;
    const auto r = run_experiment(w);
    CHECK(r.summary.at("found") == "5");
}
