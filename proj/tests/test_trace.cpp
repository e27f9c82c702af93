#include "slelab/stats.hpp"
#include "slelab/trace.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

using namespace sle;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("fhat at step 0 is the identity", "[trace]") {
    const auto d = DrivingPath::brownian(6.0, 1.0, 1e-2, 1);
    const cplx w{0.3, 0.7};
    CHECK(fhat_eval(d, 0, w) == w);
    CHECK(fhat_deriv(d, 0, w) == 1.0);
    CHECK(trace_point(d, 0) == cplx{0.0, 0.0});
}

TEST_CASE("zero driving: fhat maps iv to i sqrt(v^2 + 4t)", "[trace]") {
    const auto d = DrivingPath::zero(1.0, 1e-3);
    for (double v : {0.01, 0.5, 2.0}) {
        const auto f = fhat_full(d, d.steps(), cplx{0.0, v});
        CHECK_THAT(f.value.real(), WithinAbs(0.0, 1e-14));
        CHECK_THAT(f.value.imag(), WithinRel(std::sqrt(v * v + 4.0), 1e-12));
        // fhat'(w) = w / fhat(w) for the slit
        CHECK_THAT(f.deriv, WithinRel(v / std::sqrt(v * v + 4.0), 1e-12));
        // the Schwarz-Pick bound Im fhat(iv) / v is attained by the image point
        CHECK_THAT(f.value.imag() / v, WithinRel(std::sqrt(v * v + 4.0) / v, 1e-12));
    }
}

TEST_CASE("zero driving trace is the slit tip 2i sqrt(t)", "[trace]") {
    const auto d = DrivingPath::zero(1.0, 1e-4);
    const auto g = compute_trace(d);
    REQUIRE(g.size() == d.steps() + 1);
    for (std::size_t k = 1; k < g.size(); ++k) {
        const double tip = 2.0 * std::sqrt(d.time(k));
        REQUIRE(std::abs(g[k] - cplx{0.0, tip}) <= 1e-9 * tip);
    }
}

TEST_CASE("interleaved trace equals pointwise evaluation", "[trace]") {
    const auto d = DrivingPath::brownian(6.0, 1.0, 1e-3, 12);
    const auto g = compute_trace(d);
    for (std::size_t k : {1u, 2u, 3u, 4u, 5u, 333u, 998u, 999u, 1000u}) CHECK(g[k] == trace_point(d, k));
}

TEST_CASE("trace is stable under step refinement", "[trace]") {
    const auto fine = DrivingPath::brownian(6.0, 1.0, 2.5e-5, 21);
    const auto coarse = fine.coarsen(4);
    const auto gf = compute_trace(fine), gc = compute_trace(coarse);
    std::vector<double> gaps;
    for (std::size_t k = 1; k <= coarse.steps(); ++k) gaps.push_back(std::abs(gc[k] - gf[4 * k]));
    // typical discrepancy is a small fraction of the trace scale sqrt(kappa T)
    CHECK(stats::median(gaps) < 0.05);
}

TEST_CASE("derivative respects the Schwarz bound", "[trace]") {
    const auto d = DrivingPath::brownian(6.0, 1.0, 1e-3, 4);
    RandomStream rng(4, 1);
    for (int i = 0; i < 200; ++i) {
        const auto k = 1 + static_cast<std::size_t>(rng.uniform() * 999.0);
        const cplx w{4.0 * rng.uniform() - 2.0, 0.01 + rng.uniform()};
        const double t = d.time(k), v = w.imag();
        REQUIRE(fhat_deriv(d, k, w) <= std::sqrt(v * v + 4.0 * t) / v * (1.0 + 1e-12));
    }
}

TEST_CASE("dyadic increment ratio for the slit", "[trace]") {
    const auto d = DrivingPath::zero(1.0, 1e-3);
    // (sqrt(4v^2 + 4) - sqrt(v^2 + 4)) sqrt(v^2 + 4) / v^2 at v = 1/2, 30 digits
    const auto c = dyadic_increment_bound_check(d, d.steps(), 0.5);
    CHECK_THAT(c.ratio, WithinRel(1.43908891458577462, 1e-12));
    CHECK(c.within_bound);
    CHECK_THAT(dyadic_increment_ratio(d, 0, 0.3), WithinRel(1.0, 1e-15));
}

TEST_CASE("increment bound constant", "[trace]") {
    CHECK_THAT(koebe_increment_bound, WithinRel(3.6588830833596718565, 1e-15));
}

TEST_CASE("dyadic increments of a kappa = 6 trace respect the bound", "[trace]") {
    const auto d = DrivingPath::brownian(6.0, 1.0, 1e-3, 8);
    RandomStream rng(8, 1);
    for (int i = 0; i < 100; ++i) {
        const auto k = 1 + static_cast<std::size_t>(rng.uniform() * 999.0);
        const double v = 0.01 + 0.99 * rng.uniform();
        REQUIRE(dyadic_increment_bound_check(d, k, v).within_bound);
    }
}

TEST_CASE("max dyadic increment shrinks under refinement", "[trace]") {
    const auto fine = DrivingPath::brownian(6.0, 1.0, 1e-4, 6);
    double prev = INFINITY;
    for (std::size_t stride : {16u, 4u, 1u}) {
        const double m = max_increment(compute_trace(fine.coarsen(stride)));
        CHECK(m < prev);
        prev = m;
    }
}

TEST_CASE("hull bounds hold for the slit", "[trace]") {
    const auto d = DrivingPath::zero(1.0, 1e-3);
    const auto g = compute_trace(d);
    const auto r = hull_report(d, g, d.steps(), 1e3);
    CHECK_THAT(r.height_est, WithinRel(2.0, 1e-12));
    CHECK_THAT(r.hcap_est, WithinRel(2.0, 1e-3));
    // height^2 = 2 hcap and hcap = diam height / 2 for the slit
    CHECK(hull_bounds_hold(r, 2.01, 0.51));
    CHECK_FALSE(hull_bounds_hold(r, 1.9, 0.51));
}

TEST_CASE("derivative scan and diameter ratio", "[trace]") {
    const auto d = DrivingPath::zero(1.0, 1e-2);
    const auto scan = derivative_scan(d, {10, 100}, {0.0}, {0.5});
    REQUIRE(scan.size() == 2);
    CHECK_THAT(scan[1].deriv, WithinRel(0.5 / std::sqrt(0.25 + 4.0), 1e-12));
    CHECK(derivative_scan_csv(scan).size() == 2);
    const auto g = compute_trace(d);
    CHECK(diameter_derivative_ratio(d, g, 25, 100) > 0.0);
    CHECK_THROWS_AS(diameter_derivative_ratio(d, g, 10, 10), std::invalid_argument);
}
