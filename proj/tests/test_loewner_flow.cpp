#include "slelab/loewner_flow.hpp"
#include "slelab/stats.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

using namespace sle;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("zero driving moves iy along the exact slit map", "[flow]") {
    const auto d = DrivingPath::zero(0.5, 1e-3);
    const auto h = track_point(d, cplx{0.0, 2.0}, d.steps());
    for (std::size_t k = 0; k < h.size(); k += 50) {
        const double t = h.t[k];
        CHECK_THAT(h.Z[k].real(), WithinAbs(0.0, 1e-15));
        CHECK_THAT(h.Z[k].imag(), WithinRel(std::sqrt(4.0 - 4.0 * t), 1e-13));
    }
}

TEST_CASE("zero driving swallows i at time 1/4", "[flow]") {
    const double dt = 1e-4;
    CHECK_THAT(swallow_time(DrivingPath::zero(0.5, dt), cplx{0.0, 1.0}), WithinAbs(0.25, dt));
    CHECK(std::isinf(swallow_time(DrivingPath::zero(0.2, dt), cplx{0.0, 1.0})));
}

TEST_CASE("off-axis points are never swallowed by the slit", "[flow]") {
    CHECK(std::isinf(swallow_time(DrivingPath::zero(1.0, 1e-3), cplx{0.5, 0.5})));
}

TEST_CASE("single small step shrinks Y^2 by 4 dt Y^2/|Z|^2", "[flow]") {
    const double dt = 1e-9;
    FlowPoint p(cplx{0.7, 0.4});
    const double Y2 = 0.16, r2 = 0.49 + 0.16;
    step_point(p, 0.0, dt, dt);
    CHECK_THAT(Y2 - p.Y * p.Y, WithinRel(4.0 * dt * Y2 / r2, 1e-6));
}

TEST_CASE("derivative accumulator matches the slit map", "[flow]") {
    const auto d = DrivingPath::zero(0.5, 1e-3);
    const auto h = track_point(d, cplx{0.0, 2.0}, d.steps());
    // log(y / sqrt(y^2 - 4t)) at y = 2, t = 1/2
    CHECK_THAT(h.log_gprime.back(), WithinRel(0.34657359027997265471, 1e-12));
    CHECK(h.log_gprime.front() == 0.0);
}

TEST_CASE("direct quadrature of log|g'| agrees with the chain rule", "[flow]") {
    const auto d = DrivingPath::brownian(6.0, 1.0, 1e-4, 99);
    const auto h = track_point(d, cplx{0.8, 1.5}, d.steps());
    REQUIRE_FALSE(h.swallowed);
    CHECK_THAT(log_gprime_direct(h), WithinAbs(h.log_gprime.back(), 10.0 * d.dt()));
    const auto h0 = track_point(d, cplx{0.8, 1.5}, 0);
    CHECK(log_gprime_direct(h0) == 0.0);
}

TEST_CASE("conformal radius of the slit flow", "[flow]") {
    FlowPoint p0(cplx{0.0, 1.0});
    CHECK(conformal_radius(p0) == 1.0);
    const auto d = DrivingPath::zero(0.5, 1e-3);
    std::vector<FlowPoint> pts = {FlowPoint(cplx{0.0, 3.0})};
    run_flow(d, pts, d.steps());
    CHECK_THAT(conformal_radius(pts[0]), WithinRel((9.0 - 2.0) / 3.0, 1e-12));
}

TEST_CASE("conformal radius never increases along a step", "[flow]") {
    const auto d = DrivingPath::brownian(4.0, 1.0, 1e-3, 5);
    for (cplx z : {cplx{0.0, 0.5}, cplx{1.0, 0.2}, cplx{-2.0, 1.0}}) {
        const auto h = track_point(d, z, d.steps());
        for (std::size_t k = 1; k < h.size(); ++k) REQUIRE(h.log_upsilon[k] <= h.log_upsilon[k - 1] + 1e-15);
    }
}

TEST_CASE("swallowed points throw on conformal radius", "[flow]") {
    const auto d = DrivingPath::zero(0.5, 1e-4);
    std::vector<FlowPoint> pts = {FlowPoint(cplx{0.0, 1.0})};
    run_flow(d, pts, d.steps());
    REQUIRE_FALSE(pts[0].alive());
    CHECK_THROWS_AS(conformal_radius(pts[0]), std::domain_error);
}

TEST_CASE("capacity of the slit is 2t", "[flow]") {
    const auto d = DrivingPath::zero(1.0, 1e-3);
    CHECK(hcap_estimate(d, 0, 100.0) == 0.0);
    for (std::size_t k : {100u, 500u, 1000u})
        CHECK_THAT(hcap_estimate(d, k, 100.0 * std::sqrt(d.time(k))), WithinRel(2.0 * d.time(k), 0.01));
}

TEST_CASE("capacity of a kappa = 6 hull is self-consistent across radii", "[flow]") {
    const auto d = DrivingPath::brownian(6.0, 1.0, 1e-4, 17);
    const auto c = hcap_check(d, d.steps(), 1e2, 1e3, 0.02);
    CHECK(c.consistent);
    CHECK_THAT(c.estimate_large_R, WithinRel(2.0, 0.02));
}

TEST_CASE("flow rejects bad arguments", "[flow]") {
    const auto d = DrivingPath::zero(1.0, 0.1);
    std::vector<FlowPoint> pts = {FlowPoint(cplx{0.0, 1.0})};
    CHECK_THROWS_AS(run_flow(d, pts, 11), std::out_of_range);
    CHECK_THROWS_AS(advance_flow(pts, 0.0, 0.0, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(hcap_estimate(d, 1, -1.0), std::invalid_argument);
    CHECK_THROWS(FlowPoint(cplx{0.0, -1.0}));
}

TEST_CASE("driving paths coarsen and round-trip", "[driving]") {
    const auto d = DrivingPath::brownian(2.0, 1.0, 1e-3, 3);
    const auto c = d.coarsen(10);
    REQUIRE(c.steps() == 100);
    CHECK(c[7] == d[70]);
    CHECK_THAT(c.dt(), WithinRel(1e-2, 1e-14));
    CHECK_THROWS_AS(d.coarsen(7), std::invalid_argument);
    std::istringstream in(d.to_csv().str());
    const auto back = DrivingPath::from_csv(io::CsvTable::parse(in));
    CHECK(back.xi() == d.xi());
}

TEST_CASE("brownian driving has variance kappa t", "[driving]") {
    std::vector<double> end;
    for (std::uint64_t s = 0; s < 4000; ++s) {
        const double x = DrivingPath::brownian(3.0, 1.0, 0.05, 1, s).xi().back();
        end.push_back(x * x);
    }
    const auto m = stats::mean_se(end);
    CHECK(std::abs(m.mean - 3.0) < 4.0 * m.se);
}
