#include "slelab/radial_clock.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

using namespace sle;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("angle of a point", "[radial]") {
    CHECK_THAT(theta_of_point(0.0, 1.0), WithinRel(pi / 2, 1e-15));
    CHECK_THAT(theta_of_point(2.0, 2.0), WithinRel(pi / 4, 1e-15));
    CHECK_THAT(theta_of_point(-2.0, 2.0), WithinRel(3 * pi / 4, 1e-15));
    CHECK_THROWS_AS(theta_of_point(1.0, 0.0), std::domain_error);
}

TEST_CASE("sigma at the starting level is zero", "[radial]") {
    const auto d = DrivingPath::zero(1.0, 1e-3);
    const auto h = track_point(d, cplx{0.0, 2.0}, d.steps());
    const auto s = sigma_of_s(h, s_start(cplx{0.0, 2.0}));
    CHECK(s.finite());
    CHECK(s.t == 0.0);
    CHECK_THROWS_AS(sigma_of_s(h, s_start(cplx{0.0, 2.0}) - 0.1), std::domain_error);
}

TEST_CASE("sigma follows the slit closed form", "[radial]") {
    const auto d = DrivingPath::zero(1.0, 1e-5);
    const cplx z{0.0, 2.0};
    const auto h = track_point(d, z, d.steps());
    // t = (y^2 - y e^{-4s}) / 4 at s = s0 + 0.1
    const auto s = sigma_of_s(h, s_start(z) + 0.1);
    CHECK_THAT(s.t, WithinAbs(0.32967995396436069926, 1e-6));
}

TEST_CASE("sigma is infinite after swallowing", "[radial]") {
    const auto d = DrivingPath::zero(0.5, 1e-4);
    const auto h = track_point(d, cplx{0.0, 1.0}, d.steps());
    REQUIRE(h.swallowed);
    const auto s = sigma_of_s(h, 50.0);
    CHECK(s.status == SigmaStatus::swallowed);
    CHECK(std::isinf(s.t));
}

TEST_CASE("slit flow satisfies both identities exactly", "[radial]") {
    const auto d = DrivingPath::zero(1.0, 1e-4);
    const auto r = radial_sample(d, cplx{0.0, 3.0}, 1e-3, 0.0);
    REQUIRE(r.size() > 10);
    CHECK(verify_Y_identity(r) < 1e-12);
    CHECK(verify_gprime_identity(r) < 1e-12);
    for (std::size_t i = 0; i < r.size(); ++i) {
        REQUIRE_THAT(r.theta_hat[i], WithinRel(pi / 2, 1e-14));
        const double gp = std::exp(r.log_gprime[i]);
        REQUIRE_THAT(gp, WithinRel(3.0 / r.Y_sigma[i], 1e-10));
    }
}

TEST_CASE("identities hold at the first level with zero error", "[radial]") {
    const auto d = DrivingPath::brownian(6.0, 1.0, 1e-4, 2);
    const auto r = radial_sample(d, cplx{0.2, 1.0}, 10.0, 1.0);
    REQUIRE(r.size() == 1);
    CHECK(verify_Y_identity(r) == 0.0);
    CHECK(verify_gprime_identity(r) == 0.0);
}

TEST_CASE("identities along random flows converge with the step", "[radial]") {
    for (double kappa : {2.0, 6.0}) {
        const auto fine = DrivingPath::brownian(kappa, 1.0, 1e-5, 33);
        const auto coarse = fine.coarsen(4);
        const auto rf = radial_sample(fine, cplx{-0.4, 1.2}, 1e-3, 5.0);
        const auto rc = radial_sample(coarse, cplx{-0.4, 1.2}, 1e-3, 5.0);
        const double ef = std::max(verify_Y_identity(rf), verify_gprime_identity(rf));
        const double ec = std::max(verify_Y_identity(rc), verify_gprime_identity(rc));
        CHECK(ef <= 1e-2);
        CHECK(ec / ef >= 1.5);
    }
}

TEST_CASE("sigma dynamics residual is small on a smooth flow", "[radial]") {
    // xi(t) = sin(3t): a rough driver would leave a sqrt(ds) finite-difference error
    const double dt = 1e-5;
    std::vector<double> xi;
    for (std::size_t k = 0; k <= 100000; ++k) xi.push_back(std::sin(3.0 * dt * static_cast<double>(k)));
    const DrivingPath d(dt, std::move(xi));
    const auto r = radial_sample(d, cplx{0.5, 1.0}, 1e-2, 0.5);
    REQUIRE(r.size() > 5);
    CHECK(sigma_dynamics_residual(r) < 0.01);
}

TEST_CASE("excursions of a point on the axis under zero driving", "[radial]") {
    const auto d = DrivingPath::zero(1.0, 1e-4);
    const cplx z{0.0, 1.0};
    // levels s in [s0, s0 + 3] cover [s_bar - 2, s_bar + 1] for s_bar = s0 + 2
    const auto r = radial_sample(d, z, 1e-3, s_start(z) + 3.0);
    const double s_bar = s_start(z) + 2.0;
    const auto ex = excursions(r, s_bar);
    REQUIRE(ex.size() == 1);
    CHECK_THAT(ex[0].S, WithinAbs(s_bar - 2.0, 1e-9));
    CHECK_THAT(ex[0].T, WithinAbs(s_bar + 1.0, 1e-9));
}

TEST_CASE("no excursion when the ratio stays above b", "[radial]") {
    RadialSample r;
    r.z0 = cplx{5.0, 1.0};
    for (int i = 0; i <= 300; ++i) {
        r.s_values.push_back(-2.0 + 0.01 * i);
        r.X_sigma.push_back(5.0);
        r.Y_sigma.push_back(1.0);
    }
    CHECK(excursions(r, 0.0).empty());
    CHECK_THROWS_AS(excursions(r, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("alternating ratio produces ordered excursions", "[radial]") {
    RadialSample r;
    r.z0 = cplx{0.0, 1.0};
    for (int i = 0; i <= 300; ++i) {
        const double s = -2.0 + 0.01 * i;
        r.s_values.push_back(s);
        // ratio X^2/Y^2 oscillates between 0 and 4
        r.X_sigma.push_back(2.0 * std::abs(std::sin(2.0 * s)));
        r.Y_sigma.push_back(1.0);
    }
    const auto ex = excursions(r, 0.0);
    REQUIRE(ex.size() >= 2);
    for (std::size_t n = 0; n < ex.size(); ++n) {
        CHECK(ex[n].S <= ex[n].T);
        if (n > 0) CHECK(ex[n].S > ex[n - 1].T);
        CHECK(ex[n].n == static_cast<int>(n));
    }
}

TEST_CASE("excursion counts decay geometrically for kappa = 6", "[radial]") {
    ExcursionMcConfig cfg;
    cfg.paths = 300;
    cfg.dt = 1e-4;
    cfg.ds = 2e-3;
    cfg.seed = 60;
    const auto st = excursion_mc(cfg);
    REQUIRE(st.frequency.size() >= 2);
    for (std::size_t n = 1; n < st.frequency.size(); ++n) CHECK(st.frequency[n] <= st.frequency[n - 1]);
    CHECK(st.frequency[1] < st.frequency[0]);
}

TEST_CASE("radial sample exports a CSV", "[radial]") {
    const auto r = radial_sample(DrivingPath::zero(1.0, 1e-3), cplx{0.0, 2.0}, 1e-2, 0.0);
    CHECK(radial_to_csv(r).size() == r.size());
}
