#include "doctest.h"

#include "hc2/functional.hpp"
#include "hc2/surface_energy.hpp"

using namespace hc2;

namespace {

SolverConfig strip_cfg() {
    SolverConfig cfg;
    cfg.rel_tol = 1e-7;
    cfg.restarts = 1;
    return cfg;
}

SurfaceResult strip(double ell, double T, double h, bool symmetric = false) {
    auto p = HalfStripProblem::with_spacing(ell, T, h, h);
    p.symmetric_gauge = symmetric;
    return solve_halfstrip(p, strip_cfg());
}

} // namespace

TEST_CASE("half-strip problem validation") {
    CHECK_THROWS_AS(solve_halfstrip(HalfStripProblem::with_spacing(0.5, 8, 0.1, 0.1), strip_cfg()), ConfigError);
    CHECK_THROWS_AS(solve_halfstrip(HalfStripProblem::with_spacing(4, 5, 0.1, 0.1), strip_cfg()), ConfigError);
    auto p = HalfStripProblem::with_spacing(4, 12, 0.1, 0.1);
    CHECK(p.res.n1 == 81);
    CHECK(p.res.n2 == 121);
    CHECK(p.hx() == doctest::Approx(0.1));
}

TEST_CASE("half-strip minimiser") {
    auto r = strip(4, 8, 0.2);
    CHECK(r.d < 0);
    CHECK(r.e1 > 0);
    CHECK(r.e1 <= 0.5);
    CHECK(r.l2 > 0.1 * std::sqrt(4.0));
    CHECK(r.tail > 0);
    CHECK(std::isfinite(r.tail));
    CHECK(r.kinetic_scale > 1);  // discrete Landau level below 1
    // zero on the Dirichlet sides
    const Grid& g = *r.profile.grid;
    for (std::size_t i = 0; i < g.num_nodes(); ++i)
        if (g.pinned[i]) CHECK(r.profile.values[i] == cplx(0.0));

    SUBCASE("gauge (-tau, 0) and the symmetric gauge give the same d") {
        auto s = strip(4, 8, 0.2, true);
        CHECK(s.d == doctest::Approx(r.d).epsilon(1e-7));
    }
    SUBCASE("d is non-increasing and subadditive in ell") {
        auto r2 = strip(2, 8, 0.2), r6 = strip(6, 8, 0.2);
        CHECK(r.d <= r2.d + 1e-8);
        CHECK(r6.d <= r.d + 1e-8);
        CHECK(r6.d <= r.d + r2.d + 1e-8);
    }
}

TEST_CASE("independent gradient-flow solves agree after Richardson extrapolation") {
    double f1 = strip(4, 8, 0.1).d, f2 = strip(4, 8, 0.05).d;
    double ref = f2 + (f2 - f1) / 3;
    SolverConfig gf = strip_cfg();
    gf.mode = SolverMode::GradientFlow;
    gf.max_iter = 200000;
    auto coarse = [&](double h) { return solve_halfstrip(HalfStripProblem::with_spacing(4, 8, h, h), gf).d; };
    double d2 = coarse(0.2), d4 = coarse(0.4);
    double rich = d2 + (d2 - d4) / 3;
    CHECK(std::abs(ref - rich) <= 0.01 * std::abs(rich));
}

TEST_CASE("E1 fit") {
    SUBCASE("exact recovery of a linear model") {
        const double a = 0.17, b = -0.4;
        std::vector<double> ells{3, 5, 9, 14}, d;
        for (double l : ells) d.push_back(-2 * l * (a + b / l));
        auto f = fit_E1(ells, d);
        CHECK(std::abs(f.E1 - a) < 1e-14);
        CHECK(std::abs(f.M - b) < 1e-14);
        for (double r : f.residuals) CHECK(std::abs(r) < 1e-14);
    }
    SUBCASE("input checks") {
        CHECK_THROWS_AS(fit_E1({4}, {-1}), ConfigError);
        CHECK_THROWS_AS(estimate_E1({4, 5}, 8, 0.2, 0.2, strip_cfg()), ConfigError);
        CHECK_THROWS_AS(estimate_E1({4, 4, 8}, 8, 0.2, 0.2, strip_cfg()), ConfigError);
    }
    SUBCASE("coarse estimate is positive and two-scale stable") {
        auto est = estimate_E1({4, 8, 16}, 8, 0.2, 0.2, strip_cfg());
        REQUIRE(est.rows.size() == 3);
        CHECK(est.fit.E1 > 0);
        CHECK(est.fit.E1 <= 0.5);
        auto lo = fit_E1({4, 8}, {est.rows[0].d, est.rows[1].d});
        auto hi = fit_E1({8, 16}, {est.rows[1].d, est.rows[2].d});
        CHECK(std::abs(lo.E1 - hi.E1) <= 0.05 * hi.E1);
    }
}

TEST_CASE("boundary trial state") {
    GLParams p{10.0, 10.0};
    auto g = build_disc_for(1.0, 0.03, 0.2, 6);
    const double ell = trial_ell(g->domain, p);
    CHECK(ell == doctest::Approx(2 * pi / (4 * p.eps())));
    auto hp = HalfStripProblem::with_spacing(ell, 8, 0.2, 0.2);
    auto prof = solve_halfstrip(hp, strip_cfg());
    const double rho = 0.5, depth = std::pow(p.eps(), rho);
    auto psi = boundary_trial(g, p, rho, prof);
    double pmax = prof.profile.max_abs();
    for (std::size_t i = 0; i < g->num_nodes(); ++i) {
        if (g->dist[i] >= depth + 1e-12) CHECK(psi.values[i] == cplx(0.0));
        CHECK(std::abs(psi.values[i]) <= pmax * (1 + 1e-12));
    }
    double E = energy(psi, GaugeField::canonical(g), p);
    CHECK(E < 0);
    CHECK(E / (2 * prof.d) == doctest::Approx(1.0).epsilon(0.25));

    CHECK_THROWS_AS(boundary_trial(g, p, 0.25, prof), ConfigError);  // eps^rho beyond the collar
    auto other = solve_halfstrip(HalfStripProblem::with_spacing(ell + 1, 8, 0.2, 0.2), strip_cfg());
    CHECK_THROWS_AS(boundary_trial(g, p, rho, other), ConfigError);
    auto rect = build_grid(DomainSpec::rectangle(2, 2), {21, 21});
    CHECK_THROWS_AS(boundary_trial(rect, p, rho, prof), ConfigError);
}
