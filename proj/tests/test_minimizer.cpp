#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "hc2/functional.hpp"
#include "hc2/minimizer.hpp"

using namespace hc2;

namespace {

struct Quadratic : Objective {
    Eigen::MatrixXd Q;
    Eigen::VectorXd b;
    explicit Quadratic(int n) {
        Eigen::MatrixXd M = Eigen::MatrixXd::Random(n, n);
        Q = M.transpose() * M + n * Eigen::MatrixXd::Identity(n, n);
        b = Eigen::VectorXd::Random(n);
    }
    std::size_t size() const override { return b.size(); }
    double evaluate(std::span<const double> x, std::span<double> g) const override {
        Eigen::Map<const Eigen::VectorXd> X(x.data(), x.size());
        Eigen::VectorXd G = Q * X - b;
        std::copy(G.data(), G.data() + G.size(), g.begin());
        return 0.5 * X.dot(Q * X) - b.dot(X);
    }
};

struct Rosenbrock : Objective {
    std::size_t size() const override { return 2; }
    double evaluate(std::span<const double> x, std::span<double> g) const override {
        double a = 1 - x[0], b = x[1] - x[0] * x[0];
        g[0] = -2 * a - 400 * x[0] * b;
        g[1] = 200 * b;
        return a * a + 100 * b * b;
    }
};

// NaN outside |x| < 2; minimum at x = 1.5 sits close to the wall
struct Walled : Objective {
    std::size_t size() const override { return 1; }
    double evaluate(std::span<const double> x, std::span<double> g) const override {
        if (std::abs(x[0]) >= 2) {
            g[0] = std::numeric_limits<double>::quiet_NaN();
            return std::numeric_limits<double>::quiet_NaN();
        }
        g[0] = 2 * (x[0] - 1.5);
        return (x[0] - 1.5) * (x[0] - 1.5);
    }
};

// two wells: x = -1 (value 0) and x = 2 (value -1)
struct TwoWells : Objective {
    std::size_t size() const override { return 1; }
    double evaluate(std::span<const double> x, std::span<double> g) const override {
        double a = x[0] + 1, b = x[0] - 2;
        double f1 = a * a, f2 = b * b - 1;
        if (f1 < f2) {
            g[0] = 2 * a;
            return f1;
        }
        g[0] = 2 * b;
        return f2;
    }
};

} // namespace

TEST_CASE("conjugate gradients finish a quadratic in at most dim + 5 iterations") {
    std::srand(4);
    Quadratic q(30);
    SolverConfig cfg;
    cfg.rel_tol = 1e-10;
    auto r = minimize(q, std::vector<double>(30, 0.0), cfg);
    CHECK(r.report.converged);
    CHECK(r.report.iterations <= 35);
    Eigen::VectorXd xs = q.Q.ldlt().solve(q.b);
    for (int i = 0; i < 30; ++i) CHECK(std::abs(r.x[i] - xs[i]) < 1e-8);
    for (std::size_t k = 1; k < r.report.history.size(); ++k)
        CHECK(r.report.history[k] <= r.report.history[k - 1] + 1e-13 * (1 + std::abs(r.report.history[k - 1])));
}

TEST_CASE("gradient flow mode converges") {
    std::srand(5);
    Quadratic q(10);
    SolverConfig cfg;
    cfg.mode = SolverMode::GradientFlow;
    cfg.rel_tol = 1e-8;
    auto r = minimize(q, std::vector<double>(10, 1.0), cfg);
    CHECK(r.report.converged);
}

TEST_CASE("Rosenbrock") {
    Rosenbrock f;
    SolverConfig cfg;
    cfg.rel_tol = 1e-10;
    auto r = minimize(f, {-1.2, 1.0}, cfg);
    CHECK(r.report.converged);
    CHECK(std::abs(r.x[0] - 1) < 1e-6);
    CHECK(std::abs(r.x[1] - 1) < 1e-6);
}

TEST_CASE("non-finite trial points are rejected") {
    Walled f;
    SolverConfig cfg;
    auto r = minimize(f, {-1.9}, cfg);
    CHECK(std::isfinite(r.report.value));
    CHECK(std::abs(r.x[0] - 1.5) < 1e-6);
    CHECK_THROWS_AS(minimize(f, {3.0}, cfg), SolverError);
    CHECK_THROWS_AS(minimize(f, {0.0, 1.0}, cfg), ConfigError);
}

TEST_CASE("best of several restarts") {
    TwoWells f;
    SolverConfig cfg;
    cfg.restarts = 4;
    cfg.seed = 3;
    auto init = [](int r, std::mt19937_64&) { return std::vector<double>{r % 2 == 0 ? -1.5 : 2.5}; };
    auto r = minimize_restarts(f, init, cfg);
    CHECK(r.report.restart_values.size() == 4);
    CHECK(r.report.value == doctest::Approx(-1.0));
    CHECK(r.report.best_restart == 1);
    // seeded randomness reproduces
    auto rnd = [](int, std::mt19937_64& rng) { return std::vector<double>{std::uniform_real_distribution<double>(-3, 3)(rng)}; };
    auto a = minimize_restarts(f, rnd, cfg), b = minimize_restarts(f, rnd, cfg);
    CHECK(a.report.restart_values == b.report.restart_values);
}

TEST_CASE("the normal state is returned untouched above the nucleation field") {
    auto g = build_grid(DomainSpec::disc(1.0), {12, 24});
    GLParams p{5.0, 40.0};
    GLObjective obj(g, p);
    auto x0 = obj.pack(ComplexField(g), GaugeField::canonical(g));
    SolverConfig cfg;
    auto r = minimize(obj, x0, cfg);
    CHECK(r.report.converged);
    CHECK(r.report.iterations == 0);
    CHECK(r.report.value == 0.0);
}
