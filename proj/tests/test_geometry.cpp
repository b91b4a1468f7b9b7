#include "doctest.h"

#include "hc2/geometry.hpp"

using namespace hc2;

namespace {

// Series solution of Laplace phi = 1 on the unit square, phi = 0 on the boundary.
// Representation A: x(x-1)/2 + sum_m odd 4/(pi^3 m^3) sin(m pi x) cosh(m pi (y - 1/2)) / cosh(m pi / 2).
// Returns grad phi; B is A with x and y exchanged.
Vec2 square_grad_A(double x, double y, int terms) {
    double gx = x - 0.5, gy = 0;
    for (int m = 1; m <= terms; m += 2) {
        double a = m * pi;
        double c = 4.0 / (pi * pi * pi * m * m * m);
        // cosh(a (y - 1/2)) / cosh(a / 2) and the sinh analogue, overflow-free
        double u = std::abs(y - 0.5);
        double ch = (std::exp(a * (u - 0.5)) + std::exp(-a * (u + 0.5))) / (1 + std::exp(-a));
        double sh = (std::exp(a * (u - 0.5)) - std::exp(-a * (u + 0.5))) / (1 + std::exp(-a));
        if (y < 0.5) sh = -sh;
        gx += c * a * std::cos(a * x) * ch;
        gy += c * a * std::sin(a * x) * sh;
    }
    return {gx, gy};
}

Vec2 square_grad(double x, double y) {
    const double eps = 1e-12;
    bool cx = x < eps || x > 1 - eps, cy = y < eps || y > 1 - eps;
    if (cx && cy) return {0, 0};
    double dy = std::min(y, 1 - y), dx = std::min(x, 1 - x);
    if (dy >= dx) {
        int terms = 2 * static_cast<int>(40.0 / (pi * std::max(dy, 1e-3))) + 1;
        return square_grad_A(x, y, terms);
    }
    int terms = 2 * static_cast<int>(40.0 / (pi * std::max(dx, 1e-3))) + 1;
    Vec2 g = square_grad_A(y, x, terms);
    return {g.y, g.x};
}

} // namespace

TEST_CASE("disc quadrature weights integrate area exactly") {
    auto g = build_grid(DomainSpec::disc(1.0), {64, 128});
    CHECK(std::abs(g->total_weight() - pi) < 1e-10);
    double fa = 0;
    for (const auto& f : g->faces) {
        CHECK(f.area > 0);
        fa += f.area;
    }
    CHECK(std::abs(fa - pi) < 1e-10);
    auto g2 = build_grid(DomainSpec::disc(2.0), {40, 96, 0.01});
    CHECK(std::abs(g2->total_weight() - 4 * pi) < 1e-10);
}

TEST_CASE("boundary nodes carry unit normals and the collar is resolved") {
    const double kappa = 25;
    auto g = build_disc_for(1.0, 0.02, 2.0 / kappa, 8);
    int in_collar = 0;
    for (int k = 1; k < static_cast<int>(g->rings->radius.size()); ++k)
        if (1.0 - g->rings->radius[k] <= 2.0 / kappa + 1e-12) ++in_collar;
    CHECK(in_collar >= 8);
    for (std::size_t i = 0; i < g->num_nodes(); ++i)
        if (g->boundary[i]) {
            CHECK(std::abs(g->normal[i].norm() - 1) < 1e-14);
            CHECK(std::abs(g->normal[i].dot(g->pos[i]) - 1) < 1e-12);
        }
    auto r = build_grid(DomainSpec::rectangle(2, 1), {21, 11});
    for (std::size_t i = 0; i < r->num_nodes(); ++i)
        if (r->boundary[i]) CHECK(std::abs(r->normal[i].norm() - 1) < 1e-14);
    CHECK(std::abs(r->total_weight() - 2.0) < 1e-12);
}

TEST_CASE("canonical field on the unit disc is A0") {
    auto g = build_grid(DomainSpec::disc(1.0), {48, 96, 0.01});
    const auto& F = g->canonical_field();
    double err = 0;
    for (std::size_t i = 0; i < g->num_nodes(); ++i) {
        Vec2 x = g->pos[i];
        Vec2 e = F.nodal[i] - Vec2{-0.5 * x.y, 0.5 * x.x};
        err = std::max(err, e.norm());
    }
    CHECK(err < 1e-6);
    auto A0 = g->links_A0();
    double lerr = 0;
    for (std::size_t e = 0; e < g->num_edges(); ++e) lerr = std::max(lerr, std::abs(F.links[e] - A0[e]));
    CHECK(lerr < 1e-12);
    for (std::size_t f = 0; f < g->faces.size(); ++f) CHECK(std::abs(face_curl(*g, F.links, f) - 1) < 1e-9);
    for (std::size_t i = 0; i < g->num_nodes(); ++i) CHECK(std::abs(node_divergence(*g, F.links, i)) < 1e-12);
}

TEST_CASE("canonical field on the unit square matches the series solution") {
    auto g = build_grid(DomainSpec::rectangle(1, 1), {129, 129});
    const auto& F = g->canonical_field();
    double err = 0;
    for (std::size_t i = 0; i < g->num_nodes(); ++i) {
        Vec2 x = g->pos[i] + Vec2{0.5, 0.5};
        // the solution has r^2 log r corner singularities; compare away from the corners
        double cd = 1e9;
        for (double cx : {0.0, 1.0})
            for (double cy : {0.0, 1.0}) cd = std::min(cd, std::hypot(x.x - cx, x.y - cy));
        if (cd < 0.1) continue;
        Vec2 gr = square_grad(x.x, x.y);
        Vec2 ref{-gr.y, gr.x};
        err = std::max(err, (F.nodal[i] - ref).norm());
    }
    CHECK(err < 1e-6);
    double circ = 0, area = 0;
    for (std::size_t f = 0; f < g->faces.size(); ++f) {
        circ += face_curl(*g, F.links, f) * g->faces[f].area;
        area += g->faces[f].area;
    }
    CHECK(std::abs(circ / area - 1) < 1e-10);
    for (std::size_t i = 0; i < g->num_nodes(); ++i) {
        CHECK(std::abs(node_divergence(*g, F.links, i)) < 1e-10);
        if (g->boundary[i]) CHECK(std::abs(F.nodal[i].dot(g->normal[i])) < 1e-10);
    }
}

TEST_CASE("boundary chart round trip and Jacobian") {
    auto c = boundary_chart(DomainSpec::disc(1.5));
    CHECK(c.smooth);
    CHECK(c.t0 == doctest::Approx(0.75));
    for (double s : {-4.0, -1.0, 0.3, 2.9})
        for (double t : {0.0, 0.1, 0.3}) {
            Vec2 x = c.map(s, t);
            auto [s2, t2] = c.inverse(x);
            CHECK(std::abs(s2 - s) < 1e-12);
            CHECK(std::abs(t2 - t) < 1e-12);
            CHECK(c.jacobian(s, t) == doctest::Approx(1 - t / 1.5));
        }
    auto r = boundary_chart(DomainSpec::rectangle(2, 1));
    CHECK_FALSE(r.smooth);
}

TEST_CASE("cell flux quantisation") {
    CHECK_NOTHROW(DomainSpec::cell(std::sqrt(2 * pi * 3), 3));
    CHECK_THROWS_AS(DomainSpec::cell(2.5, 1), ConfigError);
    auto c = DomainSpec::quantized_cell(3);
    CHECK(c.area() == doctest::Approx(6 * pi));
    auto g = build_grid(c, {32, 32});
    CHECK(std::abs(g->total_weight() - 6 * pi) < 1e-10);
}

TEST_CASE("magnetic translations commute up to exp(2 pi i N)") {
    for (int N : {1, 2, 5}) {
        auto c = DomainSpec::quantized_cell(N);
        double R = c.a;
        // T1 T2 vs T2 T1 phase for u(z + R e1) = e^{i R z2 / 2} u and u(z + R e2) = e^{-i R z1 / 2} u
        double z1 = 0.3, z2 = 0.7;
        double p12 = 0.5 * R * z2 + (-0.5 * R * (z1 + R));
        double p21 = -0.5 * R * z1 + 0.5 * R * (z2 + R);
        std::complex<double> ratio = std::polar(1.0, p12 - p21);
        CHECK(std::abs(ratio - 1.0) < 1e-12);
    }
}

TEST_CASE("exact line integrals of A0 give unit curl on every face") {
    for (auto spec : {DomainSpec::disc(1.0), DomainSpec::rectangle(1.5, 1.0), DomainSpec::half_strip(2, 3)}) {
        auto g = build_grid(spec, spec.kind == DomainKind::Disc ? Resolution{20, 48} : Resolution{17, 13});
        auto t = g->links_A0();
        for (std::size_t f = 0; f < g->faces.size(); ++f) CHECK(std::abs(face_curl(*g, t, f) - 1) < 1e-12);
        auto tq = g->links_of([](Vec2 x) { return Vec2{-0.5 * x.y, 0.5 * x.x}; });
        for (std::size_t e = 0; e < t.size(); ++e) CHECK(std::abs(tq[e] - t[e]) < 1e-13);
    }
}
