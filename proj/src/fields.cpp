#include "hc2/fields.hpp"

#include <algorithm>
#include <fmt/format.h>

namespace hc2 {

GLParams GLParams::from_mu(double kappa, double mu, double delta) {
    GLParams p{kappa, kappa - mu * std::sqrt(kappa), delta};
    p.validate();
    return p;
}

double GLParams::zeta() const {
    return std::max(std::sqrt(std::abs(1.0 - kappa / H)), std::pow(kappa, -0.25));
}

double GLParams::lambda() const {
    return std::max(std::sqrt(std::abs(kappa / H - 1.0)), std::pow(kappa, -1.0 + delta));
}

void GLParams::validate() const {
    if (!(kappa > 0)) throw ConfigError(fmt::format("kappa must be positive (got {})", kappa));
    if (!(H > 0)) throw ConfigError(fmt::format("H must be positive (got {})", H));
    if (!(delta > 0 && delta < 1)) throw ConfigError(fmt::format("delta must lie in (0, 1) (got {})", delta));
}

void check_same_grid(const GridPtr& a, const GridPtr& b) {
    if (a.get() != b.get()) throw GridMismatch("fields live on different grids");
}

ComplexField::ComplexField(GridPtr g, std::vector<cplx> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid->num_nodes()) throw GridMismatch("value count does not match grid");
}

double ComplexField::norm2() const {
    double s = 0;
    for (std::size_t i = 0; i < values.size(); ++i) s += grid->weight[i] * std::norm(values[i]);
    return std::sqrt(s);
}

double ComplexField::max_abs() const {
    double m = 0;
    for (auto v : values) m = std::max(m, std::abs(v));
    return m;
}

std::vector<double> ComplexField::abs() const {
    std::vector<double> a(values.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::abs(values[i]);
    return a;
}

// ---------------------------------------------------------------- GaugeField

GaugeField GaugeField::from_nodal(GridPtr g, std::vector<Vec2> nodal) {
    if (nodal.size() != g->num_nodes()) throw GridMismatch("nodal potential size does not match grid");
    GaugeField A;
    A.links.resize(g->num_edges());
    for (std::size_t e = 0; e < g->num_edges(); ++e) {
        const auto& p = g->path[e];
        Vec2 mid = (nodal[g->ea[e]] + nodal[g->eb[e]]) * 0.5;
        A.links[e] = mid.dot(p.p1 - p.p0);
    }
    A.grid = std::move(g);
    A.nodal = std::move(nodal);
    return A;
}

GaugeField GaugeField::from_function(GridPtr g, const std::function<Vec2(Vec2)>& fn) {
    GaugeField A;
    A.links = g->links_of(fn);
    A.nodal.resize(g->num_nodes());
    for (std::size_t i = 0; i < g->num_nodes(); ++i) A.nodal[i] = fn(g->pos[i]);
    A.grid = std::move(g);
    return A;
}

GaugeField GaugeField::symmetric(GridPtr g) {
    GaugeField A;
    A.links = g->links_A0();
    A.nodal.resize(g->num_nodes());
    for (std::size_t i = 0; i < g->num_nodes(); ++i) A.nodal[i] = {-0.5 * g->pos[i].y, 0.5 * g->pos[i].x};
    A.grid = std::move(g);
    return A;
}

GaugeField GaugeField::canonical(GridPtr g) {
    const auto& F = g->canonical_field();
    GaugeField A;
    A.links = F.links;
    A.nodal = F.nodal;
    A.grid = std::move(g);
    return A;
}

std::vector<cplx> GaugeField::link_phases(double coupling) const {
    std::vector<cplx> u(links.size());
    for (std::size_t e = 0; e < u.size(); ++e) u[e] = std::polar(1.0, grid->twist[e] - coupling * links[e]);
    return u;
}

std::vector<double> GaugeField::curl() const {
    std::vector<double> c(grid->faces.size());
    for (std::size_t f = 0; f < c.size(); ++f) c[f] = face_curl(*grid, links, f);
    return c;
}

// ---------------------------------------------------------------- covariant gradient

namespace {

/// Least-squares gradient from edge differences.  diff(e, from_a) returns the
/// difference (neighbour - self) seen from the node; vec is the edge vector.
template <class T, class Diff>
void ls_gradient(const Grid& g, Diff diff, std::vector<T>& g1, std::vector<T>& g2) {
    std::size_t n = g.num_nodes();
    g1.assign(n, T{});
    g2.assign(n, T{});
    for (std::size_t i = 0; i < n; ++i) {
        double m11 = 0, m12 = 0, m22 = 0;
        T b1{}, b2{};
        for (int p = g.adj_offset[i]; p < g.adj_offset[i + 1]; ++p) {
            int e = g.adj_edge[p];
            bool from_a = g.ea[e] == static_cast<int>(i);
            Vec2 d = g.path[e].p1 - g.path[e].p0;
            if (!from_a) d = d * -1.0;
            double w = 1.0 / d.dot(d);
            T D = diff(e, from_a);
            m11 += w * d.x * d.x;
            m12 += w * d.x * d.y;
            m22 += w * d.y * d.y;
            b1 += w * d.x * D;
            b2 += w * d.y * D;
        }
        double det = m11 * m22 - m12 * m12;
        if (std::abs(det) < 1e-300) continue;
        g1[i] = (m22 * b1 - m12 * b2) / det;
        g2[i] = (-m12 * b1 + m11 * b2) / det;
    }
}

} // namespace

CovariantGradient covariant_gradient(const ComplexField& psi, const GaugeField& A, double coupling) {
    check_same_grid(psi.grid, A.grid);
    const Grid& g = *psi.grid;
    auto U = A.link_phases(coupling);
    const auto& v = psi.values;
    CovariantGradient out;
    ls_gradient<cplx>(
        g,
        [&](int e, bool from_a) {
            int a = g.ea[e], b = g.eb[e];
            return from_a ? U[e] * v[b] - v[a] : std::conj(U[e]) * v[a] - v[b];
        },
        out.d1, out.d2);
    return out;
}

std::pair<ComplexField, GaugeField> gauge_transform(const ComplexField& psi, const GaugeField& A,
                                                    const std::vector<double>& chi, double coupling) {
    check_same_grid(psi.grid, A.grid);
    const Grid& g = *psi.grid;
    if (chi.size() != g.num_nodes()) throw GridMismatch("gauge function size does not match grid");
    ComplexField p2 = psi;
    for (std::size_t i = 0; i < chi.size(); ++i) p2.values[i] *= std::polar(1.0, coupling * chi[i]);
    GaugeField A2 = A;
    for (std::size_t e = 0; e < g.num_edges(); ++e) A2.links[e] += chi[g.eb[e]] - chi[g.ea[e]];
    std::vector<double> d1, d2;
    ls_gradient<double>(
        g, [&](int e, bool from_a) { return from_a ? chi[g.eb[e]] - chi[g.ea[e]] : chi[g.ea[e]] - chi[g.eb[e]]; }, d1,
        d2);
    for (std::size_t i = 0; i < chi.size(); ++i) A2.nodal[i] += Vec2{d1[i], d2[i]};
    return {std::move(p2), std::move(A2)};
}

// ---------------------------------------------------------------- LLL projector

cplx lll_kernel(Vec2 x, Vec2 y) {
    Vec2 d = x - y;
    return std::polar(std::exp(-0.25 * d.dot(d)) / (2 * pi), 0.5 * (x.y * y.x - x.x * y.y));
}

ComplexField lll_project(const ComplexField& f) {
    const Grid& g = *f.grid;
    if (!g.cart || g.cart->periodic) throw ConfigError("lll_project needs a non-periodic Cartesian patch");
    const auto& c = *g.cart;
    // exp(-|d|^2/4) < 1e-17 beyond this distance
    const double cut = std::sqrt(4.0 * 40.0);
    int rx = static_cast<int>(std::ceil(cut / c.hx)), ry = static_cast<int>(std::ceil(cut / c.hy));
    std::vector<double> gx(2 * rx + 1), gy(2 * ry + 1);
    for (int k = -rx; k <= rx; ++k) gx[k + rx] = std::exp(-0.25 * (k * c.hx) * (k * c.hx));
    for (int k = -ry; k <= ry; ++k) gy[k + ry] = std::exp(-0.25 * (k * c.hy) * (k * c.hy));
    ComplexField out(f.grid);
    for (int j = 0; j < c.ny; ++j)
        for (int i = 0; i < c.nx; ++i) {
            Vec2 x = g.pos[c.index(i, j)];
            cplx s = 0;
            for (int l = std::max(0, j - ry); l <= std::min(c.ny - 1, j + ry); ++l) {
                double wy = gy[l - j + ry];
                for (int k = std::max(0, i - rx); k <= std::min(c.nx - 1, i + rx); ++k) {
                    int id = c.index(k, l);
                    if (f.values[id] == 0.0) continue;
                    Vec2 y = g.pos[id];
                    double amp = wy * gx[k - i + rx] * g.weight[id];
                    s += std::polar(amp, 0.5 * (x.y * y.x - x.x * y.y)) * f.values[id];
                }
            }
            out.values[c.index(i, j)] = s / (2 * pi);
        }
    return out;
}

double patch_edge_mass(const ComplexField& f, double margin) {
    const Grid& g = *f.grid;
    if (!g.cart || g.cart->periodic) throw ConfigError("patch_edge_mass needs a non-periodic Cartesian patch");
    double x0 = g.pos[0].x, y0 = g.pos[0].y, x1 = x0, y1 = y0;
    for (const auto& p : g.pos) {
        x0 = std::min(x0, p.x), x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y), y1 = std::max(y1, p.y);
    }
    double edge = 0, total = 0;
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        const Vec2 p = g.pos[i];
        double m = g.weight[i] * std::norm(f.values[i]);
        total += m;
        if (std::min({p.x - x0, x1 - p.x, p.y - y0, y1 - p.y}) < margin) edge += m;
    }
    return total > 0 ? edge / total : 0.0;
}

double smoothstep(double t) {
    if (t <= 0) return 0.0;
    if (t >= 1) return 1.0;
    return t * t * t * (10 - 15 * t + 6 * t * t);
}

} // namespace hc2
