#include "hc2/geometry.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cassert>
#include <fmt/format.h>
#include <ostream>

namespace hc2 {

// ---------------------------------------------------------------- DomainSpec

DomainSpec DomainSpec::disc(double radius) {
    if (!(radius > 0)) throw ConfigError("disc radius must be positive");
    return {DomainKind::Disc, radius, radius, 0};
}

DomainSpec DomainSpec::rectangle(double width, double height) {
    if (!(width > 0 && height > 0)) throw ConfigError("rectangle sides must be positive");
    return {DomainKind::Rectangle, width, height, 0};
}

DomainSpec DomainSpec::half_strip(double ell, double T) {
    if (!(ell > 0 && T > 0)) throw ConfigError("half-strip needs ell > 0 and T > 0");
    return {DomainKind::HalfStrip, ell, T, 0};
}

DomainSpec DomainSpec::cell(double R, int N) {
    if (N < 1) throw ConfigError("cell flux N must be a positive integer");
    double target = 2.0 * pi * N;
    if (!(R > 0) || std::abs(R * R - target) > 1e-12 * target)
        throw ConfigError(fmt::format("cell side R = {} violates R^2 = 2 pi N for N = {}", R, N));
    return {DomainKind::Cell, R, R, N};
}

DomainSpec DomainSpec::quantized_cell(int N, double aspect) {
    if (N < 1) throw ConfigError("cell flux N must be a positive integer");
    if (!(aspect > 0)) throw ConfigError("cell aspect must be positive");
    double area = 2.0 * pi * N;
    double rx = std::sqrt(area * aspect);
    return {DomainKind::Cell, rx, area / rx, N};
}

double DomainSpec::area() const {
    switch (kind) {
    case DomainKind::Disc: return pi * a * a;
    case DomainKind::HalfStrip: return 2.0 * a * b;
    default: return a * b;
    }
}

double DomainSpec::perimeter() const {
    switch (kind) {
    case DomainKind::Disc: return 2.0 * pi * a;
    case DomainKind::Rectangle: return 2.0 * (a + b);
    case DomainKind::HalfStrip: return 2.0 * a;  // only tau = 0 is physical
    case DomainKind::Cell: return 0.0;
    }
    return 0.0;
}

double DomainSpec::inradius() const {
    switch (kind) {
    case DomainKind::Disc: return a;
    case DomainKind::Rectangle: return 0.5 * std::min(a, b);
    case DomainKind::HalfStrip: return 0.5 * std::min(2 * a, b);
    case DomainKind::Cell: return 0.5 * std::min(a, b);
    }
    return 0.0;
}

std::string DomainSpec::name() const {
    switch (kind) {
    case DomainKind::Disc: return "disc";
    case DomainKind::Rectangle: return "rectangle";
    case DomainKind::HalfStrip: return "halfstrip";
    case DomainKind::Cell: return "cell";
    }
    return "?";
}

// ---------------------------------------------------------------- EdgePath

Vec2 EdgePath::point(double u) const {
    if (kind == PathKind::Segment) return p0 + (p1 - p0) * u;
    double th = angle0 + u * dangle;
    return {radius * std::cos(th), radius * std::sin(th)};
}

Vec2 EdgePath::tangent(double u) const {
    if (kind == PathKind::Segment) return p1 - p0;
    double th = angle0 + u * dangle;
    return {-radius * dangle * std::sin(th), radius * dangle * std::cos(th)};
}

double EdgePath::length() const {
    return kind == PathKind::Segment ? (p1 - p0).norm() : radius * std::abs(dangle);
}

double EdgePath::integrate(const std::function<Vec2(Vec2)>& field) const {
    static const double gx[7] = {-0.9491079123427585, -0.7415311855993945, -0.4058451513773972, 0.0,
                                 0.4058451513773972,  0.7415311855993945,  0.9491079123427585};
    static const double gw[7] = {0.1294849661688697, 0.2797053914892766, 0.3818300505051189, 0.4179591836734694,
                                 0.3818300505051189, 0.2797053914892766, 0.1294849661688697};
    double s = 0.0;
    for (int q = 0; q < 7; ++q) {
        double u = 0.5 * (gx[q] + 1.0);
        s += 0.5 * gw[q] * field(point(u)).dot(tangent(u));
    }
    return s;
}

double EdgePath::integrate_A0() const {
    if (kind == PathKind::Segment) return 0.5 * p0.cross(p1);
    return 0.5 * radius * radius * dangle;
}

// ---------------------------------------------------------------- Grid

double Grid::total_weight() const {
    double s = 0.0;
    for (double w : weight) s += w;
    return s;
}

std::vector<double> Grid::links_A0() const {
    std::vector<double> t(num_edges());
    for (std::size_t e = 0; e < t.size(); ++e) t[e] = path[e].integrate_A0();
    return t;
}

std::vector<double> Grid::links_of(const std::function<Vec2(Vec2)>& field) const {
    std::vector<double> t(num_edges());
    for (std::size_t e = 0; e < t.size(); ++e) t[e] = path[e].integrate(field);
    return t;
}

void Grid::pin_boundary() {
    for (std::size_t i = 0; i < num_nodes(); ++i)
        if (boundary[i]) pinned[i] = 1;
}

void Grid::finalize() {
    std::size_t n = num_nodes();
    adj_offset.assign(n + 1, 0);
    for (std::size_t e = 0; e < num_edges(); ++e) {
        adj_offset[ea[e] + 1]++;
        adj_offset[eb[e] + 1]++;
    }
    for (std::size_t i = 0; i < n; ++i) adj_offset[i + 1] += adj_offset[i];
    adj_edge.assign(adj_offset[n], 0);
    std::vector<int> fill(adj_offset.begin(), adj_offset.end() - 1);
    for (std::size_t e = 0; e < num_edges(); ++e) {
        adj_edge[fill[ea[e]]++] = static_cast<int>(e);
        adj_edge[fill[eb[e]]++] = static_cast<int>(e);
    }
    if (twist.size() != num_edges()) twist.assign(num_edges(), 0.0);
    if (pinned.size() != n) pinned.assign(n, 0);
}

const CanonicalField& Grid::canonical_field() const {
    std::call_once(f_once_, [this] { f_cache_ = std::make_shared<CanonicalField>(build_F(*this)); });
    return *f_cache_;
}

cplx Grid::interpolate(const std::vector<cplx>& values, Vec2 x) const {
    if (!cart) throw ConfigError("interpolation needs a Cartesian grid");
    const auto& c = *cart;
    double u = (x.x - c.x0) / c.hx, v = (x.y - c.y0) / c.hy;
    int i = static_cast<int>(std::floor(u)), j = static_cast<int>(std::floor(v));
    double fu = u - i, fv = v - j;
    auto at = [&](int ii, int jj) -> cplx {
        if (c.periodic) {
            ii = ((ii % c.nx) + c.nx) % c.nx;
            jj = ((jj % c.ny) + c.ny) % c.ny;
        } else {
            if (ii < 0 || jj < 0 || ii >= c.nx || jj >= c.ny) return 0.0;
        }
        return values[c.index(ii, jj)];
    };
    return (1 - fu) * (1 - fv) * at(i, j) + fu * (1 - fv) * at(i + 1, j) + (1 - fu) * fv * at(i, j + 1) +
           fu * fv * at(i + 1, j + 1);
}

// ---------------------------------------------------------------- builders

namespace {

int add_edge(Grid& g, int a, int b, double c, const EdgePath& p, double tw = 0.0) {
    g.ea.push_back(a);
    g.eb.push_back(b);
    g.stiffness.push_back(c);
    g.path.push_back(p);
    g.twist.push_back(tw);
    return static_cast<int>(g.ea.size()) - 1;
}

EdgePath segment(Vec2 a, Vec2 b) {
    EdgePath p;
    p.p0 = a;
    p.p1 = b;
    return p;
}

EdgePath arc(double r, double th0, double dth) {
    EdgePath p;
    p.kind = PathKind::Arc;
    p.radius = r;
    p.angle0 = th0;
    p.dangle = dth;
    p.p0 = {r * std::cos(th0), r * std::sin(th0)};
    p.p1 = {r * std::cos(th0 + dth), r * std::sin(th0 + dth)};
    return p;
}

void add_face(Grid& g, std::initializer_list<std::pair<int, int>> edges_signs) {
    Face f;
    for (auto [e, s] : edges_signs) {
        f.edge[f.count] = e;
        f.sign[f.count] = static_cast<std::int8_t>(s);
        f.node[f.count] = s > 0 ? g.ea[e] : g.eb[e];
        f.area += s * g.path[e].integrate_A0();
        ++f.count;
    }
    assert(f.area > 0);
    g.faces.push_back(f);
}

/// Spacings from the boundary inward: h_b q^k capped at h_int, n intervals summing to R.
std::vector<double> graded_radii(double R, int n, double h_b, double q) {
    std::vector<double> r(n + 1);
    if (h_b <= 0 || h_b * n >= R) {
        for (int k = 0; k <= n; ++k) r[k] = R * k / n;
        return r;
    }
    auto total = [&](double cap, double qq) {
        double s = 0, h = h_b;
        for (int k = 0; k < n; ++k) {
            s += std::min(h, cap);
            h *= qq;
        }
        return s;
    };
    if (total(R, q) < R) {
        double lo = q, hi = 4.0;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            (total(R, mid) < R ? lo : hi) = mid;
        }
        q = hi;
    }
    double lo = h_b, hi = R;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (total(mid, q) < R ? lo : hi) = mid;
    }
    double cap = 0.5 * (lo + hi);
    std::vector<double> sp(n);
    double h = h_b;
    for (int k = 0; k < n; ++k) {
        sp[k] = std::min(h, cap);
        h *= q;
    }
    double sum = 0;
    for (double s : sp) sum += s;
    // sp[0] is the outermost interval
    r[n] = R;
    for (int k = n - 1; k >= 0; --k) r[k] = r[k + 1] - sp[n - 1 - k] * (R / sum);
    r[0] = 0.0;
    return r;
}

GridPtr make_ring_disc(const DomainSpec& spec, const Resolution& res, const std::vector<double>& radii, int m_outer) {
    auto gp = std::make_shared<Grid>();
    Grid& g = *gp;
    g.domain = spec;
    g.resolution = res;
    const double R = spec.a;
    const int nr = static_cast<int>(radii.size()) - 1;  // rings 1..nr
    if (nr < 2 || m_outer < 6) throw ConfigError("disc resolution too small");

    RingLayout L;
    L.radius = radii;
    L.count.assign(nr + 1, 0);
    L.count[nr] = m_outer;
    for (int k = nr - 1; k >= 1; --k) {
        int m = L.count[k + 1];
        double hr = radii[k + 1] - radii[k];
        if (m % 2 == 0 && m / 2 >= 6 && 2 * pi * radii[k] / (m / 2) <= 1.25 * hr)
            m /= 2;
        L.count[k] = m;
    }
    L.count[0] = 1;
    L.offset.assign(nr + 1, 0);
    for (int k = 1; k <= nr; ++k) L.offset[k] = L.offset[k - 1] + L.count[k - 1];
    int n = L.offset[nr] + L.count[nr];

    auto rho = [&](int k) {  // dual radius between ring k and k+1
        if (k < 0) return 0.0;
        if (k >= nr) return R;
        return 0.5 * (radii[k] + radii[k + 1]);
    };

    g.pos.resize(n);
    g.weight.resize(n);
    g.dist.resize(n);
    g.boundary.assign(n, 0);
    g.normal.assign(n, Vec2{});
    g.pos[0] = {0, 0};
    g.weight[0] = pi * rho(0) * rho(0);
    g.dist[0] = R;
    for (int k = 1; k <= nr; ++k) {
        int m = L.count[k];
        double wk = pi * (rho(k) * rho(k) - rho(k - 1) * rho(k - 1)) / m;
        for (int j = 0; j < m; ++j) {
            double th = 2 * pi * j / m;
            int i = L.offset[k] + j;
            g.pos[i] = {radii[k] * std::cos(th), radii[k] * std::sin(th)};
            g.weight[i] = wk;
            g.dist[i] = R - radii[k];
            if (k == nr) {
                g.boundary[i] = 1;
                g.normal[i] = {std::cos(th), std::sin(th)};
            }
        }
    }
    auto node = [&](int k, int j) { return L.offset[k] + ((j % L.count[k]) + L.count[k]) % L.count[k]; };

    // arcs of each ring
    std::vector<std::vector<int>> arc_e(nr + 1);
    for (int k = 1; k <= nr; ++k) {
        int m = L.count[k];
        double dth = 2 * pi / m;
        double extent = rho(k) - rho(k - 1);
        double c = extent / (radii[k] * dth);
        arc_e[k].resize(m);
        for (int j = 0; j < m; ++j) arc_e[k][j] = add_edge(g, node(k, j), node(k, j + 1), c, arc(radii[k], j * dth, dth));
    }
    // centre fan
    {
        int m = L.count[1];
        double G = 2 * pi * rho(0) / radii[1];
        std::vector<int> sp(m);
        for (int j = 0; j < m; ++j) sp[j] = add_edge(g, 0, node(1, j), G / m, segment(g.pos[0], g.pos[node(1, j)]));
        for (int j = 0; j < m; ++j) add_face(g, {{sp[j], 1}, {arc_e[1][j], 1}, {sp[(j + 1) % m], -1}});
    }
    for (int k = 1; k < nr; ++k) {
        int mi = L.count[k], mo = L.count[k + 1];
        double G = 2 * pi * rho(k) / (radii[k + 1] - radii[k]);
        if (mo == mi) {
            std::vector<int> sp(mi);
            for (int j = 0; j < mi; ++j)
                sp[j] = add_edge(g, node(k, j), node(k + 1, j), G / mi, segment(g.pos[node(k, j)], g.pos[node(k + 1, j)]));
            for (int j = 0; j < mi; ++j)
                add_face(g, {{sp[j], 1}, {arc_e[k + 1][j], 1}, {sp[(j + 1) % mi], -1}, {arc_e[k][j], -1}});
        } else {
            assert(mo == 2 * mi);
            std::vector<int> rad(mi), sa(mi), sb(mi);
            for (int j = 0; j < mi; ++j) {
                int c0 = node(k, j), c1 = node(k, j + 1), f0 = node(k + 1, 2 * j), f1 = node(k + 1, 2 * j + 1);
                rad[j] = add_edge(g, c0, f0, G / (2.0 * mi), segment(g.pos[c0], g.pos[f0]));
                sa[j] = add_edge(g, c0, f1, G / (4.0 * mi), segment(g.pos[c0], g.pos[f1]));
                sb[j] = add_edge(g, c1, f1, G / (4.0 * mi), segment(g.pos[c1], g.pos[f1]));
            }
            for (int j = 0; j < mi; ++j) {
                add_face(g, {{rad[j], 1}, {arc_e[k + 1][2 * j], 1}, {sa[j], -1}});
                add_face(g, {{sa[j], 1}, {sb[j], -1}, {arc_e[k][j], -1}});
                add_face(g, {{sb[j], 1}, {arc_e[k + 1][2 * j + 1], 1}, {rad[(j + 1) % mi], -1}});
            }
        }
    }
    g.rings = std::move(L);
    g.finalize();
    return gp;
}

GridPtr make_cartesian(const DomainSpec& spec, const Resolution& res) {
    auto gp = std::make_shared<Grid>();
    Grid& g = *gp;
    g.domain = spec;
    g.resolution = res;
    CartesianLayout c;
    c.nx = res.n1;
    c.ny = res.n2;
    bool periodic = spec.kind == DomainKind::Cell;
    c.periodic = periodic;
    if (c.nx < (periodic ? 2 : 3) || c.ny < (periodic ? 2 : 3)) throw ConfigError("Cartesian resolution too small");
    double W = spec.kind == DomainKind::HalfStrip ? 2 * spec.a : spec.a;
    double H = spec.b;
    if (spec.kind == DomainKind::Rectangle) {
        c.x0 = -W / 2;
        c.y0 = -H / 2;
    } else if (spec.kind == DomainKind::HalfStrip) {
        c.x0 = -spec.a;
        c.y0 = 0;
    }
    c.hx = periodic ? W / c.nx : W / (c.nx - 1);
    c.hy = periodic ? H / c.ny : H / (c.ny - 1);
    int n = c.nx * c.ny;
    g.pos.resize(n);
    g.weight.resize(n);
    g.dist.resize(n);
    g.boundary.assign(n, 0);
    g.pinned.assign(n, 0);
    g.normal.assign(n, Vec2{});
    for (int j = 0; j < c.ny; ++j)
        for (int i = 0; i < c.nx; ++i) {
            int id = c.index(i, j);
            Vec2 x{c.x0 + i * c.hx, c.y0 + j * c.hy};
            g.pos[id] = x;
            double fx = (!periodic && (i == 0 || i == c.nx - 1)) ? 0.5 : 1.0;
            double fy = (!periodic && (j == 0 || j == c.ny - 1)) ? 0.5 : 1.0;
            g.weight[id] = fx * fy * c.hx * c.hy;
            if (spec.kind == DomainKind::Rectangle) {
                g.dist[id] = std::min({x.x - c.x0, c.x0 + W - x.x, x.y - c.y0, c.y0 + H - x.y});
                bool bd = i == 0 || j == 0 || i == c.nx - 1 || j == c.ny - 1;
                g.boundary[id] = bd;
                if (bd) {
                    Vec2 nv{i == 0 ? -1.0 : (i == c.nx - 1 ? 1.0 : 0.0), j == 0 ? -1.0 : (j == c.ny - 1 ? 1.0 : 0.0)};
                    g.normal[id] = nv * (1.0 / nv.norm());
                }
            } else if (spec.kind == DomainKind::HalfStrip) {
                g.dist[id] = x.y;
                if (j == 0) {
                    g.boundary[id] = 1;
                    g.normal[id] = {0, -1};
                }
                if (i == 0 || i == c.nx - 1 || j == c.ny - 1) g.pinned[id] = 1;
            } else {
                g.dist[id] = std::numeric_limits<double>::infinity();
            }
        }
    std::vector<int> hor(n, -1), ver(n, -1);
    for (int j = 0; j < c.ny; ++j)
        for (int i = 0; i < c.nx; ++i) {
            int id = c.index(i, j);
            Vec2 x = g.pos[id];
            if (i + 1 < c.nx || periodic) {
                int to = c.index((i + 1) % c.nx, j);
                double face = (!periodic && (j == 0 || j == c.ny - 1)) ? 0.5 * c.hy : c.hy;
                double tw = (i + 1 == c.nx) ? 0.5 * spec.a * x.y : 0.0;
                hor[id] = add_edge(g, id, to, face / c.hx, segment(x, x + Vec2{c.hx, 0}), tw);
            }
            if (j + 1 < c.ny || periodic) {
                int to = c.index(i, (j + 1) % c.ny);
                double face = (!periodic && (i == 0 || i == c.nx - 1)) ? 0.5 * c.hx : c.hx;
                double tw = (j + 1 == c.ny) ? -0.5 * spec.b * x.x : 0.0;
                ver[id] = add_edge(g, id, to, face / c.hy, segment(x, x + Vec2{0, c.hy}), tw);
            }
        }
    for (int j = 0; j < (periodic ? c.ny : c.ny - 1); ++j)
        for (int i = 0; i < (periodic ? c.nx : c.nx - 1); ++i) {
            int id = c.index(i, j);
            int right = c.index((i + 1) % c.nx, j), up = c.index(i, (j + 1) % c.ny);
            add_face(g, {{hor[id], 1}, {ver[right], 1}, {hor[up], -1}, {ver[id], -1}});
        }
    if (res.dirichlet && spec.kind == DomainKind::Rectangle) g.pin_boundary();
    g.cart = c;
    g.finalize();
    return gp;
}

} // namespace

GridPtr build_grid(const DomainSpec& spec, const Resolution& res) {
    if (spec.kind == DomainKind::Disc) {
        if (res.n1 < 2 || res.n2 < 6) throw ConfigError("disc resolution needs n1 >= 2 rings and n2 >= 6 boundary nodes");
        return make_ring_disc(spec, res, graded_radii(spec.a, res.n1, res.boundary_spacing, res.stretch), res.n2);
    }
    return make_cartesian(spec, res);
}

GridPtr build_disc_for(double radius, double h, double collar_width, int nodes_in_collar) {
    double hb = std::min(h, 0.8 * collar_width / nodes_in_collar);
    const double q = 1.08;
    // count intervals: graded from hb up to h, then uniform
    std::vector<double> sp;
    double s = 0, cur = hb;
    while (s < radius) {
        sp.push_back(cur);
        s += cur;
        cur = std::min(cur * q, h);
    }
    int n1 = static_cast<int>(sp.size());
    int target = static_cast<int>(std::ceil(2 * pi * radius / h));
    int m = 0;
    for (int p = 0;; ++p) {
        int best = 1 << 30;
        for (int b = 6; b < 12; ++b)
            if ((b << p) >= target) best = std::min(best, b << p);
        if (best < (1 << 30)) {
            m = best;
            break;
        }
    }
    Resolution res{n1, m, hb, q};
    return build_grid(DomainSpec::disc(radius), res);
}

// ---------------------------------------------------------------- chart

Vec2 BoundaryChart::gamma(double s) const {
    if (domain.kind == DomainKind::Disc) {
        double r = domain.a;
        return {r * std::cos(s / r), r * std::sin(s / r)};
    }
    // rectangle: counterclockwise from the middle of the bottom side
    double w = domain.a, h = domain.b;
    double u = std::fmod(std::fmod(s, length) + length, length);
    double segs[4] = {w, h, w, h};
    Vec2 start[4] = {{-w / 2, -h / 2}, {w / 2, -h / 2}, {w / 2, h / 2}, {-w / 2, h / 2}};
    Vec2 dir[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    u += w / 2;
    for (int k = 0;; k = (k + 1) % 4) {
        if (u <= segs[k]) return start[k] + dir[k] * u;
        u -= segs[k];
    }
}

Vec2 BoundaryChart::inward_normal(double s) const {
    if (domain.kind == DomainKind::Disc) {
        double r = domain.a;
        return {-std::cos(s / r), -std::sin(s / r)};
    }
    Vec2 p = gamma(s);
    double w = domain.a / 2, h = domain.b / 2;
    if (std::abs(p.y + h) < 1e-14) return {0, 1};
    if (std::abs(p.x - w) < 1e-14) return {-1, 0};
    if (std::abs(p.y - h) < 1e-14) return {0, -1};
    return {1, 0};
}

double BoundaryChart::curvature(double) const {
    return domain.kind == DomainKind::Disc ? 1.0 / domain.a : 0.0;
}

Vec2 BoundaryChart::map(double s, double t) const { return gamma(s) + inward_normal(s) * t; }

std::pair<double, double> BoundaryChart::inverse(Vec2 x) const {
    if (domain.kind == DomainKind::Disc) {
        double r = domain.a;
        return {r * std::atan2(x.y, x.x), r - x.norm()};
    }
    double w = domain.a / 2, h = domain.b / 2;
    double d[4] = {x.y + h, w - x.x, h - x.y, x.x + w};
    int k = static_cast<int>(std::min_element(d, d + 4) - d);
    double s;
    switch (k) {
    case 0: s = x.x; break;
    case 1: s = w + (x.y + h); break;
    case 2: s = w + 2 * h + (w - x.x); break;
    default: s = 3 * w + 2 * h + (h - x.y); break;
    }
    return {s, d[k]};
}

BoundaryChart boundary_chart(const DomainSpec& spec) {
    if (spec.kind != DomainKind::Disc && spec.kind != DomainKind::Rectangle)
        throw ConfigError("boundary chart needs a disc or rectangle");
    BoundaryChart c;
    c.domain = spec;
    c.length = spec.perimeter();
    c.t0 = spec.kind == DomainKind::Disc ? 0.5 * spec.a : 0.25 * spec.inradius();
    c.smooth = spec.smooth_boundary();
    return c;
}

// ---------------------------------------------------------------- canonical field

namespace {

using SpMat = Eigen::SparseMatrix<double>;

/// Minus the graph Laplacian with edge weights `stiffness`, restricted to free nodes.
SpMat neg_laplacian(const Grid& g, const std::vector<int>& map, int nfree) {
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
        int a = map[g.ea[e]], b = map[g.eb[e]];
        double c = g.stiffness[e];
        if (a >= 0) trip.emplace_back(a, a, c);
        if (b >= 0) trip.emplace_back(b, b, c);
        if (a >= 0 && b >= 0) {
            trip.emplace_back(a, b, -c);
            trip.emplace_back(b, a, -c);
        }
    }
    SpMat K(nfree, nfree);
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
}

std::vector<double> stream_ring(const Grid& g) {
    int n = static_cast<int>(g.num_nodes());
    std::vector<int> map(n, -1);
    int nf = 0;
    for (int i = 0; i < n; ++i)
        if (!g.boundary[i]) map[i] = nf++;
    SpMat K = neg_laplacian(g, map, nf);
    Eigen::VectorXd rhs(nf);
    for (int i = 0; i < n; ++i)
        if (map[i] >= 0) rhs[map[i]] = -g.weight[i];
    Eigen::SimplicialLDLT<SpMat> solver(K);
    if (solver.info() != Eigen::Success) throw SolverError("stream function factorisation failed");
    Eigen::VectorXd x = solver.solve(rhs);
    std::vector<double> phi(n, 0.0);
    for (int i = 0; i < n; ++i)
        if (map[i] >= 0) phi[i] = x[map[i]];
    return phi;
}

/// Fourth-order compact (Mehrstellen) stencil on equal spacings, 5-point otherwise.
std::vector<double> stream_cartesian(const Grid& g) {
    const auto& c = *g.cart;
    int n = c.nx * c.ny;
    std::vector<int> map(n, -1);
    int nf = 0;
    for (int j = 1; j < c.ny - 1; ++j)
        for (int i = 1; i < c.nx - 1; ++i) map[c.index(i, j)] = nf++;
    bool compact = std::abs(c.hx - c.hy) < 1e-12 * c.hx;
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Constant(nf, 1.0);
    for (int j = 1; j < c.ny - 1; ++j)
        for (int i = 1; i < c.nx - 1; ++i) {
            int r = map[c.index(i, j)];
            auto put = [&](int ii, int jj, double v) {
                int col = map[c.index(ii, jj)];
                if (col >= 0) trip.emplace_back(r, col, v);
            };
            if (compact) {
                double s = 1.0 / (6 * c.hx * c.hx);
                put(i, j, -20 * s);
                put(i + 1, j, 4 * s), put(i - 1, j, 4 * s), put(i, j + 1, 4 * s), put(i, j - 1, 4 * s);
                put(i + 1, j + 1, s), put(i - 1, j + 1, s), put(i + 1, j - 1, s), put(i - 1, j - 1, s);
            } else {
                double sx = 1 / (c.hx * c.hx), sy = 1 / (c.hy * c.hy);
                put(i, j, -2 * sx - 2 * sy);
                put(i + 1, j, sx), put(i - 1, j, sx), put(i, j + 1, sy), put(i, j - 1, sy);
            }
        }
    SpMat A(nf, nf);
    A.setFromTriplets(trip.begin(), trip.end());
    SpMat K = -A;
    Eigen::SimplicialLDLT<SpMat> solver(K);
    if (solver.info() != Eigen::Success) throw SolverError("stream function factorisation failed");
    Eigen::VectorXd x = solver.solve(-rhs);
    std::vector<double> phi(n, 0.0);
    for (int i = 0; i < n; ++i)
        if (map[i] >= 0) phi[i] = x[map[i]];
    return phi;
}

double d1_fourth(const std::vector<double>& f, int i, int n, double h, const std::function<int(int)>& idx) {
    auto v = [&](int k) { return f[idx(k)]; };
    if (n < 5) {
        if (i == 0) return (v(1) - v(0)) / h;
        if (i == n - 1) return (v(n - 1) - v(n - 2)) / h;
        return (v(i + 1) - v(i - 1)) / (2 * h);
    }
    if (i == 0) return (-25 * v(0) + 48 * v(1) - 36 * v(2) + 16 * v(3) - 3 * v(4)) / (12 * h);
    if (i == 1) return (-3 * v(0) - 10 * v(1) + 18 * v(2) - 6 * v(3) + v(4)) / (12 * h);
    if (i == n - 1) return -(-25 * v(n - 1) + 48 * v(n - 2) - 36 * v(n - 3) + 16 * v(n - 4) - 3 * v(n - 5)) / (12 * h);
    if (i == n - 2) return -(-3 * v(n - 1) - 10 * v(n - 2) + 18 * v(n - 3) - 6 * v(n - 4) + v(n - 5)) / (12 * h);
    return (-v(i + 2) + 8 * v(i + 1) - 8 * v(i - 1) + v(i - 2)) / (12 * h);
}

/// Value of ring k at angle th by periodic linear interpolation.
double ring_value(const Grid& g, const std::vector<double>& f, int k, double th) {
    const auto& L = *g.rings;
    if (k == 0) return f[0];
    int m = L.count[k];
    double u = th / (2 * pi) * m;
    u = std::fmod(std::fmod(u, m) + m, m);
    int j = static_cast<int>(std::floor(u));
    double t = u - j;
    return (1 - t) * f[L.offset[k] + j % m] + t * f[L.offset[k] + (j + 1) % m];
}

std::vector<Vec2> gradient_ring(const Grid& g, const std::vector<double>& f) {
    const auto& L = *g.rings;
    int nr = static_cast<int>(L.radius.size()) - 1;
    std::vector<Vec2> grad(g.num_nodes());
    {
        int m = L.count[1];
        Vec2 s{};
        for (int j = 0; j < m; ++j) {
            Vec2 e = g.pos[L.offset[1] + j] * (1.0 / L.radius[1]);
            s += e * (f[L.offset[1] + j] - f[0]);
        }
        grad[0] = s * (2.0 / (m * L.radius[1]));
    }
    for (int k = 1; k <= nr; ++k) {
        int m = L.count[k];
        double r = L.radius[k];
        for (int j = 0; j < m; ++j) {
            double th = 2 * pi * j / m;
            int i = L.offset[k] + j;
            double dr;
            if (k < nr) {
                double r0 = L.radius[k - 1], r2 = L.radius[k + 1];
                double h1 = r - r0, h2 = r2 - r;
                double f0 = ring_value(g, f, k - 1, th), f2 = ring_value(g, f, k + 1, th);
                dr = -h2 / (h1 * (h1 + h2)) * f0 + (h2 - h1) / (h1 * h2) * f[i] + h1 / (h2 * (h1 + h2)) * f2;
            } else {
                double r0 = L.radius[k - 2], r1 = L.radius[k - 1];
                double h1 = r1 - r0, h2 = r - r1;
                double f0 = ring_value(g, f, k - 2, th), f1 = ring_value(g, f, k - 1, th);
                dr = h2 / (h1 * (h1 + h2)) * f0 - (h1 + h2) / (h1 * h2) * f1 + (h1 + 2 * h2) / (h2 * (h1 + h2)) * f[i];
            }
            double dth = (f[L.offset[k] + (j + 1) % m] - f[L.offset[k] + (j + m - 1) % m]) / (2 * 2 * pi / m);
            Vec2 er{std::cos(th), std::sin(th)}, et{-std::sin(th), std::cos(th)};
            grad[i] = er * dr + et * (dth / r);
        }
    }
    return grad;
}

std::vector<Vec2> gradient_cartesian(const Grid& g, const std::vector<double>& f) {
    const auto& c = *g.cart;
    std::vector<Vec2> grad(g.num_nodes());
    for (int j = 0; j < c.ny; ++j)
        for (int i = 0; i < c.nx; ++i) {
            double gx = d1_fourth(f, i, c.nx, c.hx, [&](int k) { return c.index(k, j); });
            double gy = d1_fourth(f, j, c.ny, c.hy, [&](int k) { return c.index(i, k); });
            grad[c.index(i, j)] = {gx, gy};
        }
    return grad;
}

} // namespace

CanonicalField build_F(const Grid& g) {
    if (g.domain.kind != DomainKind::Disc && g.domain.kind != DomainKind::Rectangle)
        throw ConfigError("build_F supports disc and rectangle domains");
    CanonicalField out;
    std::vector<Vec2> grad;
    if (g.rings) {
        out.stream = stream_ring(g);
        grad = gradient_ring(g, out.stream);
    } else {
        out.stream = stream_cartesian(g);
        grad = gradient_cartesian(g, out.stream);
    }
    out.nodal.resize(g.num_nodes());
    for (std::size_t i = 0; i < grad.size(); ++i) out.nodal[i] = {-grad[i].y, grad[i].x};

    // Links: exact circulations of A0 made divergence free by a discrete Neumann solve.
    std::vector<double> t = g.links_A0();
    int n = static_cast<int>(g.num_nodes());
    std::vector<int> map(n);
    for (int i = 0; i < n; ++i) map[i] = i - 1;  // node 0 pinned
    SpMat K = neg_laplacian(g, map, n - 1);
    Eigen::VectorXd div(n - 1);
    for (int i = 1; i < n; ++i) div[i - 1] = node_divergence(g, t, i);
    Eigen::SimplicialLDLT<SpMat> solver(K);
    if (solver.info() != Eigen::Success) throw SolverError("gauge projection factorisation failed");
    Eigen::VectorXd chi = solver.solve(div);
    auto chi_at = [&](int i) { return i == 0 ? 0.0 : chi[i - 1]; };
    for (std::size_t e = 0; e < g.num_edges(); ++e) t[e] += chi_at(g.eb[e]) - chi_at(g.ea[e]);
    out.links = std::move(t);
    return out;
}

double face_curl(const Grid& g, const std::vector<double>& links, std::size_t f) {
    const Face& F = g.faces[f];
    double s = 0;
    for (int k = 0; k < F.count; ++k) s += F.sign[k] * links[F.edge[k]];
    return s / F.area;
}

double node_divergence(const Grid& g, const std::vector<double>& links, std::size_t i) {
    double s = 0;
    for (int p = g.adj_offset[i]; p < g.adj_offset[i + 1]; ++p) {
        int e = g.adj_edge[p];
        s += (g.ea[e] == static_cast<int>(i) ? 1.0 : -1.0) * g.stiffness[e] * links[e];
    }
    return s;
}

void write_field_csv(std::ostream& os, const Grid& grid, const std::vector<double>& values) {
    os << "x,y,weight,value\n";
    for (std::size_t i = 0; i < grid.num_nodes(); ++i)
        os << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}\n", grid.pos[i].x, grid.pos[i].y, grid.weight[i], values[i]);
}

} // namespace hc2
