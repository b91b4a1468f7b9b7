#include "hc2/bulk_energy.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>

#include "hc2/functional.hpp"

namespace hc2 {

// ---------------------------------------------------------------- cell

MagneticCell MagneticCell::make(int N, int nodes_per_side, double aspect) {
    auto spec = DomainSpec::quantized_cell(N, aspect);
    if (nodes_per_side < 4) throw ConfigError("cell resolution too small");
    double h = std::max(spec.a, spec.b) / nodes_per_side;
    int nx = std::max(4, static_cast<int>(std::lround(spec.a / h)));
    int ny = std::max(4, static_cast<int>(std::lround(spec.b / h)));
    MagneticCell c;
    c.N = N;
    c.Rx = spec.a;
    c.Ry = spec.b;
    c.grid = build_grid(spec, {nx, ny});
    return c;
}

MagneticCell MagneticCell::from_side(double R, int nodes_per_side) {
    double n = R * R / (2 * pi);
    long N = std::lround(n);
    if (N < 1 || std::abs(n - N) > 1e-9 * n)
        throw ConfigError(fmt::format("cell side R = {} is not flux quantised (R^2 / 2pi = {:.6g})", R, n));
    return make(static_cast<int>(N), nodes_per_side);
}

std::vector<cplx> MagneticCell::phases() const { return GaugeField::symmetric(grid).link_phases(1.0); }

cplx MagneticCell::extend(const std::vector<cplx>& u, Vec2 y) const {
    const auto& c = *grid->cart;
    auto node = [&](int ii, int jj) {
        // node (ii, jj) with ii in [0, nx], jj in [0, ny]
        int m = ii / c.nx, n = jj / c.ny;
        double a = (ii % c.nx) * c.hx, yy = jj * c.hy;
        return std::polar(1.0, 0.5 * (m * Rx * yy - n * Ry * a)) * u[c.index(ii % c.nx, jj % c.ny)];
    };
    double mf = std::floor(y.x / Rx), nf = std::floor(y.y / Ry);
    double a = y.x - mf * Rx, b = y.y - nf * Ry;
    int i = std::min(static_cast<int>(a / c.hx), c.nx - 1), j = std::min(static_cast<int>(b / c.hy), c.ny - 1);
    double fu = a / c.hx - i, fv = b / c.hy - j;
    Vec2 x{a, b};
    cplx s = 0;
    const int di[4] = {0, 1, 0, 1}, dj[4] = {0, 0, 1, 1};
    const double w[4] = {(1 - fu) * (1 - fv), fu * (1 - fv), (1 - fu) * fv, fu * fv};
    for (int k = 0; k < 4; ++k) {
        Vec2 xn{(i + di[k]) * c.hx, (j + dj[k]) * c.hy};
        s += w[k] * std::polar(1.0, 0.5 * xn.cross(x)) * node(i + di[k], j + dj[k]);
    }
    return std::polar(1.0, 0.5 * (mf * Rx * y.y - nf * Ry * a)) * s;
}

cplx MagneticCell::commutator() const {
    const double z1 = 0.3 * Rx, z2 = 0.7 * Ry;
    double p12 = 0.5 * Rx * z2 - 0.5 * Ry * (z1 + Rx);  // shift e1 then e2
    double p21 = -0.5 * Ry * z1 + 0.5 * Rx * (z2 + Ry); // shift e2 then e1
    return std::polar(1.0, p12 - p21);
}

// ---------------------------------------------------------------- P_R

PROperator::PROperator(const MagneticCell& cell) : cell_(cell), U_(cell.phases()) {}

namespace {

void apply_K(const Grid& g, const std::vector<cplx>& U, const cplx* u, cplx* out) {
    std::fill(out, out + g.num_nodes(), cplx(0));
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
        int a = g.ea[e], b = g.eb[e];
        double c = g.stiffness[e];
        out[a] += c * (u[a] - U[e] * u[b]);
        out[b] += c * (u[b] - std::conj(U[e]) * u[a]);
    }
}

} // namespace

void PROperator::apply(const std::vector<cplx>& u, std::vector<cplx>& out) const {
    const Grid& g = *cell_.grid;
    out.resize(g.num_nodes());
    apply_K(g, U_, u.data(), out.data());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] /= g.weight[i];
}

double PROperator::form(const std::vector<cplx>& u) const {
    const Grid& g = *cell_.grid;
    double s = 0;
    for (std::size_t e = 0; e < g.num_edges(); ++e) s += g.stiffness[e] * std::norm(U_[e] * u[g.eb[e]] - u[g.ea[e]]);
    return s;
}

cplx PROperator::inner(const std::vector<cplx>& a, const std::vector<cplx>& b) const {
    const Grid& g = *cell_.grid;
    cplx s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += g.weight[i] * std::conj(a[i]) * b[i];
    return s;
}

double PROperator::rayleigh(const std::vector<cplx>& u) const { return form(u) / inner(u, u).real(); }

HermitianPencil PROperator::pencil() const {
    HermitianPencil P;
    const Grid& g = *cell_.grid;
    P.n = g.num_nodes();
    P.mass = g.weight;
    auto grid = cell_.grid;
    auto U = U_;
    P.apply_K = [grid, U](const cplx* in, cplx* out) { apply_K(*grid, U, in, out); };
    // K is positive definite (no zero modes under a nonzero field): exact inverse as preconditioner
    std::vector<Eigen::Triplet<cplx>> t;
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
        int a = g.ea[e], b = g.eb[e];
        double c = g.stiffness[e];
        t.emplace_back(a, a, c);
        t.emplace_back(b, b, c);
        t.emplace_back(a, b, -c * U[e]);
        t.emplace_back(b, a, -c * std::conj(U[e]));
    }
    Eigen::SparseMatrix<cplx> K(P.n, P.n);
    K.setFromTriplets(t.begin(), t.end());
    auto fac = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<cplx>>>(K);
    if (fac->info() == Eigen::Success) {
        const int n = static_cast<int>(P.n);
        P.precondition = [fac, n](const cplx* in, cplx* out) {
            Eigen::Map<const Eigen::VectorXcd> r(in, n);
            Eigen::Map<Eigen::VectorXcd>(out, n) = fac->solve(r);
        };
    }
    return P;
}

// ---------------------------------------------------------------- LLL

LLLBasis lowest_eigenspace(const MagneticCell& cell, double tol, std::uint64_t seed) {
    PROperator P(cell);
    auto pencil = P.pencil();
    const int N = cell.N, k = N + 2;
    const int n = static_cast<int>(pencil.n);
    int block = std::min(2 * N + 4, n);
    auto er = lobpcg(pencil, k, block, tol, 3000, seed);
    LLLBasis B;
    B.cell = cell;
    B.iterations = er.iterations;
    for (int i = 0; i < k; ++i) {
        B.eigenvalues.push_back(er.values[i]);
        B.residuals.push_back(er.residuals[i]);
    }
    B.mu1 = B.eigenvalues[0];
    // cluster: eigenvalues closer to mu1 than to the next Landau level
    int mult = 0;
    for (double v : B.eigenvalues)
        if (v < B.mu1 + 1.0) ++mult;
    B.multiplicity = mult;
    B.mu2 = mult < k ? B.eigenvalues[mult] : B.eigenvalues.back();
    // a genuine cluster is narrow compared with the gap above it
    const bool narrow = mult < k && B.eigenvalues[mult - 1] - B.mu1 <= 0.25 * (B.mu2 - B.mu1);
    if (mult != N || !narrow) {
        std::string spec;
        for (double v : B.eigenvalues) spec += fmt::format(" {:.6f}", v);
        throw SolverError(fmt::format("no isolated {}-fold lowest cluster (found {} below mu1 + 1); spectrum:{}", N, mult, spec));
    }
    if (!er.converged)
        throw SolverError(fmt::format("eigensolver did not reach tolerance {} in {} iterations", tol, er.iterations));
    for (int j = 0; j < k; ++j) {
        std::vector<cplx> v(n);
        for (int i = 0; i < n; ++i) v[i] = er.vectors(i, j);
        (j < N ? B.vectors : B.higher).push_back(std::move(v));
    }
    double ge = 0;
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b) ge = std::max(ge, std::abs(P.inner(B.vectors[a], B.vectors[b]) - (a == b ? 1.0 : 0.0)));
    B.gram_error = ge;
    return B;
}

double discrete_landau_level(double h) {
    if (!(h > 0 && h <= 0.5)) throw ConfigError("spacing must lie in (0, 0.5]");
    const int nc = std::max(4, static_cast<int>(std::lround(std::sqrt(2 * pi) / h)));
    return lowest_eigenspace(MagneticCell::make(1, nc), 1e-10, 1).mu1;
}

double holomorphic_residual(const MagneticCell& cell, const std::vector<cplx>& u) {
    const Grid& g = *cell.grid;
    const auto& c = *g.cart;
    auto U = cell.phases();
    std::vector<int> hor(g.num_nodes(), -1), ver(g.num_nodes(), -1);
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
        Vec2 d = g.path[e].p1 - g.path[e].p0;
        (std::abs(d.x) > std::abs(d.y) ? hor : ver)[g.ea[e]] = static_cast<int>(e);
    }
    auto id = [&](int i, int j) { return c.index(((i % c.nx) + c.nx) % c.nx, ((j % c.ny) + c.ny) % c.ny); };
    double rn = 0, un = 0;
    for (int j = 0; j < c.ny; ++j)
        for (int i = 0; i < c.nx; ++i) {
            int a = id(i, j);
            // values of the neighbours transported to node a
            cplx xp1 = U[hor[a]] * u[id(i + 1, j)];
            cplx xp2 = U[hor[a]] * U[hor[id(i + 1, j)]] * u[id(i + 2, j)];
            cplx xm1 = std::conj(U[hor[id(i - 1, j)]]) * u[id(i - 1, j)];
            cplx xm2 = std::conj(U[hor[id(i - 1, j)]] * U[hor[id(i - 2, j)]]) * u[id(i - 2, j)];
            cplx yp1 = U[ver[a]] * u[id(i, j + 1)];
            cplx yp2 = U[ver[a]] * U[ver[id(i, j + 1)]] * u[id(i, j + 2)];
            cplx ym1 = std::conj(U[ver[id(i, j - 1)]]) * u[id(i, j - 1)];
            cplx ym2 = std::conj(U[ver[id(i, j - 1)]] * U[ver[id(i, j - 2)]]) * u[id(i, j - 2)];
            cplx d1 = (-xp2 + 8.0 * xp1 - 8.0 * xm1 + xm2) / (12 * c.hx);
            cplx d2 = (-yp2 + 8.0 * yp1 - 8.0 * ym1 + ym2) / (12 * c.hy);
            cplx r = d1 + cplx(0, 1) * d2;
            rn += g.weight[a] * std::norm(r);
            un += g.weight[a] * std::norm(u[a]);
        }
    return std::sqrt(rn / un);
}

// ---------------------------------------------------------------- quartic form

QuarticTensor quartic_tensor(const LLLBasis& basis) {
    const int N = static_cast<int>(basis.vectors.size());
    const Grid& g = *basis.cell.grid;
    const int n = static_cast<int>(g.num_nodes());
    Eigen::MatrixXcd Pu(n, N * N), WPu(n, N * N);
    for (int l = 0; l < N; ++l)
        for (int m = 0; m < N; ++m)
            for (int i = 0; i < n; ++i) {
                Pu(i, l * N + m) = basis.vectors[l][i] * basis.vectors[m][i];
                WPu(i, l * N + m) = g.weight[i] * Pu(i, l * N + m);
            }
    QuarticTensor T;
    T.N = N;
    T.T = Pu.adjoint() * WPu;
    return T;
}

double QuarticTensor::A(const std::vector<cplx>& c) const {
    std::vector<cplx> g;
    return A_grad(c, g);
}

double QuarticTensor::A_grad(const std::vector<cplx>& c, std::vector<cplx>& g) const {
    Eigen::VectorXcd P(N * N);
    for (int l = 0; l < N; ++l)
        for (int m = 0; m < N; ++m) P[l * N + m] = c[l] * c[m];
    Eigen::VectorXcd S = T * P;
    g.assign(N, 0.0);
    for (int j = 0; j < N; ++j)
        for (int k = 0; k < N; ++k) g[j] += 4.0 * std::conj(c[k]) * S[j * N + k];
    return P.dot(S).real();  // Eigen dot conjugates the first argument
}

namespace {

// F_R(c) = (A/2 - |c|^2) / |K|
class AbrikosovObjective : public Objective {
public:
    AbrikosovObjective(const QuarticTensor& T, double area) : T_(T), area_(area) {}
    std::size_t size() const override { return 2 * T_.N; }
    double evaluate(std::span<const double> x, std::span<double> g) const override {
        auto c = to_complex(x, T_.N);
        std::vector<cplx> ga;
        double A = T_.A_grad(c, ga), B = 0;
        for (int j = 0; j < T_.N; ++j) {
            B += std::norm(c[j]);
            cplx gj = (0.5 * ga[j] - 2.0 * c[j]) / area_;
            g[2 * j] = gj.real();
            g[2 * j + 1] = gj.imag();
        }
        return (0.5 * A - B) / area_;
    }

private:
    const QuarticTensor& T_;
    double area_;
};

// beta(c) = |K| A / B^2, scale invariant
class RayObjective : public Objective {
public:
    RayObjective(const QuarticTensor& T, double area) : T_(T), area_(area) {}
    std::size_t size() const override { return 2 * T_.N; }
    double evaluate(std::span<const double> x, std::span<double> g) const override {
        auto c = to_complex(x, T_.N);
        std::vector<cplx> ga;
        double A = T_.A_grad(c, ga), B = 0;
        for (const auto& v : c) B += std::norm(v);
        for (int j = 0; j < T_.N; ++j) {
            cplx gj = area_ * (ga[j] / (B * B) - 4.0 * A * c[j] / (B * B * B));
            g[2 * j] = gj.real();
            g[2 * j + 1] = gj.imag();
        }
        return area_ * A / (B * B);
    }

private:
    const QuarticTensor& T_;
    double area_;
};

} // namespace

AbrikosovResult minimize_abrikosov(const LLLBasis& basis, int starts, std::uint64_t seed) {
    const int N = static_cast<int>(basis.vectors.size());
    const double area = basis.cell.area();
    auto T = quartic_tensor(basis);
    AbrikosovResult r;
    r.N = N;
    r.Rx = basis.cell.Rx;
    r.Ry = basis.cell.Ry;
    r.area = area;
    r.mu1 = basis.mu1;
    r.mu2 = basis.mu2;

    SolverConfig cfg;
    cfg.rel_tol = 1e-12;
    cfg.abs_tol = 1e-15;
    cfg.restarts = N == 1 ? 1 : starts;
    cfg.restart_every = 2 * N + 10;

    // (i) descent on coefficients
    AbrikosovObjective fobj(T, area);
    cfg.seed = seed;
    auto desc = minimize_restarts(
        fobj,
        [&](int, std::mt19937_64& rng) {
            std::normal_distribution<double> nd;
            std::vector<cplx> c(N);
            for (auto& v : c) v = {nd(rng), nd(rng)};
            double A = T.A(c), B = 0;
            for (auto& v : c) B += std::norm(v);
            double t = std::sqrt(B / A);
            for (auto& v : c) v *= t;
            return to_real(c);
        },
        cfg);
    // (ii) ray reduction: minimise beta on the sphere, independent starts
    RayObjective bobj(T, area);
    cfg.seed = seed ^ 0xABCDEF12345ull;
    auto ray = minimize_restarts(
        bobj,
        [&](int, std::mt19937_64& rng) {
            std::normal_distribution<double> nd;
            std::vector<double> x(2 * N);
            double s = 0;
            for (auto& v : x) {
                v = nd(rng);
                s += v * v;
            }
            for (auto& v : x) v /= std::sqrt(s);
            return x;
        },
        cfg);
    r.cR_descent = desc.report.value;
    r.beta = ray.report.value;
    r.cR_ray = -1.0 / (2 * r.beta);
    r.agree = std::abs(r.cR_descent - r.cR_ray) <= 1e-6;

    std::vector<cplx> c;
    if (r.cR_descent <= r.cR_ray) {
        r.cR = r.cR_descent;
        c = to_complex(desc.x, N);
    } else {
        r.cR = r.cR_ray;
        c = to_complex(ray.x, N);
    }
    // optimal amplitude along the ray: t^2 = B / A
    double A = T.A(c), B = 0;
    for (auto& v : c) B += std::norm(v);
    double t = std::sqrt(B / A);
    for (auto& v : c) v *= t;
    r.coeffs = c;
    const Grid& g = *basis.cell.grid;
    r.profile.assign(g.num_nodes(), 0.0);
    for (int j = 0; j < N; ++j)
        for (std::size_t i = 0; i < g.num_nodes(); ++i) r.profile[i] += c[j] * basis.vectors[j][i];
    double s2 = 0, s4 = 0;
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        double a2 = std::norm(r.profile[i]);
        s2 += g.weight[i] * a2;
        s4 += g.weight[i] * a2 * a2;
    }
    r.mean_sq = s2 / area;
    r.mean_quartic = s4 / area;
    r.moment = r.mean_sq + r.mean_quartic;
    r.in_bounds = r.cR >= -0.5 && r.cR <= 0.0;
    return r;
}

E2Estimate estimate_E2_lll(const std::vector<int>& Ns, int res, std::uint64_t seed) {
    if (Ns.empty()) throw ConfigError("estimate_E2_lll needs at least one N");
    for (std::size_t k = 1; k < Ns.size(); ++k)
        if (Ns[k] <= Ns[k - 1]) throw ConfigError("N list must be increasing");
    E2Estimate est;
    for (int N : Ns) {
        auto cell = MagneticCell::make(N, res);
        auto basis = lowest_eigenspace(cell, 1e-10, seed);
        est.rows.push_back(minimize_abrikosov(basis, 12, seed));
    }
    est.E2 = -est.rows.back().cR;
    if (est.rows.size() >= 2) {
        double prev = -est.rows[est.rows.size() - 2].cR;
        est.drift = std::abs(est.E2 - prev) / est.E2;
        est.warning = est.drift > 0.05;
    }
    return est;
}

// ---------------------------------------------------------------- thermodynamic estimator

ThermoResult estimate_E2_thermo(double b, double R, double h, const SolverConfig& cfg) {
    if (!(b >= 0.8 && b <= 0.99)) throw ConfigError(fmt::format("field ratio b = {} outside [0.8, 0.99]", b));
    if (!(R >= 10)) throw ConfigError(fmt::format("box side R = {} below 10", R));
    if (!(h > 0 && h <= 0.5)) throw ConfigError("thermodynamic spacing must lie in (0, 0.5]");
    const int nc = std::max(4, static_cast<int>(std::lround(std::sqrt(2 * pi) / h)));
    const double hh = std::sqrt(2 * pi) / nc;
    const int n = static_cast<int>(std::lround(R / hh)) + 1;
    ThermoResult t;
    t.b = b;
    t.h = hh;
    t.R = (n - 1) * hh;
    t.lambda_h = discrete_landau_level(hh);

    Resolution res{n, n};
    res.dirichlet = true;
    auto grid = build_grid(DomainSpec::rectangle(t.R, t.R), res);
    MagneticObjective obj(grid, GaugeField::symmetric(grid).link_phases(1.0), b, -1.0, 0.5);
    const double amp = std::sqrt(1 - b);
    auto init = [&](int, std::mt19937_64& rng) {
        std::normal_distribution<double> nd;
        std::vector<double> x(obj.size());
        for (std::size_t i = 0; i < grid->num_nodes(); ++i)
            if (!grid->pinned[i]) {
                x[2 * i] = amp * nd(rng);
                x[2 * i + 1] = amp * nd(rng);
            }
        return x;
    };
    auto res_min = minimize_restarts(obj, init, cfg);
    t.report = res_min.report;
    if (res_min.report.value > 1e-12) throw SolverError("thermodynamic minimum is positive (worse than u = 0)");
    t.g = res_min.report.value / (t.R * t.R);
    t.ratio = std::abs(t.g) / ((1 - b) * (1 - b));
    t.ratio_spectral = std::abs(t.g) / ((1 - b * t.lambda_h) * (1 - b * t.lambda_h));
    t.bound = 0.5 * (1 - b) * (1 - b);
    return t;
}

ThermoExtrapolation estimate_E2_thermo_extrapolated(double b, double R, double h, const SolverConfig& cfg) {
    ThermoExtrapolation x;
    x.small = estimate_E2_thermo(b, R, h, cfg);
    x.large = estimate_E2_thermo(b, 1.5 * R, h, cfg);
    double R1 = x.small.R, R2 = x.large.R;
    x.g_inf = (R2 * x.large.g - R1 * x.small.g) / (R2 - R1);
    x.ratio = std::abs(x.g_inf) / ((1 - b) * (1 - b));
    double gap = 1 - b * x.small.lambda_h;
    x.ratio_spectral = std::abs(x.g_inf) / (gap * gap);
    return x;
}

ThermoContinuum estimate_E2_thermo_continuum(double b, double R, double h_coarse, double h_fine,
                                             const SolverConfig& cfg) {
    if (!(h_fine < h_coarse)) throw ConfigError("the fine spacing must be smaller than the coarse one");
    ThermoContinuum t;
    t.coarse = estimate_E2_thermo_extrapolated(b, R, h_coarse, cfg);
    t.fine = estimate_E2_thermo_extrapolated(b, R, h_fine, cfg);
    // spacings after snapping to the flux cell
    const double a = t.coarse.small.h * t.coarse.small.h, c = t.fine.small.h * t.fine.small.h;
    if (!(c < a)) throw ConfigError("the two spacings coincide after snapping to the flux cell");
    t.g0 = (a * t.fine.g_inf - c * t.coarse.g_inf) / (a - c);
    t.ratio = std::abs(t.g0) / ((1 - b) * (1 - b));
    return t;
}

// ---------------------------------------------------------------- gap filter

GapFilterReport gap_filter_check(const LLLBasis& basis, const std::vector<double>& gammas, int trials,
                                 std::uint64_t seed) {
    PROperator P(basis.cell);
    const Grid& g = *basis.cell.grid;
    const std::size_t n = g.num_nodes();
    const int N = static_cast<int>(basis.vectors.size());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    auto project = [&](const std::vector<cplx>& f) {
        std::vector<cplx> p(n, 0.0);
        for (const auto& u : basis.vectors) {
            cplx a = P.inner(u, f);
            for (std::size_t i = 0; i < n; ++i) p[i] += a * u[i];
        }
        return p;
    };
    auto norm = [&](const std::vector<cplx>& f, int q) {
        double s = 0;
        for (std::size_t i = 0; i < n; ++i) s += g.weight[i] * std::pow(std::abs(f[i]), q);
        return std::pow(s, 1.0 / q);
    };
    GapFilterReport rep;
    rep.gammas = gammas;
    rep.bound_holds = true;
    for (double gamma : gammas) {
        rng.seed(seed);  // same trial directions for every gamma
        double worst = 0, worst4 = 0, rq_err = 0;
        for (int t = 0; t < trials; ++t) {
            std::vector<cplx> f1(n, 0.0), h(n, 0.0);
            for (int j = 0; j < N; ++j) {
                cplx a{nd(rng), nd(rng)};
                for (std::size_t i = 0; i < n; ++i) f1[i] += a * basis.vectors[j][i];
            }
            // higher-level direction: computed upper eigenvectors plus a little noise, off the LLL
            for (const auto& v : basis.higher) {
                cplx a{nd(rng), nd(rng)};
                for (std::size_t i = 0; i < n; ++i) h[i] += a * v[i];
            }
            for (std::size_t i = 0; i < n; ++i) h[i] += 0.05 * cplx(nd(rng), nd(rng));
            auto ph = project(h);
            for (std::size_t i = 0; i < n; ++i) h[i] -= ph[i];
            double n1 = norm(f1, 2), nh = norm(h, 2);
            for (auto& v : f1) v /= n1;
            for (auto& v : h) v /= nh;
            double q1 = P.rayleigh(f1), qh = P.rayleigh(h);
            double b = std::sqrt((1 + gamma - q1) / (qh - 1 - gamma));
            std::vector<cplx> f(n);
            for (std::size_t i = 0; i < n; ++i) f[i] = f1[i] + b * h[i];
            rq_err = std::max(rq_err, std::abs(P.rayleigh(f) - (1 + gamma)));
            auto pf = project(f);
            std::vector<cplx> r(n);
            for (std::size_t i = 0; i < n; ++i) r[i] = f[i] - pf[i];
            worst = std::max(worst, norm(r, 2) / norm(f, 2));
            worst4 = std::max(worst4, norm(r, 4) / norm(f, 4));
        }
        rep.l2_ratio.push_back(worst);
        rep.l2_bound.push_back(std::sqrt(2 * gamma));
        rep.l4_ratio.push_back(worst4);
        rep.rayleigh_error.push_back(rq_err);
        rep.bound_holds = rep.bound_holds && worst <= std::sqrt(2 * gamma);
    }
    // exact LLL member
    std::vector<cplx> f(n, 0.0);
    for (int j = 0; j < N; ++j)
        for (std::size_t i = 0; i < n; ++i) f[i] += cplx(1.0 + j, -0.5 * j) * basis.vectors[j][i];
    auto pf = project(f);
    std::vector<cplx> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = f[i] - pf[i];
    rep.lll_residual = norm(r, 2) / norm(f, 2);
    if (gammas.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double m = static_cast<double>(gammas.size());
        for (std::size_t k = 0; k < gammas.size(); ++k) {
            double x = std::log(gammas[k]), y = std::log(rep.l2_ratio[k]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        rep.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    }
    return rep;
}

// ---------------------------------------------------------------- trial state

ComplexField bulk_trial(GridPtr grid, const GLParams& p, const AbrikosovResult& f, const MagneticCell& cell, double rho) {
    p.validate();
    if (!(rho > 0)) throw ConfigError("cut-off exponent rho must be positive");
    const double scale = std::sqrt(p.kappa * p.H);  // x / eps
    const double R = std::sqrt(cell.area());
    double hmax = 0;
    for (const auto& e : grid->path) hmax = std::max(hmax, e.length());
    if (hmax > R / scale / 8)
        throw ConfigError(fmt::format("tiling period {:.4g} is finer than 8 grid spacings ({:.4g})", R / scale, hmax));
    ComplexField psi(grid);
    const double amp = std::pow(p.kappa, -0.25), Rr = std::pow(R, rho);
    for (std::size_t i = 0; i < grid->num_nodes(); ++i) {
        double hv = smoothstep(0.5 * Rr * grid->dist[i]);
        if (hv == 0.0) continue;
        psi.values[i] = amp * hv * cell.extend(f.profile, grid->pos[i] * scale);
    }
    return psi;
}

} // namespace hc2
