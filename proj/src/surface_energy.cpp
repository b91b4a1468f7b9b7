#include "hc2/surface_energy.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "hc2/bulk_energy.hpp"
#include "hc2/functional.hpp"

namespace hc2 {

namespace {

// boundary-layer wavenumber of the half-plane problem, used only for the initial guess
constexpr double xi0 = 0.77;

GaugeField strip_potential(GridPtr g, bool symmetric) {
    if (symmetric) return GaugeField::symmetric(g);
    return GaugeField::from_function(g, [](Vec2 x) { return Vec2{-x.y, 0.0}; });
}

} // namespace

HalfStripProblem HalfStripProblem::with_spacing(double ell, double T, double hx, double hy) {
    if (!(hx > 0 && hy > 0)) throw ConfigError("half-strip spacings must be positive");
    HalfStripProblem p;
    p.ell = ell;
    p.T = T;
    p.res = {static_cast<int>(std::lround(2 * ell / hx)) + 1, static_cast<int>(std::lround(T / hy)) + 1};
    return p;
}

void HalfStripProblem::validate() const {
    if (!(ell >= 1)) throw ConfigError(fmt::format("half-strip ell = {} must be >= 1", ell));
    if (!(T >= 6)) throw ConfigError(fmt::format("half-strip height T = {} must be >= 6", T));
    if (res.n1 < 9 || res.n2 < 9) throw ConfigError("half-strip resolution too small");
}

std::vector<double> halfstrip_init(const Grid& g, std::mt19937_64& rng, double noise) {
    std::normal_distribution<double> nd;
    const double ell = g.domain.a;
    std::vector<double> x(2 * g.num_nodes(), 0.0);
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        if (g.pinned[i]) continue;
        Vec2 p = g.pos[i];
        double env = 0.8 * std::exp(-0.5 * p.y * p.y) * std::sin(0.5 * pi * (p.x + ell) / ell);
        cplx v = env * std::polar(1.0, -xi0 * p.x) + noise * env * cplx(nd(rng), nd(rng));
        x[2 * i] = v.real();
        x[2 * i + 1] = v.imag();
    }
    return x;
}

SurfaceResult solve_halfstrip(const HalfStripProblem& prob, const SolverConfig& cfg) {
    prob.validate();
    auto g = build_grid(DomainSpec::half_strip(prob.ell, prob.T), prob.res);
    auto A = strip_potential(g, prob.symmetric_gauge);
    const double kin = prob.calibrate ? 1.0 / discrete_landau_level(std::sqrt(prob.hx() * prob.hy())) : 1.0;
    MagneticObjective obj(g, A.link_phases(1.0), kin, -1.0, 0.5);
    auto res = minimize_restarts(obj, [&](int, std::mt19937_64& rng) { return halfstrip_init(*g, rng); }, cfg);

    SurfaceResult r;
    r.ell = prob.ell;
    r.T = prob.T;
    r.report = res.report;
    r.kinetic_scale = kin;
    r.d = std::min(res.report.value, 0.0);
    r.e1 = -r.d / (2 * prob.ell);
    r.profile = ComplexField(g, to_complex(res.x, g->num_nodes()));

    // nodal kinetic density: half of every incident edge term
    const auto& U = obj.phases();
    const auto& v = r.profile.values;
    std::vector<double> kd(g->num_nodes(), 0.0);
    for (std::size_t e = 0; e < g->num_edges(); ++e) {
        int a = g->ea[e], b = g->eb[e];
        double k = 0.5 * kin * g->stiffness[e] * std::norm(U[e] * v[b] - v[a]);
        kd[a] += k;
        kd[b] += k;
    }
    double l2 = 0;
    for (std::size_t i = 0; i < g->num_nodes(); ++i) {
        double tau = g->pos[i].y, a2 = std::norm(v[i]);
        l2 += g->weight[i] * a2;
        if (tau >= 3) {
            double w = tau * tau / std::log(tau);
            r.tail += w * (kd[i] + g->weight[i] * (a2 + tau * tau * a2 * a2));
        }
        if (tau >= prob.T - 1) r.tail_mass += g->weight[i] * a2;
    }
    r.l2 = std::sqrt(l2);
    r.rerun_advised = r.tail_mass > 1e-8;
    return r;
}

E1Fit fit_E1(const std::vector<double>& ells, const std::vector<double>& d) {
    if (ells.size() != d.size() || ells.size() < 2) throw ConfigError("E1 fit needs at least two (ell, d) pairs");
    const double m = static_cast<double>(ells.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < ells.size(); ++k) {
        double x = 1 / ells[k], y = -d[k] / (2 * ells[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double det = m * sxx - sx * sx;
    if (!(std::abs(det) > 0)) throw ConfigError("E1 fit needs distinct ell values");
    E1Fit f;
    f.M = (m * sxy - sx * sy) / det;
    f.E1 = (sy - f.M * sx) / m;
    for (std::size_t k = 0; k < ells.size(); ++k) f.residuals.push_back(-d[k] / (2 * ells[k]) - f.E1 - f.M / ells[k]);
    return f;
}

E1Estimate estimate_E1(const std::vector<double>& ells, double T, double hx, double hy, const SolverConfig& cfg,
                       double tol) {
    if (ells.size() < 2) throw ConfigError("estimate_E1 needs at least two ell values");
    auto sorted = ells;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw ConfigError("ell values must be distinct");
    if (sorted.back() < 2 * sorted.front()) throw ConfigError("largest ell must be at least twice the smallest");
    E1Estimate est;
    std::vector<double> d;
    for (double ell : sorted) {
        est.rows.push_back(solve_halfstrip(HalfStripProblem::with_spacing(ell, T, hx, hy), cfg));
        d.push_back(est.rows.back().d);
    }
    for (std::size_t k = 0; k < d.size(); ++k) {
        if (d[k] > tol) throw SolverError(fmt::format("d({}) = {} is positive", sorted[k], d[k]));
        if (k > 0 && d[k] > d[k - 1] + tol * (1 + std::abs(d[k - 1])))
            throw SolverError(fmt::format("d increases from {} (ell = {}) to {} (ell = {})", d[k - 1], sorted[k - 1], d[k],
                                          sorted[k]));
    }
    est.fit = fit_E1(sorted, d);
    for (double r : est.fit.residuals) est.band = std::max(est.band, std::abs(r));
    return est;
}

double trial_ell(const DomainSpec& domain, const GLParams& p) { return domain.perimeter() / (4 * p.eps()); }

ComplexField boundary_trial(GridPtr grid, const GLParams& p, double rho, const SurfaceResult& profile) {
    p.validate();
    if (grid->domain.kind != DomainKind::Disc) throw ConfigError("boundary trial needs a smooth (disc) domain");
    if (!(rho > 0 && rho < 1)) throw ConfigError("cut-off exponent rho must lie in (0, 1)");
    auto chart = boundary_chart(grid->domain);
    const double eps = p.eps(), depth = std::pow(eps, rho);
    if (depth > chart.t0)
        throw ConfigError(fmt::format("cut-off depth eps^rho = {:.4g} exceeds the collar depth {:.4g}", depth, chart.t0));
    const double ell = trial_ell(grid->domain, p);
    if (std::abs(profile.ell - ell) > 1e-9 * ell)
        throw ConfigError(fmt::format("profile solved at ell = {}, trial needs ell = {}", profile.ell, ell));
    const Grid& hs = *profile.profile.grid;
    const double r = grid->domain.a, half = 0.25 * chart.length, kH = p.coupling();
    ComplexField psi(grid);
    for (std::size_t i = 0; i < grid->num_nodes(); ++i) {
        auto [s, t] = chart.inverse(grid->pos[i]);
        if (t >= depth || t / eps >= profile.T) continue;
        // patch centred at s = 0 covers |s| <= |dOmega| / 4, the other one the rest
        double sl = s;
        if (sl > half) sl -= 2 * half;
        else if (sl < -half) sl += 2 * half;
        double sigma = std::clamp(sl / eps, -profile.ell, profile.ell), tau = t / eps;
        double chi = 1.0 - smoothstep(2 * t / depth - 1);
        psi.values[i] = chi * std::polar(1.0, 0.5 * kH * r * sl) * hs.interpolate(profile.profile.values, {sigma, tau});
    }
    return psi;
}

} // namespace hc2
