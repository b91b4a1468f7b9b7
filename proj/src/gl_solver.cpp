#include "hc2/gl_solver.hpp"

#include <cmath>
#include <random>

namespace hc2 {

namespace {

// |phi(0, tau)| e^{i n theta} cut off like the boundary trial; n from the phase gradient of
// the mid-strip profile at its maximum
ComplexField seamless_trial(GridPtr grid, const GLParams& p, double rho, const SurfaceResult& prof, int& n) {
    const Grid& hs = *prof.profile.grid;
    const auto& c = *hs.cart;
    const auto& v = prof.profile.values;
    const int i0 = c.nx / 2;
    int jm = 0;
    for (int j = 0; j < c.ny; ++j)
        if (std::abs(v[c.index(i0, j)]) > std::abs(v[c.index(i0, jm)])) jm = j;
    const double xi = std::arg(v[c.index(i0 + 1, jm)] / v[c.index(i0 - 1, jm)]) / (2 * c.hx);
    const double r = grid->domain.a, eps = p.eps();
    n = static_cast<int>(std::lround(0.5 * p.coupling() * r * r + xi * r / eps));
    const double depth = std::pow(eps, rho);
    ComplexField psi(grid);
    for (std::size_t i = 0; i < grid->num_nodes(); ++i) {
        Vec2 x = grid->pos[i];
        double t = r - x.norm();
        if (t >= depth || t / eps >= prof.T) continue;
        double f = std::abs(hs.interpolate(v, {0.0, t / eps}));
        double chi = 1.0 - smoothstep(2 * t / depth - 1);
        psi.values[i] = chi * f * std::polar(1.0, n * std::atan2(x.y, x.x));
    }
    return psi;
}

} // namespace

TrialState make_trial_state(GridPtr grid, const GLParams& p, const GLInitOptions& opts) {
    p.validate();
    TrialState t;
    t.psi = ComplexField(grid);
    if (!opts.use_trial || grid->domain.kind != DomainKind::Disc) return t;

    auto chart = boundary_chart(grid->domain);
    const double eps = p.eps();
    t.rho_used = std::max(opts.rho, std::log(chart.t0) / std::log(eps) + 1e-9);
    if (t.rho_used < 1) {
        // the seamless variant only reads the mid-strip column, which a short strip already resolves
        const double ell = opts.seamless ? std::min(trial_ell(grid->domain, p), 8.0) : trial_ell(grid->domain, p);
        auto hp = HalfStripProblem::with_spacing(std::max(ell, 1.0), opts.strip_T, opts.strip_h, opts.strip_h);
        hp.ell = ell;
        if (ell >= 1) {
            SolverConfig sc;
            sc.rel_tol = 1e-6;
            sc.restarts = 1;
            t.profile = solve_halfstrip(hp, sc);
            t.psi = opts.seamless ? seamless_trial(grid, p, t.rho_used, *t.profile, t.winding)
                                  : boundary_trial(grid, p, t.rho_used, *t.profile);
            t.has_boundary = true;
        }
    }
    const double mu = p.mu();
    if (mu > 0) {
        auto basis = lowest_eigenspace(MagneticCell::make(opts.bulk_N, 32));
        auto ab = minimize_abrikosov(basis);
        try {
            auto bulk = bulk_trial(grid, p, ab, basis.cell, opts.bulk_rho);
            const double s = std::sqrt(mu);
            for (std::size_t i = 0; i < grid->num_nodes(); ++i) t.psi.values[i] += s * bulk.values[i];
            t.has_bulk = true;
            t.abrikosov = std::move(ab);
        } catch (const ConfigError&) {
            // grid too coarse for the tiling: boundary part only
        }
    }
    return t;
}

std::vector<double> default_init(const GLObjective& obj, const TrialState& trial, std::uint64_t seed,
                                 const GLInitOptions& opts) {
    const auto& g = trial.psi.grid;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    ComplexField psi(g);
    const double amp = opts.use_trial ? opts.noise : 0.3;
    for (std::size_t i = 0; i < g->num_nodes(); ++i) {
        cplx v = trial.psi.values[i] + amp * cplx(nd(rng), nd(rng)) * std::sqrt(0.5);
        double a = std::abs(v);
        psi.values[i] = a > 1 ? v / a : v;
    }
    return obj.pack(psi, GaugeField::canonical(g));
}

GLSolution solve_gl(GridPtr grid, const GLParams& p, const SolverConfig& cfg, const TrialState& trial,
                    const GLInitOptions& opts) {
    check_same_grid(grid, trial.psi.grid);
    GLObjective obj(grid, p);
    auto res = minimize_restarts(
        obj, [&](int, std::mt19937_64& rng) { return default_init(obj, trial, rng(), opts); }, cfg);
    GLSolution s;
    s.psi = obj.unpack_psi(res.x);
    s.A = obj.unpack_gauge(res.x);
    // the normal state (0, F) is always admissible; keep it when nothing beats it
    if (!(res.report.value < 0.0)) {
        s.psi = ComplexField(grid);
        s.A = GaugeField::canonical(grid);
        res.report.value = 0.0;
    }
    s.report = res.report;
    s.residual = residual_report(s.psi, s.A, p);
    s.trial_energy = energy(trial.psi, GaugeField::canonical(grid), p);
    return s;
}

GLSolution solve_gl(GridPtr grid, const GLParams& p, const SolverConfig& cfg, const GLInitOptions& opts) {
    return solve_gl(grid, p, cfg, make_trial_state(grid, p, opts), opts);
}

GridPtr experiment_disc(double kappa, double h) { return build_disc_for(1.0, h, 1.0 / kappa, 8); }

} // namespace hc2
