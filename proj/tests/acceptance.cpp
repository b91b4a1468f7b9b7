// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <fmt/format.h>
#include <functional>
#include <iostream>
#include <random>

#include "hc2/bulk_energy.hpp"
#include "hc2/gl_solver.hpp"
#include "hc2/harness.hpp"
#include "hc2/surface_energy.hpp"

using namespace hc2;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
        }
    }
    void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

// values shared between criteria
struct Shared {
    double E1 = 0.0;     // surface constant from criterion 4
    double E2 = 0.0;     // N = 9 Abrikosov value from criterion 3
    std::vector<RunRecord> sweep25;   // kappa = 25, mu in {0, -1, 0.5, 1, 2, 4}
    std::vector<RunRecord> sweepk;    // kappa in {15, 35}, mu = 1
    std::vector<RunRecord> extra;     // kappa = H = 20
};
Shared S;

double l2(const Grid& g, const std::vector<cplx>& v) {
    double s = 0;
    for (std::size_t i = 0; i < v.size(); ++i) s += g.weight[i] * std::norm(v[i]);
    return std::sqrt(s);
}

const RunRecord* find(const std::vector<RunRecord>& rs, double kappa, double mu) {
    for (const auto& r : rs)
        if (r.kappa == kappa && r.mu == mu) return &r;
    return nullptr;
}

ExperimentPlan plan(std::vector<double> kappas, std::vector<double> mus) {
    ExperimentPlan p;
    p.domain = DomainSpec::disc(1.0);
    p.kappa_list = std::move(kappas);
    p.mu_list = std::move(mus);
    p.tol = 1e-6;
    p.restarts = 1;
    p.seed = 1;
    p.E1 = S.E1;
    p.E2 = S.E2;
    p.e1_id = p.e2_id = "acceptance";
    p.validate();
    return p;
}

std::vector<RunRecord> sweep(const ExperimentPlan& p) {
    return run_expansion_experiment(p, 1, [](const RunRecord& r) {
        std::cerr << fmt::format("    kappa = {} mu = {}: E = {:.6f} (pred {:.4f}), {} in {} iterations, {:.0f} s\n", r.kappa,
                                 r.mu, r.energy, -r.predicted, r.status, r.iterations, r.seconds);
    });
}

// ---------------------------------------------------------------- 1

Outcome exactness() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;

    // gauge invariance
    double worst_gauge = 0;
    for (auto spec : {DomainSpec::disc(1.0), DomainSpec::rectangle(1.5, 1.0)}) {
        auto g = build_grid(spec, spec.kind == DomainKind::Disc ? Resolution{16, 32} : Resolution{21, 15});
        ComplexField psi(g);
        auto A = GaugeField::canonical(g);
        for (auto& v : psi.values) v = 0.6 * cplx(nd(rng), nd(rng));
        for (auto& l : A.links) l += 0.05 * nd(rng);
        std::vector<double> chi(g->num_nodes());
        for (std::size_t i = 0; i < chi.size(); ++i) chi[i] = nd(rng) + std::sin(3 * g->pos[i].x);
        GLParams p{6.0, 4.0};
        auto [psi2, A2] = gauge_transform(psi, A, chi, p.coupling());
        double e1 = energy(psi, A, p), e2 = energy(psi2, A2, p);
        worst_gauge = std::max(worst_gauge, std::abs(e1 - e2) / std::abs(e1));
    }
    o.require(worst_gauge <= 1e-12, "gauge invariance");
    o.note(fmt::format("gauge drift {:.1e}", worst_gauge));

    // gradient against central differences, 20 directions, 16 x 16 disc grid
    {
        auto g = build_grid(DomainSpec::disc(1.0), {16, 16});
        GLParams p{3.0, 2.0};
        GLObjective obj(g, p);
        ComplexField psi(g);
        auto A = GaugeField::canonical(g);
        for (auto& v : psi.values) v = 0.5 * cplx(nd(rng), nd(rng));
        for (auto& l : A.links) l += 0.1 * nd(rng);
        auto x = obj.pack(psi, A);
        std::vector<double> gr(x.size()), tmp(x.size()), xp(x.size()), xm(x.size()), d(x.size());
        obj.evaluate(x, gr);
        double worst = 0;
        for (int k = 0; k < 20; ++k) {
            double dn = 0;
            for (auto& v : d) v = nd(rng), dn += v * v;
            for (auto& v : d) v /= std::sqrt(dn);
            const double t = 1e-5;
            for (std::size_t i = 0; i < x.size(); ++i) xp[i] = x[i] + t * d[i], xm[i] = x[i] - t * d[i];
            double fd = (obj.evaluate(xp, tmp) - obj.evaluate(xm, tmp)) / (2 * t);
            double an = 0;
            for (std::size_t i = 0; i < x.size(); ++i) an += gr[i] * d[i];
            worst = std::max(worst, std::abs(fd - an) / std::abs(an));
        }
        o.require(worst < 1e-6, "gradient check");
        o.note(fmt::format("gradient error {:.1e}", worst));
    }

    // projector: idempotence and Hermiticity
    {
        auto g = build_grid(DomainSpec::rectangle(26, 26), {66, 66});
        ComplexField f(g), h(g);
        std::vector<std::pair<Vec2, cplx>> bumps;
        for (int k = 0; k < 4; ++k) bumps.push_back({{nd(rng), nd(rng)}, {nd(rng), nd(rng)}});
        for (std::size_t i = 0; i < g->num_nodes(); ++i) {
            Vec2 x = g->pos[i];
            for (auto& [a, c] : bumps) {
                Vec2 dd = x - a;
                f.values[i] += c * std::exp(-0.5 * dd.dot(dd));
                h.values[i] += std::conj(c) * x.x * std::exp(-0.7 * dd.dot(dd));
            }
        }
        auto Pf = lll_project(f), PPf = lll_project(Pf), Ph = lll_project(h);
        std::vector<cplx> diff(Pf.values.size());
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = PPf.values[i] - Pf.values[i];
        double idem = l2(*g, diff) / l2(*g, Pf.values);
        cplx a = 0, b = 0;
        for (std::size_t i = 0; i < g->num_nodes(); ++i) {
            a += g->weight[i] * std::conj(h.values[i]) * Pf.values[i];
            b += g->weight[i] * std::conj(Ph.values[i]) * f.values[i];
        }
        double herm = std::abs(a - b) / std::abs(a);
        double kern = 0;
        for (int k = 0; k < 50; ++k) {
            Vec2 x{3 * nd(rng), 3 * nd(rng)}, y{3 * nd(rng), 3 * nd(rng)};
            kern = std::max(kern, std::abs(lll_kernel(x, y) - std::conj(lll_kernel(y, x))));
        }
        o.require(idem <= 1e-8 && herm <= 1e-8 && kern <= 1e-15, "projector");
        o.note(fmt::format("projector idempotence {:.1e}, hermiticity {:.1e}", idem, herm));
    }

    // quadrature areas
    {
        double worst = 0;
        auto d1 = build_grid(DomainSpec::disc(1.0), {64, 128});
        worst = std::max(worst, std::abs(d1->total_weight() - pi));
        auto d2 = experiment_disc(25, 0.02);
        worst = std::max(worst, std::abs(d2->total_weight() - pi));
        auto r = build_grid(DomainSpec::rectangle(2.0, 1.0), {41, 21});
        worst = std::max(worst, std::abs(r->total_weight() - 2.0));
        double fa = 0;
        for (const auto& f : d1->faces) fa += f.area;
        worst = std::max(worst, std::abs(fa - pi));
        o.require(worst <= 1e-10, "quadrature area");
        o.note(fmt::format("area error {:.1e}", worst));
    }
    double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(sec < 60, "time budget");
    o.note(fmt::format("{:.1f} s", sec));
    return o;
}

// ---------------------------------------------------------------- 2

LLLBasis basis4;

Outcome spectral() {
    Outcome o;
    for (int N : {1, 2, 4}) {
        auto b = lowest_eigenspace(MagneticCell::make(N, 64));
        double hol = 0;
        for (const auto& v : b.vectors) hol = std::max(hol, holomorphic_residual(b.cell, v));
        o.require(std::abs(b.mu1 - 1) <= 0.01, fmt::format("N={} mu1", N));
        o.require(b.multiplicity == N, fmt::format("N={} multiplicity", N));
        o.require(b.mu2 >= 2.7, fmt::format("N={} mu2", N));
        o.require(hol <= 1e-3, fmt::format("N={} holomorphic residual", N));
        o.note(fmt::format("N={}: mu1 {:.5f}, mult {}, mu2 {:.4f}, hol {:.1e}", N, b.mu1, b.multiplicity, b.mu2, hol));
        if (N == 4) basis4 = std::move(b);
    }
    return o;
}

// ---------------------------------------------------------------- 3

Outcome abrikosov() {
    Outcome o;
    auto est = estimate_E2_lll({1, 4, 9}, 48);
    double lo = 1, hi = 0;
    for (const auto& r : est.rows) {
        o.require(std::abs(r.cR_descent - r.cR_ray) <= 1e-6, fmt::format("N={} estimators agree", r.N));
        o.require(-r.cR > 0 && -r.cR <= 0.5, fmt::format("N={} range", r.N));
        lo = std::min(lo, -r.cR);
        hi = std::max(hi, -r.cR);
        o.note(fmt::format("N={}: -c {:.5f} (|descent - ray| {:.1e})", r.N, -r.cR, std::abs(r.cR_descent - r.cR_ray)));
    }
    o.require((hi - lo) / lo <= 0.02, "N values within 2%");
    S.E2 = est.E2;

    SolverConfig cfg;
    cfg.rel_tol = 1e-7;
    cfg.restarts = 1;
    auto t = estimate_E2_thermo_continuum(0.95, 20, 0.25, 0.18, cfg);
    double rel = std::abs(t.ratio - S.E2) / S.E2;
    o.require(rel <= 0.10, "thermodynamic ratio within 10% of N=9");
    const double bound = 0.5 * 0.05 * 0.05;
    o.require(std::abs(t.g0) <= bound + 1e-6, "|g| <= (1-b)^2 / 2");
    // at finite spacing the exact bound involves the discrete Landau level
    for (const auto* x : {&t.coarse.small, &t.coarse.large, &t.fine.small, &t.fine.large}) {
        double gap = 1 - 0.95 * x->lambda_h;
        o.require(std::abs(x->g) <= 0.5 * gap * gap + 1e-6, fmt::format("discrete bound at h={:.3f}", x->h));
    }
    o.note(fmt::format("thermo |g(0.95)|/(0.05)^2 = {:.4f} ({:.1f}% from N=9; per spacing {:.4f} at h={:.3f}, {:.4f} at "
                       "h={:.3f}); |g| / bound = {:.3f}",
                       t.ratio, 100 * rel, t.coarse.ratio, t.coarse.small.h, t.fine.ratio, t.fine.small.h,
                       std::abs(t.g0) / bound));
    return o;
}

// ---------------------------------------------------------------- 4

Outcome surface() {
    Outcome o;
    const double h = 0.1, T = 16;
    SolverConfig cfg;
    cfg.rel_tol = 1e-7;
    cfg.restarts = 1;
    E1Estimate est;
    try {
        est = estimate_E1({4, 8, 16}, T, h, h, cfg);
    } catch (const SolverError& e) {
        o.require(false, std::string("estimate: ") + e.what());
        return o;
    }
    std::vector<double> ells, d;
    for (const auto& r : est.rows) {
        o.require(r.d <= 0 && r.e1 > 0, fmt::format("ell={} sign", r.ell));
        o.require(r.l2 > 0.1, fmt::format("ell={} nontrivial", r.ell));
        ells.push_back(r.ell);
        d.push_back(r.d);
    }
    auto a = fit_E1({ells[0], ells[1]}, {d[0], d[1]}), b = fit_E1({ells[1], ells[2]}, {d[1], d[2]});
    double rel = std::abs(a.E1 - b.E1) / b.E1;
    o.require(a.E1 > 0 && b.E1 > 0 && rel <= 0.05, "two-scale E1");
    o.note(fmt::format("d = {:.5f}, {:.5f}, {:.5f}; E1 from {{4,8}} {:.5f}, from {{8,16}} {:.5f}", d[0], d[1], d[2], a.E1,
                       b.E1));
    for (std::size_t k = 0; k < est.rows.size(); ++k) {
        auto r2 = solve_halfstrip(HalfStripProblem::with_spacing(ells[k], 2 * T, h, h), cfg);
        double change = std::abs(r2.d - d[k]) / std::abs(d[k]);
        o.require(change < 1e-6, fmt::format("ell={} T doubling", ells[k]));
        o.note(fmt::format("T doubling at ell={}: {:.1e}", ells[k], change));
    }
    S.E1 = est.fit.E1;
    o.note(fmt::format("E1 = {:.5f} (fit over all three)", S.E1));
    return o;
}

// ---------------------------------------------------------------- 5

Outcome gap_filter() {
    Outcome o;
    auto rep = gap_filter_check(basis4, {0.05, 0.1, 0.2}, 6);
    o.require(rep.bound_holds, "L2 bound");
    o.require(std::abs(rep.slope - 0.5) <= 0.1, "sqrt(gamma) slope");
    for (std::size_t k = 0; k < rep.gammas.size(); ++k)
        o.note(fmt::format("gamma {}: {:.4f} <= {:.4f}", rep.gammas[k], rep.l2_ratio[k], rep.l2_bound[k]));
    o.note(fmt::format("slope {:.3f}", rep.slope));
    return o;
}

// ---------------------------------------------------------------- GL sweeps

void run_sweeps() {
    std::cerr << "  GL sweep kappa = 25\n";
    S.sweep25 = sweep(plan({25}, {0, -1, 0.5, 1, 2, 4}));
    std::cerr << "  GL sweep mu = 1\n";
    S.sweepk = sweep(plan({15, 35}, {1}));
    std::cerr << "  GL solve kappa = H = 20\n";
    S.extra = sweep(plan({20}, {0}));
}

std::vector<RunRecord> all_runs() {
    std::vector<RunRecord> v = S.sweep25;
    v.insert(v.end(), S.sweepk.begin(), S.sweepk.end());
    v.insert(v.end(), S.extra.begin(), S.extra.end());
    return v;
}

Outcome max_principle() {
    Outcome o;
    auto runs = all_runs();
    auto agg = aggregate(runs);
    o.require(agg.converged_fraction() >= 0.8, "converged fraction >= 80%");
    double worst_max = 0, worst_virial = 0;
    for (const auto& r : runs) {
        if (!r.converged) {
            o.note(fmt::format("kappa={} mu={} not converged ({})", r.kappa, r.mu, r.status));
            continue;
        }
        worst_max = std::max(worst_max, r.max_abs_psi);
        double v = r.energy != 0 ? r.virial_defect / std::abs(r.energy) : r.virial_defect;
        worst_virial = std::max(worst_virial, v);
        o.require(r.max_abs_psi <= 1 + 1e-3, fmt::format("kappa={} mu={} max|psi|", r.kappa, r.mu));
        o.require(v <= 1e-5, fmt::format("kappa={} mu={} virial", r.kappa, r.mu));
    }
    o.note(fmt::format("{}/{} converged; max|psi| <= {:.4f}; virial defect / |E| <= {:.1e}", agg.converged, agg.total,
                       worst_max, worst_virial));
    return o;
}

// ---------------------------------------------------------------- 7, 8

Outcome expansion_surface() {
    Outcome o;
    auto r = find(S.sweep25, 25, 0);
    if (!r || !r->converged) {
        o.require(false, "kappa=25 mu=0 run did not converge");
        return o;
    }
    o.require(r->ratio >= 0.75 && r->ratio <= 1.25, "ratio band");
    o.note(fmt::format("E = {:.4f}, -E1 2pi kappa = {:.4f}, ratio {:.4f}", r->energy, -r->predicted, r->ratio));
    return o;
}

Outcome expansion_bulk() {
    Outcome o;
    auto r = find(S.sweep25, 25, 2), n = find(S.sweep25, 25, -1);
    if (!r || !r->converged || !n || !n->converged) {
        o.require(false, "kappa=25 mu=2 or mu=-1 run did not converge");
        return o;
    }
    o.require(r->ratio >= 0.7 && r->ratio <= 1.3, "mu=2 ratio band");
    double share = r->energy_bulk / -r->predicted_bulk;
    o.require(share >= 0.5, "interior share of the bulk term");
    const double surface_term = S.E1 * 2 * pi * 25;
    double interior = std::abs(n->energy_bulk) / surface_term;
    o.require(interior < 0.1, "mu=-1 interior energy");
    o.note(fmt::format("mu=2: E = {:.3f}, prediction {:.3f}, ratio {:.4f}; interior {:.3f} vs predicted bulk {:.3f} ({:.2f})",
                       r->energy, -r->predicted, r->ratio, r->energy_bulk, -r->predicted_bulk, share));
    o.note(fmt::format("mu=-1: interior |E| / surface term = {:.2e}", interior));
    return o;
}

// ---------------------------------------------------------------- 9, 10, 11

Outcome quartic() {
    Outcome o;
    std::vector<RunRecord> used;
    for (double mu : {0.0, 2.0, -1.0})
        if (auto r = find(S.sweep25, 25, mu)) used.push_back(*r);
    auto rows = run_quartic_identity(used);
    o.require(rows.size() == used.size() && !rows.empty(), "all runs converged");
    for (const auto& q : rows) {
        o.require(q.ratio >= 0.75 && q.ratio <= 1.25, fmt::format("mu={} quartic ratio", q.mu));
        o.require(q.virial_error <= 1e-4, fmt::format("mu={} identity", q.mu));
        o.note(fmt::format("mu={}: kappa int|psi|^4 = {:.4f}, prediction {:.4f} (ratio {:.3f}), identity error {:.1e}", q.mu,
                           q.lhs, q.predicted, q.ratio, q.virial_error));
    }
    return o;
}

Outcome linfty() {
    Outcome o;
    std::vector<RunRecord> used;
    for (double mu : {0.5, 1.0, 2.0, 4.0})
        if (auto r = find(S.sweep25, 25, mu)) used.push_back(*r);
    auto f = run_linfty_scaling(used);
    o.require(f.fitted, "at least three converged runs");
    if (!f.fitted) return o;
    o.require(f.slope >= 0.8 && f.slope <= 1.2, "slope in [0.8, 1.2]");
    o.require(f.c > 0 && std::isfinite(f.C), "ratios bounded");
    for (std::size_t k = 0; k < f.lambda.size(); ++k)
        o.note(fmt::format("lambda {:.4f}: |psi|_inf {:.4f}", f.lambda[k], f.linf[k]));
    o.note(fmt::format("slope {:.3f}, c = {:.3f}, C = {:.3f}", f.slope, f.c, f.C));
    return o;
}

Outcome curl() {
    Outcome o;
    std::vector<RunRecord> used = S.sweepk;
    if (auto r = find(S.sweep25, 25, 1)) used.push_back(*r);
    auto s = run_curl_smallness(used);
    o.require(s.kappa.size() == 3, "three converged runs");
    o.require(s.decreasing, "strictly decreasing");
    o.require(s.constant_spread <= 2, "sup-norm constant within a factor 2");
    for (std::size_t k = 0; k < s.kappa.size(); ++k)
        o.note(fmt::format("kappa {}: ratio {:.4e}, sup constant {:.4f}", s.kappa[k], s.ratio[k], s.sup_constant[k]));
    o.note(fmt::format("spread {:.3f}", s.constant_spread));
    return o;
}

// ---------------------------------------------------------------- 12

Outcome trials() {
    Outcome o;
    // boundary trial at kappa = H = 20
    {
        GLParams p{20.0, 20.0};
        auto pl = plan({20}, {0});
        auto grid = pl.grid_for(20, 20);
        double ell = trial_ell(grid->domain, p);
        SolverConfig cfg;
        cfg.rel_tol = 1e-7;
        cfg.restarts = 1;
        auto hp = HalfStripProblem::with_spacing(ell, 16, 0.1, 0.1);
        hp.ell = ell;
        auto prof = solve_halfstrip(hp, cfg);
        auto psi = boundary_trial(grid, p, 0.25, prof);
        double E = energy(psi, GaugeField::canonical(grid), p);
        double target = -S.E1 * 2 * pi * 20;
        double rel = std::abs(E - target) / std::abs(target);
        o.require(E <= 0, "boundary trial energy <= 0");
        o.require(rel <= 0.25, "boundary trial within 25%");
        o.note(fmt::format("boundary: E = {:.4f}, 2d(ell) = {:.4f}, -E1 |dOmega| kappa = {:.4f} ({:.1f}% off)", E, 2 * prof.d,
                           target, 100 * rel));
        if (auto r = find(S.extra, 20, 0); r && r->converged) {
            o.require(r->energy <= E, "minimiser below the boundary trial");
            o.note(fmt::format("minimiser {:.4f}", r->energy));
        }
    }
    // bulk trial at kappa = 25, mu = 2
    {
        auto p = GLParams::from_mu(25, 2);
        auto pl = plan({25}, {2});
        auto grid = pl.grid_for(p.kappa, p.H);
        auto basis = lowest_eigenspace(MagneticCell::make(9, 64));
        auto ab = minimize_abrikosov(basis);
        auto psi = bulk_trial(grid, p, ab, basis.cell, 1.3);
        for (auto& v : psi.values) v *= std::sqrt(2.0);
        double E = energy(psi, GaugeField::canonical(grid), p);
        double target = -S.E2 * pi * 4 * 25;
        double rel = std::abs(E - target) / std::abs(target);
        o.require(E < 0, "bulk trial energy < 0");
        o.require(rel <= 0.30, "bulk trial within 30%");
        o.note(fmt::format("bulk: E = {:.3f}, -E2 |Omega| mu^2 kappa = {:.3f} ({:.1f}% off)", E, target, 100 * rel));
        if (auto r = find(S.sweep25, 25, 2); r && r->converged) o.require(r->energy <= E, "minimiser below the bulk trial");
    }
    // the initial trial state of every GL run lies above its minimiser
    int above = 0, total = 0;
    for (const auto& r : all_runs()) {
        if (!r.converged) continue;
        ++total;
        above += r.trial_energy >= r.energy;
    }
    o.require(above == total, "trial energies above minimiser energies");
    o.note(fmt::format("{}/{} runs: trial energy >= minimiser energy", above, total));
    return o;
}

} // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    std::vector<Criterion> list{
        {1, "exactness suite", exactness},
        {2, "spectral suite", spectral},
        {3, "Abrikosov constant E2", abrikosov},
        {4, "surface constant E1", surface},
        {5, "gap filter", gap_filter},
        {6, "maximum principle and virial", [] {
             run_sweeps();
             return max_principle();
         }},
        {7, "expansion, surface regime", expansion_surface},
        {8, "expansion, bulk regime", expansion_bulk},
        {9, "quartic identity", quartic},
        {10, "L-infinity scaling", linfty},
        {11, "curl smallness", curl},
        {12, "trial-state upper bounds", trials},
    };
    int failed = 0;
    for (auto& c : list) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        std::cout << fmt::format("[{}] criterion {:2d} {}: {} ({:.0f} s)", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail,
                                 sec)
                  << std::endl;
    }
    std::cout << fmt::format("{} of {} criteria passed", list.size() - failed, list.size()) << std::endl;
    return failed ? 1 : 0;
}
