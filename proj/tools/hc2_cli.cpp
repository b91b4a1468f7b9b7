// hc2: command-line driver.
//
// Exit codes: 0 success, 1 solver failure, 2 configuration or usage error.

#include <array>
#include <chrono>
#include <set>
#include <cmath>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "hc2/bulk_energy.hpp"
#include "hc2/config.hpp"
#include "hc2/gl_solver.hpp"
#include "hc2/harness.hpp"
#include "hc2/surface_energy.hpp"

using namespace hc2;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kOk = 0, kSolver = 1, kConfig = 2;

struct Globals {
    std::uint64_t seed = 1;
    int jobs = 0;
    std::string out = "runs";
    bool quiet = false;
};

void log(const Globals& g, const std::string& msg) {
    if (!g.quiet) std::cerr << msg << '\n';
}

// Options of one subcommand: every value is kept as text so that a config file and
// flags go through the same parser; flags win.
struct Keys {
    std::string config_path;
    std::map<std::string, std::string> flags;
    std::vector<std::string> sets;  // key=value overrides
    std::map<std::string, std::string> defaults;

    void add(CLI::App* app, const std::string& key, const std::string& def, const std::string& help) {
        defaults[key] = def;
        auto name = "--" + key;
        app->add_option(name, flags[key], help + (def.empty() ? "" : " (default: " + def + ")"));
    }
    std::set<std::string> allowed() const {
        std::set<std::string> s;
        for (auto& [k, v] : defaults) s.insert(k);
        return s;
    }
    ConfigFile resolve(const CLI::App* app) const {
        ConfigFile c = config_path.empty() ? ConfigFile{} : load_config(config_path, allowed());
        for (const auto& [k, v] : flags)
            if (app->count("--" + k)) c.set(k, v);
        for (const auto& s : sets) {
            auto eq = s.find('=');
            if (eq == std::string::npos) throw ConfigError(fmt::format("--set expects key=value, got '{}'", s));
            auto trim = [](std::string t) {
                auto a = t.find_first_not_of(" \t"), b = t.find_last_not_of(" \t");
                return a == std::string::npos ? std::string() : t.substr(a, b - a + 1);
            };
            std::string k = trim(s.substr(0, eq));
            if (!allowed().count(k)) throw ConfigError(fmt::format("unknown key '{}'", k));
            c.set(k, trim(s.substr(eq + 1)));
        }
        for (const auto& [k, v] : defaults)
            if (!c.has(k) && !v.empty()) c.set(k, v);
        return c;
    }
};

std::string resolved_text(const ConfigFile& c, std::uint64_t seed) {
    std::string s;
    for (const auto& [k, v] : c.values) s += k + " = " + v + "\n";
    s += "seed = " + std::to_string(seed) + "\n";
    return s;
}

std::string get(const ConfigFile& c, const std::string& k) { return c.values.at(k); }

double wall_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string iso_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Manifest for the single-problem subcommands.  Everything outside "timing" is a
// function of the resolved configuration only.
void write_manifest(const std::string& dir, const std::string& kind, const std::string& config,
                    const std::vector<std::string>& outputs, const json& extra, double wall) {
    json m = {{"tool", "hc2"},
              {"version", tool_version()},
              {"kind", kind},
              {"config", config},
              {"config_hash", hash_hex(config)},
              {"outputs", outputs},
              {"timing", {{"finished", iso_now()}, {"wall_seconds", wall}}}};
    for (auto& [k, v] : extra.items()) m[k] = v;
    write_atomic((fs::path(dir) / "manifest.json").string(), m.dump(2) + "\n");
}

std::string new_run_dir(const Globals& g, const std::string& kind, const std::string& config) {
    auto dir = make_run_dir(g.out, kind, hash_hex(config));
    write_atomic((fs::path(dir) / "config.cfg").string(), config);
    return dir;
}

Resolution parse_res(const std::string& key, const std::string& v) {
    auto x = v.find('x');
    if (x == std::string::npos) throw ConfigError(fmt::format("{}: expected NxM, got '{}'", key, v));
    return {parse_int(key, v.substr(0, x)), parse_int(key, v.substr(x + 1))};
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw ConfigError(fmt::format("{}: expected true/false, got '{}'", key, v));
}

// ---------------------------------------------------------------- surface-e1

int cmd_surface(const Globals& g, const ConfigFile& c) {
    auto ells = parse_double_list("ell", get(c, "ell"));
    double T = parse_double("T", get(c, "T"));
    double tol = parse_double("tol", get(c, "tol"));
    if (ells.empty()) throw ConfigError("ell: empty list");
    std::sort(ells.begin(), ells.end());
    double hx, hy;
    if (c.has("res")) {
        // node counts refer to the widest strip; all strips share its spacing
        auto r = parse_res("res", get(c, "res"));
        if (r.n1 < 3 || r.n2 < 3) throw ConfigError("res: need at least 3 x 3 nodes");
        hx = 2 * ells.back() / (r.n1 - 1);
        hy = T / (r.n2 - 1);
    } else {
        hx = hy = parse_double("h", get(c, "h"));
    }
    if (!(hx > 0 && hy > 0 && hx <= 1 && hy <= 1)) throw ConfigError("spacing must lie in (0, 1]");
    const std::string config = resolved_text(c, g.seed);
    const auto t0 = std::chrono::steady_clock::now();
    SolverConfig cfg;
    cfg.rel_tol = tol;
    cfg.seed = g.seed;
    cfg.restarts = 1;
    std::vector<SurfaceResult> rows;
    std::optional<E1Fit> fit;
    double band = 0;
    if (ells.size() >= 2) {
        auto est = estimate_E1(ells, T, hx, hy, cfg);
        rows = est.rows;
        fit = est.fit;
        band = est.band;
    } else {
        rows.push_back(solve_halfstrip(HalfStripProblem::with_spacing(ells[0], T, hx, hy), cfg));
    }
    std::string csv = "ell,d_ell,e1_est,tail,iters\n";
    for (const auto& r : rows) {
        csv += fmt::format("{},{},{},{},{}\n", format_double(r.ell), format_double(r.d), format_double(r.e1),
                           format_double(r.tail), r.report.iterations);
        if (r.rerun_advised) log(g, fmt::format("warning: ell = {}: mass near tau = T is {:.3g}; increase T", r.ell, r.tail_mass));
    }
    std::cout << csv;
    json result = {{"hx", hx}, {"hy", hy}, {"T", T}};
    if (fit) {
        result["E1"] = fit->E1;
        result["M"] = fit->M;
        result["band"] = band;
        std::cout << fmt::format("E1 = {:.6f}  (M = {:.4f}, residual band {:.2e})\n", fit->E1, fit->M, band);
    } else {
        result["E1"] = rows[0].e1;
        std::cout << fmt::format("E1 ~ -d/(2 ell) = {:.6f} (single ell, no 1/ell correction)\n", rows[0].e1);
    }
    bool ok = true;
    json conv = json::array();
    for (const auto& r : rows) {
        ok = ok && r.report.converged;
        conv.push_back({{"ell", r.ell}, {"status", r.report.status}});
    }
    result["solves"] = conv;
    auto dir = new_run_dir(g, "surface-e1", config);
    write_atomic((fs::path(dir) / "table.csv").string(), csv);
    write_atomic((fs::path(dir) / "result.json").string(), result.dump(2) + "\n");
    write_manifest(dir, "surface-e1", config, {"config.cfg", "table.csv", "result.json"}, {{"E1", result["E1"]}},
                   wall_since(t0));
    log(g, "run directory: " + dir);
    return ok ? kOk : kSolver;
}

// ---------------------------------------------------------------- bulk-e2

int cmd_bulk(const Globals& g, const ConfigFile& c) {
    int res = parse_int("res", get(c, "res"));
    int starts = parse_int("starts", get(c, "starts"));
    if (starts < 1) throw ConfigError("starts must be >= 1");
    std::vector<MagneticCell> cells;
    if (c.has("R")) {
        for (double R : parse_double_list("R", get(c, "R"))) cells.push_back(MagneticCell::from_side(R, res));
    } else {
        for (int N : parse_int_list("N", get(c, "N"))) {
            if (N < 1) throw ConfigError(fmt::format("N = {} must be >= 1", N));
            cells.push_back(MagneticCell::make(N, res));
        }
    }
    std::sort(cells.begin(), cells.end(), [](auto& a, auto& b) { return a.N < b.N; });
    const std::string config = resolved_text(c, g.seed);
    const auto t0 = std::chrono::steady_clock::now();
    std::string csv = "N,R,mu1,mu2,cR,beta\n";
    json rows = json::array();
    std::vector<double> E2s;
    for (const auto& cell : cells) {
        auto basis = lowest_eigenspace(cell, 1e-10, g.seed);
        auto a = minimize_abrikosov(basis, starts, g.seed);
        csv += fmt::format("{},{},{},{},{},{}\n", cell.N, format_double(cell.Rx), format_double(a.mu1),
                           format_double(a.mu2), format_double(a.cR), format_double(a.beta));
        std::cout << fmt::format("N = {}  R = {:.6f}  c(R) = {:.8f}  beta = {:.8f}  (descent {:.8f}, ray {:.8f})\n",
                                 cell.N, cell.Rx, a.cR, a.beta, a.cR_descent, a.cR_ray);
        std::cout << "  eigenvalues:";
        for (double e : basis.eigenvalues) std::cout << fmt::format(" {:.6f}", e);
        std::cout << "\n";
        rows.push_back({{"N", cell.N}, {"R", cell.Rx}, {"mu1", a.mu1}, {"mu2", a.mu2}, {"cR", a.cR}, {"beta", a.beta},
                        {"eigenvalues", basis.eigenvalues}, {"agree", a.agree}});
        E2s.push_back(-a.cR);
    }
    json result = {{"E2", E2s.back()}, {"rows", rows}};
    if (E2s.size() >= 2) {
        double drift = std::abs(E2s.back() - E2s[E2s.size() - 2]) / E2s.back();
        result["drift"] = drift;
        if (drift > 0.05) log(g, fmt::format("warning: E2 drifts by {:.1f}% between the two largest cells", 100 * drift));
    }
    std::cout << csv << fmt::format("E2 = {:.6f}\n", E2s.back());
    auto dir = new_run_dir(g, "bulk-e2", config);
    write_atomic((fs::path(dir) / "table.csv").string(), csv);
    write_atomic((fs::path(dir) / "result.json").string(), result.dump(2) + "\n");
    write_manifest(dir, "bulk-e2", config, {"config.cfg", "table.csv", "result.json"}, {{"E2", E2s.back()}},
                   wall_since(t0));
    log(g, "run directory: " + dir);
    return kOk;
}

int cmd_thermo(const Globals& g, const ConfigFile& c) {
    auto bs = parse_double_list("b", get(c, "b"));
    double R = parse_double("R", get(c, "R"));
    double h = parse_double("h", get(c, "h"));
    double tol = parse_double("tol", get(c, "tol"));
    const std::string config = resolved_text(c, g.seed);
    const auto t0 = std::chrono::steady_clock::now();
    SolverConfig cfg;
    cfg.rel_tol = tol;
    cfg.seed = g.seed;
    cfg.restarts = 1;
    const double h_fine = c.has("h_fine") ? parse_double("h_fine", get(c, "h_fine")) : 0.0;
    std::string csv = "b,R,h,g_small,g_large,g_inf,ratio,ratio_spectral,bound\n";
    json rows = json::array();
    bool ok = true;
    auto add = [&](double b, const ThermoExtrapolation& t) {
        ok = ok && t.small.report.converged && t.large.report.converged;
        csv += fmt::format("{},{},{},{},{},{},{},{},{}\n", format_double(b), format_double(R),
                           format_double(t.small.h), format_double(t.small.g), format_double(t.large.g),
                           format_double(t.g_inf), format_double(t.ratio), format_double(t.ratio_spectral),
                           format_double(t.small.bound));
    };
    for (double b : bs) {
        json row = {{"b", b}};
        if (h_fine > 0) {
            auto t = estimate_E2_thermo_continuum(b, R, h, h_fine, cfg);
            add(b, t.coarse);
            add(b, t.fine);
            row["g0"] = t.g0;
            row["ratio"] = t.ratio;
            log(g, fmt::format("b = {}: zero-spacing |g|/(1-b)^2 = {:.5f}", b, t.ratio));
        } else {
            auto t = estimate_E2_thermo_extrapolated(b, R, h, cfg);
            add(b, t);
            row["g_inf"] = t.g_inf;
            row["ratio"] = t.ratio;
            row["ratio_spectral"] = t.ratio_spectral;
            row["lambda_h"] = t.small.lambda_h;
        }
        rows.push_back(row);
    }
    std::cout << csv;
    auto dir = new_run_dir(g, "bulk-e2-thermo", config);
    write_atomic((fs::path(dir) / "table.csv").string(), csv);
    write_atomic((fs::path(dir) / "result.json").string(), json{{"rows", rows}}.dump(2) + "\n");
    write_manifest(dir, "bulk-e2-thermo", config, {"config.cfg", "table.csv", "result.json"}, json::object(),
                   wall_since(t0));
    log(g, "run directory: " + dir);
    return ok ? kOk : kSolver;
}

// ---------------------------------------------------------------- gl-min

int cmd_gl(const Globals& g, const ConfigFile& c) {
    ExperimentPlan plan;
    plan.domain = parse_domain(get(c, "domain"));
    double kappa = parse_double("kappa", get(c, "kappa"));
    double H = parse_double("H", get(c, "H"));
    GLParams p{kappa, H, parse_double("delta", get(c, "delta"))};
    p.validate();
    plan.kappa_list = {kappa};
    plan.mu_list = {p.mu()};
    plan.res = get(c, "res") == "auto" ? 0.0 : parse_double("res", get(c, "res"));
    plan.tol = parse_double("tol", get(c, "tol"));
    plan.delta = p.delta;
    plan.restarts = parse_int("restarts", get(c, "restarts"));
    plan.seed = g.seed;
    plan.validate();
    GLInitOptions opts;
    opts.use_trial = parse_bool("trial", get(c, "trial"));
    opts.rho = parse_double("rho", get(c, "rho"));
    const std::string config = resolved_text(c, g.seed);
    const auto t0 = std::chrono::steady_clock::now();

    auto grid = plan.grid_for(kappa, H);
    log(g, fmt::format("grid: {} nodes, {} edges", grid->num_nodes(), grid->num_edges()));
    SolverConfig cfg;
    cfg.rel_tol = plan.tol;
    cfg.restarts = plan.restarts;
    cfg.seed = g.seed;
    cfg.max_iter = 200000;
    auto sol = solve_gl(grid, p, cfg, opts);

    std::string fields = "x,y,weight,re_psi,im_psi,abs_psi\n";
    for (std::size_t i = 0; i < grid->num_nodes(); ++i) {
        cplx v = sol.psi.values[i];
        fields += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", grid->pos[i].x, grid->pos[i].y,
                              grid->weight[i], v.real(), v.imag(), std::abs(v));
    }
    auto conv = sol.report.to_json();
    double solve_seconds = conv.value("seconds", 0.0);
    conv.erase("seconds");
    json diag = {{"kappa", kappa},
                 {"H", H},
                 {"mu", p.mu()},
                 {"eps", p.eps()},
                 {"nodes", grid->num_nodes()},
                 {"residual", sol.residual.to_json()},
                 {"convergence", conv},
                 {"trial_energy", sol.trial_energy}};
    std::cout << fmt::format("E = {:.10g}  max|psi| = {:.6f}  int|psi|^4 = {:.6g}  {} after {} iterations\n",
                             sol.residual.energy, sol.residual.max_abs_psi, sol.residual.quartic_integral,
                             sol.report.status, sol.report.iterations);
    auto dir = new_run_dir(g, "gl-min", config);
    write_atomic((fs::path(dir) / "fields.csv").string(), fields);
    write_atomic((fs::path(dir) / "diagnostics.json").string(), diag.dump(2) + "\n");
    write_manifest(dir, "gl-min", config, {"config.cfg", "fields.csv", "diagnostics.json"},
                   {{"energy", sol.residual.energy}, {"converged", sol.report.converged}}, wall_since(t0));
    (void)solve_seconds;
    log(g, "run directory: " + dir);
    return sol.report.converged ? kOk : kSolver;
}

// ---------------------------------------------------------------- verify-*

json summarise(const std::string& kind, const std::vector<RunRecord>& recs) {
    auto agg = aggregate(recs);
    json s = {{"total", agg.total}, {"converged", agg.converged}, {"converged_fraction", agg.converged_fraction()}};
    if (kind == "verify-expansion") {
        json rows = json::array();
        for (const auto& r : recs)
            if (r.converged)
                rows.push_back({{"kappa", r.kappa}, {"mu", r.mu}, {"energy", r.energy}, {"predicted", -r.predicted},
                                {"ratio", r.ratio},
                                {"ratio_bulk", r.predicted_bulk > 0 ? r.energy_bulk / -r.predicted_bulk : 0.0}});
        s["rows"] = rows;
    } else if (kind == "verify-quartic") {
        json rows = json::array();
        for (const auto& q : run_quartic_identity(recs))
            rows.push_back({{"kappa", q.kappa}, {"mu", q.mu}, {"lhs", q.lhs}, {"predicted", q.predicted},
                            {"ratio", q.ratio}, {"virial", q.virial}, {"virial_error", q.virial_error}});
        s["rows"] = rows;
    } else if (kind == "verify-linfty") {
        auto f = run_linfty_scaling(recs);
        s["lambda"] = f.lambda;
        s["linf"] = f.linf;
        s["ratio"] = f.ratio;
        s["c"] = f.c;
        s["C"] = f.C;
        s["fitted"] = f.fitted;
        if (f.fitted) s["slope"] = f.slope;
    } else if (kind == "verify-curl") {
        auto cs = run_curl_smallness(recs);
        s["kappa"] = cs.kappa;
        s["ratio"] = cs.ratio;
        s["sup_constant"] = cs.sup_constant;
        s["decreasing"] = cs.decreasing;
        s["constant_spread"] = cs.constant_spread;
    }
    return s;
}

int cmd_verify(const Globals& g, const std::string& kind, const ConfigFile& c) {
    ExperimentPlan plan = ExperimentPlan::from_config(c);
    if (!c.has("seed")) plan.seed = g.seed;
    for (const auto& w : plan.warnings) log(g, "warning: " + w);
    if ((kind == "verify-expansion" || kind == "verify-quartic") && plan.E1 <= 0)
        log(g, "warning: no E1 given (e1_run); predictions are zero and ratios undefined");
    const auto t0 = std::chrono::steady_clock::now();
    auto recs = run_expansion_experiment(plan, g.jobs, [&](const RunRecord& r) {
        log(g, fmt::format("kappa = {} mu = {}: E = {:.8g} ({}, {} iterations, {:.1f} s)", r.kappa, r.mu, r.energy,
                           r.status, r.iterations, r.seconds));
    });
    auto summary = summarise(kind, recs);
    std::cout << summary.dump(2) << "\n";
    auto dir = make_run_dir(g.out, kind, plan.hash());
    persist(dir, kind, plan, recs, summary, wall_since(t0));
    log(g, "run directory: " + dir);
    return aggregate(recs).converged_fraction() >= 0.8 ? kOk : kSolver;
}

// ---------------------------------------------------------------- project-lll

int cmd_project(const Globals& g, const ConfigFile& c) {
    GridPtr grid;
    ComplexField f;
    std::string input = c.has("input") ? get(c, "input") : "";
    if (!input.empty()) {
        std::ifstream in(input);
        if (!in) throw ConfigError(fmt::format("input: cannot open '{}'", input));
        std::string line;
        std::getline(in, line);
        if (line.rfind("x,y,re,im", 0) != 0) throw ConfigError("input: header must be x,y,re,im");
        std::vector<std::array<double, 4>> rows;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::array<double, 4> r{};
            std::stringstream ss(line);
            std::string tok;
            for (int k = 0; k < 4; ++k) {
                if (!std::getline(ss, tok, ',')) throw ConfigError("input: expected 4 columns: " + line);
                r[k] = parse_double("input", tok);
            }
            rows.push_back(r);
        }
        std::set<double> xs, ys;
        for (auto& r : rows) xs.insert(r[0]), ys.insert(r[1]);
        if (xs.size() < 3 || ys.size() < 3 || xs.size() * ys.size() != rows.size())
            throw ConfigError("input: values must cover a full Cartesian grid");
        double W = *xs.rbegin() - *xs.begin(), Hh = *ys.rbegin() - *ys.begin();
        if (std::abs(*xs.rbegin() + *xs.begin()) > 1e-9 * W || std::abs(*ys.rbegin() + *ys.begin()) > 1e-9 * Hh)
            throw ConfigError("input: the patch must be centred on the origin (the projector uses the symmetric gauge)");
        grid = build_grid(DomainSpec::rectangle(W, Hh), {int(xs.size()), int(ys.size())});
        f = ComplexField(grid);
        const auto& cart = *grid->cart;
        for (auto& r : rows) {
            int i = int(std::lround((r[0] - *xs.begin()) / cart.hx)), j = int(std::lround((r[1] - *ys.begin()) / cart.hy));
            f.values[cart.index(i, j)] = {r[2], r[3]};
        }
    } else {
        double L = parse_double("L", get(c, "L"));
        int n = parse_int("n", get(c, "n"));
        if (!(L > 8) || n < 8) throw ConfigError("need L > 8 and n >= 8");
        grid = build_grid(DomainSpec::rectangle(L, L), {n, n});
        f = ComplexField(grid);
        std::string demo = get(c, "demo");
        std::mt19937_64 rng(g.seed);
        std::normal_distribution<double> nd;
        std::vector<std::pair<Vec2, cplx>> bumps;
        for (int k = 0; k < 4; ++k) bumps.push_back({{nd(rng), nd(rng)}, {nd(rng), nd(rng)}});
        for (std::size_t i = 0; i < grid->num_nodes(); ++i) {
            Vec2 x = grid->pos[i];
            double G = std::exp(-0.25 * x.dot(x));
            if (demo == "gauss") f.values[i] = G;
            else if (demo == "zbar") f.values[i] = cplx(x.x, -x.y) * G;
            else if (demo == "random")
                for (auto& [a, cc] : bumps) {
                    Vec2 d = x - a;
                    f.values[i] += cc * std::exp(-0.5 * d.dot(d));
                }
            else throw ConfigError(fmt::format("demo: expected gauss, zbar or random, got '{}'", demo));
        }
    }
    const std::string config = resolved_text(c, g.seed);
    const auto t0 = std::chrono::steady_clock::now();
    double edge = patch_edge_mass(f);
    if (edge > 1e-8) log(g, fmt::format("warning: {:.2e} of the mass lies within 4 units of the patch edge", edge));
    auto Pf = lll_project(f);
    auto PPf = lll_project(Pf);
    auto norm = [&](auto&& v) {
        double s = 0;
        for (std::size_t i = 0; i < v.size(); ++i) s += grid->weight[i] * std::norm(v[i]);
        return std::sqrt(s);
    };
    std::vector<cplx> diff(Pf.values.size()), rest(Pf.values.size());
    for (std::size_t i = 0; i < diff.size(); ++i) {
        diff[i] = PPf.values[i] - Pf.values[i];
        rest[i] = f.values[i] - Pf.values[i];
    }
    double nf = norm(f.values), np = norm(Pf.values);
    json report = {{"input_norm", nf},
                   {"projected_norm", np},
                   {"retained_fraction", nf > 0 ? np / nf : 0.0},
                   {"residual_norm", norm(rest)},
                   {"idempotence_error", nf > 0 ? norm(diff) / nf : 0.0},
                   {"edge_mass", edge}};
    std::cout << report.dump(2) << "\n";
    std::string csv = "x,y,re,im\n";
    for (std::size_t i = 0; i < grid->num_nodes(); ++i)
        csv += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}\n", grid->pos[i].x, grid->pos[i].y, Pf.values[i].real(),
                           Pf.values[i].imag());
    auto dir = new_run_dir(g, "project-lll", config);
    write_atomic((fs::path(dir) / "projected.csv").string(), csv);
    write_atomic((fs::path(dir) / "report.json").string(), report.dump(2) + "\n");
    write_manifest(dir, "project-lll", config, {"config.cfg", "projected.csv", "report.json"}, json::object(),
                   wall_since(t0));
    log(g, "run directory: " + dir);
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hc2: surface and bulk energies of 2D superconductors near the second critical field.\n"
                 "Exit codes: 0 success, 1 solver failure, 2 configuration error."};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "seed for all randomness (default: 1)");
    app.add_option("--jobs", g.jobs, "worker threads for sweeps (default: logical cores)");
    app.add_option("--out", g.out, "root directory for run directories (default: runs)");
    app.add_flag("--quiet", g.quiet, "no progress output on stderr");

    std::map<std::string, Keys> keys;
    auto sub = [&](const std::string& name, const std::string& help) {
        auto* s = app.add_subcommand(name, help);
        s->set_help_flag("--help", "print this help and exit");  // -h is taken by the spacing key
        auto& k = keys[name];
        s->add_option("--config", k.config_path, "key = value file; flags override its keys");
        s->add_option("--set", k.sets, "override key=value (repeatable)");
        return std::pair<CLI::App*, Keys*>{s, &k};
    };

    auto [se, sek] = sub("surface-e1", "half-strip energies d(ell) and the surface constant E1");
    sek->add(se, "ell", "4,8,16", "strip half-widths");
    sek->add(se, "T", "12", "strip depth");
    sek->add(se, "res", "", "nodes NxM on the widest strip (overrides --h)");
    sek->add(se, "h", "0.1", "mesh spacing");
    sek->add(se, "tol", "1e-7", "relative gradient tolerance");

    auto [be, bek] = sub("bulk-e2", "Abrikosov constant c(R) on flux-quantised cells");
    bek->add(be, "N", "1,4,9", "flux quanta per cell");
    bek->add(be, "R", "", "cell sides instead of N (R^2 / 2pi must be an integer)");
    bek->add(be, "res", "48", "nodes per cell side");
    bek->add(be, "starts", "12", "random starts of the quartic minimisation");

    auto [bt, btk] = sub("bulk-e2-thermo", "thermodynamic bulk estimator g(b) on Dirichlet squares");
    btk->add(bt, "b", "0.9,0.95", "field ratios");
    btk->add(bt, "R", "20", "box side (extrapolated with 1.5 R)");
    btk->add(bt, "h", "0.25", "mesh spacing");
    btk->add(bt, "h_fine", "", "second, finer spacing: extrapolate g to zero spacing");
    btk->add(bt, "tol", "1e-7", "relative gradient tolerance");

    auto [gm, gmk] = sub("gl-min", "minimise the Ginzburg-Landau functional on one domain");
    gmk->add(gm, "domain", "disc", "disc, disc:R or rectangle:WxH");
    gmk->add(gm, "kappa", "20", "Ginzburg-Landau parameter");
    gmk->add(gm, "H", "20", "applied field");
    gmk->add(gm, "delta", "0.5", "interior depth exponent");
    gmk->add(gm, "res", "auto", "bulk spacing (auto = eps / 4)");
    gmk->add(gm, "tol", "1e-6", "relative gradient tolerance");
    gmk->add(gm, "restarts", "1", "best of this many seeded starts");
    gmk->add(gm, "trial", "true", "start from the boundary/bulk trial state");
    gmk->add(gm, "rho", "0.25", "boundary trial cut-off exponent");

    std::vector<std::string> verify{"verify-expansion", "verify-quartic", "verify-linfty", "verify-curl"};
    std::map<std::string, std::string> plan_path;
    std::map<std::string, std::pair<std::string, std::string>> kappa_mu;
    for (const auto& v : verify) {
        auto* s = app.add_subcommand(v, "sweep kappa_list x mu_list and evaluate " + v.substr(7));
        auto& k = keys[v];
        for (const auto& key : ExperimentPlan::keys()) k.defaults[key] = "";
        s->add_option("--plan", k.config_path,
                      "plan file; keys: domain (disc), kappa_list (25), mu_list (0), res (auto), tol (1e-6), "
                      "delta (0.5), e1_run, e2_run, restarts (1), seed");
        s->add_option("--set", k.sets, "override key=value (repeatable)");
        s->add_option("--kappa_list", k.flags["kappa_list"], "override kappa_list");
        s->add_option("--mu_list", k.flags["mu_list"], "override mu_list");
        s->add_option("--e1_run", k.flags["e1_run"], "override e1_run");
        s->add_option("--e2_run", k.flags["e2_run"], "override e2_run");
    }

    auto [pl, plk] = sub("project-lll", "apply the lowest-Landau-level projector on a centred patch");
    plk->add(pl, "input", "", "CSV x,y,re,im on a full grid centred at 0");
    plk->add(pl, "demo", "random", "built-in input when no file is given: gauss, zbar or random");
    plk->add(pl, "L", "26", "patch side for the demo");
    plk->add(pl, "n", "66", "nodes per side for the demo");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return kConfig;
    }

    try {
        auto* s = app.get_subcommands().front();
        const std::string name = s->get_name();
        ConfigFile c = keys.at(name).resolve(s);
        if (name == "surface-e1") return cmd_surface(g, c);
        if (name == "bulk-e2") {
            if (c.has("R")) {
                if (s->count("--N") || c.lines.count("N")) throw ConfigError("give either N or R, not both");
                c.values.erase("N");
            }
            return cmd_bulk(g, c);
        }
        if (name == "bulk-e2-thermo") return cmd_thermo(g, c);
        if (name == "gl-min") return cmd_gl(g, c);
        if (name == "project-lll") return cmd_project(g, c);
        return cmd_verify(g, name, c);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kSolver;
    }
}
