#include "hc2/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>
#include <unistd.h>

#ifndef HC2_VERSION
#define HC2_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;

namespace hc2 {

std::string tool_version() { return HC2_VERSION; }

// ---------------------------------------------------------------- plan

const std::set<std::string>& ExperimentPlan::keys() {
    static const std::set<std::string> k{"domain", "kappa_list", "mu_list", "res",      "tol",
                                         "delta",  "e1_run",     "e2_run",  "restarts", "seed"};
    return k;
}

namespace {

// value is a number, or a run directory whose result.json holds `field`
std::pair<double, std::string> resolve_constant(const std::string& key, const std::string& value,
                                                const std::string& field) {
    if (value.empty()) return {0.0, ""};
    try {
        return {parse_double(key, value), "literal"};
    } catch (const ConfigError&) {
    }
    fs::path dir(value);
    std::ifstream f(dir / "result.json");
    if (!f) throw ConfigError(fmt::format("{}: '{}' is neither a number nor a run directory with result.json", key, value));
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw ConfigError(fmt::format("{}: cannot parse {}/result.json: {}", key, value, e.what()));
    }
    if (!j.contains(field)) throw ConfigError(fmt::format("{}: {}/result.json has no '{}'", key, value, field));
    return {j[field].get<double>(), dir.lexically_normal().filename().string()};
}

} // namespace

ExperimentPlan ExperimentPlan::from_config(const ConfigFile& c) {
    for (const auto& [k, v] : c.values)
        if (!keys().count(k)) throw ConfigError(fmt::format("unknown key '{}'", k));
    ExperimentPlan p;
    auto get = [&](const char* k) -> const std::string* {
        auto it = c.values.find(k);
        return it == c.values.end() ? nullptr : &it->second;
    };
    if (auto v = get("domain")) p.domain = parse_domain(*v);
    if (auto v = get("kappa_list")) p.kappa_list = parse_double_list("kappa_list", *v);
    if (auto v = get("mu_list")) p.mu_list = parse_double_list("mu_list", *v);
    if (auto v = get("res")) p.res = *v == "auto" ? 0.0 : parse_double("res", *v);
    if (auto v = get("tol")) p.tol = parse_double("tol", *v);
    if (auto v = get("delta")) p.delta = parse_double("delta", *v);
    if (auto v = get("restarts")) p.restarts = parse_int("restarts", *v);
    if (auto v = get("seed")) p.seed = static_cast<std::uint64_t>(parse_int("seed", *v));
    if (auto v = get("e1_run")) {
        p.e1_run = *v;
        std::tie(p.E1, p.e1_id) = resolve_constant("e1_run", *v, "E1");
    }
    if (auto v = get("e2_run")) {
        p.e2_run = *v;
        std::tie(p.E2, p.e2_id) = resolve_constant("e2_run", *v, "E2");
    }
    p.validate();
    for (double k : p.kappa_list)
        for (double m : p.mu_list)
            if (m >= 0.5 * std::sqrt(k))
                p.warnings.push_back(fmt::format("mu = {} is not small against sqrt(kappa) = {:.4g}; the expansion "
                                                 "assumes mu / sqrt(kappa) -> 0",
                                                 m, std::sqrt(k)));
    return p;
}

std::string ExperimentPlan::to_config() const {
    std::string s;
    s += "domain = " + domain_string(domain) + "\n";
    s += "kappa_list = " + format_list(kappa_list) + "\n";
    s += "mu_list = " + format_list(mu_list) + "\n";
    s += "res = " + (res > 0 ? format_double(res) : std::string("auto")) + "\n";
    s += "tol = " + format_double(tol) + "\n";
    s += "delta = " + format_double(delta) + "\n";
    s += "restarts = " + std::to_string(restarts) + "\n";
    s += "seed = " + std::to_string(seed) + "\n";
    if (!e1_run.empty()) s += "e1_run = " + e1_run + "\n";
    if (!e2_run.empty()) s += "e2_run = " + e2_run + "\n";
    return s;
}

void ExperimentPlan::validate() const {
    if (domain.kind != DomainKind::Disc && domain.kind != DomainKind::Rectangle)
        throw ConfigError("domain must be a disc or a rectangle");
    if (kappa_list.empty() || mu_list.empty()) throw ConfigError("kappa_list and mu_list must be non-empty");
    for (double k : kappa_list)
        if (!(k > 0)) throw ConfigError(fmt::format("kappa_list: kappa = {} must be positive", k));
    for (double k : kappa_list)
        for (double m : mu_list)
            if (!(k - m * std::sqrt(k) > 0))
                throw ConfigError(fmt::format("mu = {} gives H = kappa - mu sqrt(kappa) <= 0 at kappa = {}", m, k));
    if (!(res >= 0 && res < 0.5)) throw ConfigError(fmt::format("res = {} must lie in [0, 0.5)", res));
    if (!(tol > 0 && tol < 1)) throw ConfigError(fmt::format("tol = {} must lie in (0, 1)", tol));
    if (!(delta > 0 && delta < 1)) throw ConfigError(fmt::format("delta = {} must lie in (0, 1)", delta));
    if (restarts < 1) throw ConfigError("restarts must be >= 1");
    if (E1 < 0 || E2 < 0) throw ConfigError("E1 and E2 must be non-negative");
}

std::vector<PlanEntry> ExperimentPlan::entries() const {
    std::vector<PlanEntry> out;
    const double P = domain.perimeter(), A = domain.area(), V = bulk_area();
    for (double k : kappa_list)
        for (double m : mu_list) {
            PlanEntry e;
            e.kappa = k;
            e.mu = m;
            e.H = k - m * std::sqrt(k);
            double mp2 = m > 0 ? m * m : 0.0;
            e.predicted = (E1 * P + mp2 * E2 * A) * k;
            e.predicted_bulk = mp2 * E2 * V * k;
            e.predicted_collar = e.predicted - e.predicted_bulk;
            out.push_back(e);
        }
    return out;
}

Region ExperimentPlan::bulk_region() const {
    if (domain.kind == DomainKind::Disc) return Region::disc(0.5 * domain.a);
    return Region::interior(0.5 * domain.inradius());
}

double ExperimentPlan::bulk_area() const {
    if (domain.kind == DomainKind::Disc) return pi * 0.25 * domain.a * domain.a;
    double d = 0.5 * domain.inradius();
    return (domain.a - 2 * d) * (domain.b - 2 * d);
}

double ExperimentPlan::spacing(double kappa, double H) const { return res > 0 ? res : 0.25 / std::sqrt(kappa * H); }

GridPtr ExperimentPlan::grid_for(double kappa, double H) const {
    const double h = spacing(kappa, H);
    if (domain.kind == DomainKind::Disc) return build_disc_for(domain.a, h, 1.0 / kappa, 8);
    // uniform rectangle: at least 8 nodes across the 1/kappa collar
    const double hh = std::min(h, 1.0 / (8 * kappa));
    int nx = static_cast<int>(std::ceil(domain.a / hh)) + 1, ny = static_cast<int>(std::ceil(domain.b / hh)) + 1;
    return build_grid(domain, {nx, ny});
}

// ---------------------------------------------------------------- records

nlohmann::json RunRecord::to_json() const {
    return {{"kappa", kappa},
            {"mu", mu},
            {"H", H},
            {"delta", delta},
            {"h", h},
            {"nodes", nodes},
            {"energy", energy},
            {"energy_bulk", energy_bulk},
            {"energy_collar", energy_collar},
            {"reduced_energy", reduced_energy},
            {"quartic", quartic},
            {"quartic_bulk", quartic_bulk},
            {"linf_interior", linf_interior},
            {"lambda", lambda},
            {"l2", l2},
            {"max_abs_psi", max_abs_psi},
            {"curl_energy", curl_energy},
            {"curl_sup", curl_sup},
            {"virial_defect", virial_defect},
            {"predicted", predicted},
            {"predicted_bulk", predicted_bulk},
            {"predicted_collar", predicted_collar},
            {"ratio", ratio},
            {"ratio_quartic", ratio_quartic},
            {"trial_energy", trial_energy},
            {"converged", converged},
            {"status", status},
            {"iterations", iterations},
            {"grad_ratio", grad_ratio},
            {"seed", seed},
            {"restart_values", restart_values}};
}

RunRecord RunRecord::from_json(const nlohmann::json& j) {
    RunRecord r;
    auto d = [&](const char* k, double& v) { v = j.at(k).get<double>(); };
    d("kappa", r.kappa);
    d("mu", r.mu);
    d("H", r.H);
    d("delta", r.delta);
    d("h", r.h);
    r.nodes = j.at("nodes").get<int>();
    d("energy", r.energy);
    d("energy_bulk", r.energy_bulk);
    d("energy_collar", r.energy_collar);
    d("reduced_energy", r.reduced_energy);
    d("quartic", r.quartic);
    d("quartic_bulk", r.quartic_bulk);
    d("linf_interior", r.linf_interior);
    d("lambda", r.lambda);
    d("l2", r.l2);
    d("max_abs_psi", r.max_abs_psi);
    d("curl_energy", r.curl_energy);
    d("curl_sup", r.curl_sup);
    d("virial_defect", r.virial_defect);
    d("predicted", r.predicted);
    d("predicted_bulk", r.predicted_bulk);
    d("predicted_collar", r.predicted_collar);
    d("ratio", r.ratio);
    d("ratio_quartic", r.ratio_quartic);
    d("trial_energy", r.trial_energy);
    r.converged = j.at("converged").get<bool>();
    r.status = j.at("status").get<std::string>();
    r.iterations = j.at("iterations").get<int>();
    d("grad_ratio", r.grad_ratio);
    // wall-clock time is kept in the manifest timing block only
    r.seed = j.at("seed").get<std::uint64_t>();
    r.restart_values = j.at("restart_values").get<std::vector<double>>();
    return r;
}

std::string RunRecord::csv_header() {
    return "kappa,mu,H,h,nodes,energy,energy_bulk,energy_collar,quartic,linf_interior,lambda,l2,curl_energy,"
           "curl_sup,virial_defect,predicted,ratio,ratio_quartic,converged,iterations";
}

std::string RunRecord::csv_row() const {
    std::vector<double> v{kappa, mu,     H,          h,          double(nodes), energy, energy_bulk,
                          energy_collar, quartic,    linf_interior,  lambda,     l2,     curl_energy,
                          curl_sup,      virial_defect, predicted,   ratio,      ratio_quartic};
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + format_double(v[k]);
    s += fmt::format(",{},{}", converged ? 1 : 0, iterations);
    return s;
}

// ---------------------------------------------------------------- experiments

RunRecord solve_entry(const ExperimentPlan& plan, const PlanEntry& e) {
    RunRecord r;
    r.kappa = e.kappa;
    r.mu = e.mu;
    r.H = e.H;
    r.delta = plan.delta;
    r.h = plan.spacing(e.kappa, e.H);
    r.predicted = e.predicted;
    r.predicted_bulk = e.predicted_bulk;
    r.predicted_collar = e.predicted_collar;
    r.seed = plan.seed;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        GLParams p{e.kappa, e.H, plan.delta};
        auto grid = plan.grid_for(e.kappa, e.H);
        r.nodes = static_cast<int>(grid->num_nodes());
        SolverConfig cfg;
        cfg.rel_tol = plan.tol;
        cfg.restarts = plan.restarts;
        cfg.seed = plan.seed;
        cfg.max_iter = 200000;
        auto sol = solve_gl(grid, p, cfg);
        const auto& res = sol.residual;
        r.energy = res.energy;
        r.reduced_energy = res.reduced_energy;
        r.quartic = res.quartic_integral;
        r.linf_interior = res.linf_interior;
        r.lambda = p.lambda();
        r.l2 = res.l2_norm;
        r.max_abs_psi = res.max_abs_psi;
        r.curl_sup = res.curl_defect_sup;
        r.virial_defect = res.virial_defect;
        r.curl_energy = energy_parts(sol.psi, sol.A, p).magnetic;
        auto region = plan.bulk_region();
        r.energy_bulk = energy_parts(sol.psi, sol.A, p, region).total();
        r.energy_collar = r.energy - r.energy_bulk;
        for (std::size_t i = 0; i < grid->num_nodes(); ++i)
            if (region.contains(*grid, i)) r.quartic_bulk += grid->weight[i] * std::pow(std::norm(sol.psi.values[i]), 2);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        r.ratio = e.predicted > 0 ? r.energy / -e.predicted : nan;
        r.ratio_quartic = e.predicted > 0 ? e.kappa * r.quartic / (2 * e.predicted / e.kappa) : nan;
        r.trial_energy = sol.trial_energy;
        r.converged = sol.report.converged;
        r.status = sol.report.status;
        r.iterations = sol.report.iterations;
        r.grad_ratio = sol.report.grad_norm0 > 0 ? sol.report.grad_norm / sol.report.grad_norm0 : 0.0;
        r.restart_values = sol.report.restart_values;
    } catch (const SolverError& ex) {
        r.converged = false;
        r.status = std::string("error: ") + ex.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

std::vector<RunRecord> run_expansion_experiment(const ExperimentPlan& plan, int jobs, const ProgressFn& progress) {
    plan.validate();
    auto entries = plan.entries();
    std::vector<RunRecord> out(entries.size());
    if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    jobs = std::min<int>(jobs, static_cast<int>(entries.size()));
    std::atomic<std::size_t> next{0};
    std::mutex mtx;
    std::exception_ptr failure;
    auto worker = [&] {
        for (std::size_t k; (k = next++) < entries.size();) {
            try {
                out[k] = solve_entry(plan, entries[k]);
                if (progress) {
                    std::lock_guard lock(mtx);
                    progress(out[k]);
                }
            } catch (...) {
                std::lock_guard lock(mtx);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

Aggregate aggregate(const std::vector<RunRecord>& r) {
    Aggregate a;
    a.total = static_cast<int>(r.size());
    for (const auto& x : r) a.converged += x.converged;
    return a;
}

std::vector<QuarticRow> run_quartic_identity(const std::vector<RunRecord>& records) {
    std::vector<QuarticRow> out;
    for (const auto& r : records) {
        if (!r.converged) continue;
        QuarticRow q;
        q.kappa = r.kappa;
        q.mu = r.mu;
        q.lhs = r.kappa * r.quartic;
        q.predicted = 2 * r.predicted / r.kappa;
        q.ratio = q.predicted > 0 ? q.lhs / q.predicted : std::numeric_limits<double>::quiet_NaN();
        q.virial = -2 * r.reduced_energy / r.kappa;
        q.virial_error = q.lhs > 0 ? std::abs(q.lhs - q.virial) / q.lhs : std::abs(q.lhs - q.virial);
        out.push_back(q);
    }
    return out;
}

LinftyFit run_linfty_scaling(const std::vector<RunRecord>& records) {
    LinftyFit f;
    for (const auto& r : records)
        if (r.converged && r.mu > 0 && r.linf_interior > 0) {
            f.lambda.push_back(r.lambda);
            f.linf.push_back(r.linf_interior);
            f.ratio.push_back(r.linf_interior / r.lambda);
        }
    if (f.ratio.empty()) return f;
    f.c = *std::min_element(f.ratio.begin(), f.ratio.end());
    f.C = *std::max_element(f.ratio.begin(), f.ratio.end());
    if (f.lambda.size() < 3) return f;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(f.lambda.size());
    for (std::size_t k = 0; k < f.lambda.size(); ++k) {
        double x = std::log(f.lambda[k]), y = std::log(f.linf[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    f.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    f.intercept = (sy - f.slope * sx) / m;
    f.fitted = true;
    return f;
}

CurlSummary run_curl_smallness(const std::vector<RunRecord>& records) {
    std::vector<const RunRecord*> rs;
    for (const auto& r : records)
        if (r.converged) rs.push_back(&r);
    std::sort(rs.begin(), rs.end(), [](auto a, auto b) { return a->kappa < b->kappa; });
    CurlSummary s;
    for (auto r : rs) {
        double mp = r->mu > 0 ? r->mu : 0.0;
        s.kappa.push_back(r->kappa);
        s.ratio.push_back(r->curl_energy / (std::max(mp * mp, 1.0) * r->kappa));
        s.sup_constant.push_back(r->curl_sup * r->H / (std::pow(r->kappa, -1 + r->delta) + r->linf_interior));
    }
    s.decreasing = s.ratio.size() >= 2;
    for (std::size_t k = 1; k < s.ratio.size(); ++k) s.decreasing = s.decreasing && s.ratio[k] < s.ratio[k - 1];
    if (!s.sup_constant.empty()) {
        auto [lo, hi] = std::minmax_element(s.sup_constant.begin(), s.sup_constant.end());
        s.constant_spread = *lo > 0 ? *hi / *lo : std::numeric_limits<double>::infinity();
    }
    return s;
}

// ---------------------------------------------------------------- persistence

std::string make_run_dir(const std::string& root, const std::string& kind, const std::string& hash) {
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw ConfigError(fmt::format("cannot create output directory '{}': {}", root, ec.message()));
    for (int k = 0; k < 100000; ++k) {
        fs::path p = fs::path(root) / fmt::format("{}-{}-{:03d}", kind, hash.substr(0, 8), k);
        if (fs::create_directory(p, ec)) return p.string();
        if (ec) throw ConfigError(fmt::format("cannot create run directory '{}': {}", p.string(), ec.message()));
    }
    throw ConfigError("no free run directory name");
}

void write_atomic(const std::string& path, const std::string& content) {
    static std::atomic<unsigned> counter{0};
    fs::path target(path);
    fs::path tmp = target;
    tmp += fmt::format(".tmp.{}.{}", ::getpid(), counter++);
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw ConfigError(fmt::format("cannot write '{}'", tmp.string()));
        f << content;
        f.flush();
        if (!f) throw ConfigError(fmt::format("write to '{}' failed", tmp.string()));
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw ConfigError(fmt::format("cannot move '{}' into place: {}", path, ec.message()));
    }
}

namespace {

std::string iso_time(std::chrono::system_clock::time_point t) {
    std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

Manifest persist(const std::string& dir, const std::string& kind, const ExperimentPlan& plan,
                 const std::vector<RunRecord>& records, const nlohmann::json& summary, double wall_seconds) {
    if (!fs::is_directory(dir)) throw ConfigError(fmt::format("run directory '{}' does not exist", dir));
    const fs::path d(dir);
    write_atomic((d / "config.cfg").string(), plan.to_config());
    nlohmann::json rj = nlohmann::json::array();
    for (const auto& r : records) rj.push_back(r.to_json());
    write_atomic((d / "records.json").string(), rj.dump(2) + "\n");
    std::string csv = RunRecord::csv_header() + "\n";
    for (const auto& r : records) csv += r.csv_row() + "\n";
    write_atomic((d / "records.csv").string(), csv);
    write_atomic((d / "summary.json").string(), summary.dump(2) + "\n");

    auto agg = aggregate(records);
    Manifest m;
    auto now = std::chrono::system_clock::now();
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : records) runs.push_back(r.seconds);
    m.data = {{"tool", "hc2"},
              {"version", tool_version()},
              {"kind", kind},
              {"config_hash", plan.hash()},
              {"config", plan.to_config()},
              {"seed", plan.seed},
              {"entries", agg.total},
              {"converged", agg.converged},
              {"converged_fraction", agg.converged_fraction()},
              {"constants", {{"E1", plan.E1}, {"E1_run", plan.e1_id}, {"E2", plan.E2}, {"E2_run", plan.e2_id}}},
              {"warnings", plan.warnings},
              {"outputs", {"config.cfg", "records.json", "records.csv", "summary.json"}},
              {"timing",
               {{"started", iso_time(now - std::chrono::duration_cast<std::chrono::system_clock::duration>(
                                                 std::chrono::duration<double>(wall_seconds)))},
                {"finished", iso_time(now)},
                {"wall_seconds", wall_seconds},
                {"run_seconds", runs}}}};
    write_atomic((d / "manifest.json").string(), m.data.dump(2) + "\n");
    return m;
}

std::vector<RunRecord> load_records(const std::string& dir) {
    std::ifstream f(fs::path(dir) / "records.json");
    if (!f) throw ConfigError(fmt::format("no records.json in '{}'", dir));
    nlohmann::json j;
    f >> j;
    std::vector<RunRecord> out;
    for (const auto& x : j) out.push_back(RunRecord::from_json(x));
    return out;
}

} // namespace hc2
