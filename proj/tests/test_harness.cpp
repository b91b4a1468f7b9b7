#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include "hc2/harness.hpp"

using namespace hc2;
namespace fs = std::filesystem;

namespace {

ExperimentPlan plan_from(const std::string& text) {
    return ExperimentPlan::from_config(parse_config(text, ExperimentPlan::keys()));
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("hc2_test_harness_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

} // namespace

TEST_CASE("empty config gives the default plan") {
    auto p = plan_from("");
    CHECK(p.kappa_list == std::vector<double>{25.0});
    CHECK(p.mu_list == std::vector<double>{0.0});
    CHECK(p.entries().size() == 1);
    CHECK(p.domain.kind == DomainKind::Disc);
}

TEST_CASE("config round trip and hash") {
    auto p = plan_from("# comment\ndomain = rectangle:2x1\nkappa_list = 15, 25, 35\nmu_list = 0,1\nres = 0.02\n"
                       "tol = 1e-7\ndelta = 0.4\ne1_run = 0.1525\ne2_run = 0.4276\nseed = 9\n");
    CHECK(p.entries().size() == 6);
    auto q = plan_from(p.to_config());
    CHECK(q.to_config() == p.to_config());
    CHECK(q.hash() == p.hash());
    CHECK(q.E1 == 0.1525);
    CHECK(q.e1_id == "literal");

    auto text = p.to_config();
    text.replace(text.find("restarts = 1"), 12, "restarts = 2");
    auto r = plan_from(text);
    CHECK(r.hash() != p.hash());
    auto s = plan_from("kappa_list = 15,25,35\n");
    CHECK(s.entries().size() == 3);
    CHECK(plan_from("kappa_list = 15, 25,35").hash() == s.hash());
}

TEST_CASE("invalid plans are rejected") {
    CHECK_THROWS_AS(plan_from("kapa_list = 3\n"), ConfigError);
    CHECK_THROWS_AS(plan_from("kappa_list = 4\nmu_list = 2\n"), ConfigError);  // H = 0
    CHECK_THROWS_AS(plan_from("tol = 2\n"), ConfigError);
    CHECK_THROWS_AS(plan_from("domain = triangle\n"), ConfigError);
    CHECK_THROWS_AS(plan_from("e1_run = /nonexistent/run\n"), ConfigError);
    // large mu is outside the regime but still solvable
    auto p = plan_from("kappa_list = 25\nmu_list = 4\n");
    CHECK(!p.warnings.empty());
}

TEST_CASE("predictions") {
    auto p = plan_from("kappa_list = 25\nmu_list = -1, 2\ne1_run = 0.15\ne2_run = 0.4\n");
    auto e = p.entries();
    REQUIRE(e.size() == 2);
    CHECK(e[0].H == doctest::Approx(30));
    CHECK(e[0].predicted == doctest::Approx(0.15 * 2 * pi * 25));
    CHECK(e[1].predicted == doctest::Approx((0.15 * 2 * pi + 4 * 0.4 * pi) * 25));
    CHECK(e[1].predicted_bulk == doctest::Approx(4 * 0.4 * pi * 0.25 * 25));
    CHECK(e[1].predicted_bulk + e[1].predicted_collar == doctest::Approx(e[1].predicted));
}

TEST_CASE("constants from a run directory") {
    auto dir = scratch("const");
    fs::create_directories(dir / "surface-e1-abc-000");
    std::ofstream(dir / "surface-e1-abc-000" / "result.json") << R"({"E1": 0.1517})";
    auto p = plan_from("e1_run = " + (dir / "surface-e1-abc-000").string() + "\n");
    CHECK(p.E1 == 0.1517);
    CHECK(p.e1_id == "surface-e1-abc-000");
    fs::remove_all(dir);
}

TEST_CASE("parallel run directories are distinct") {
    auto root = scratch("dirs");
    std::vector<std::string> got(8);
    std::vector<std::thread> ts;
    for (int k = 0; k < 8; ++k) ts.emplace_back([&, k] { got[k] = make_run_dir(root.string(), "gl", "0123456789abcdef"); });
    for (auto& t : ts) t.join();
    CHECK(std::set<std::string>(got.begin(), got.end()).size() == 8);
    for (auto& g : got) CHECK(fs::is_directory(g));
    fs::remove_all(root);
}

TEST_CASE("record serialisation round trip") {
    RunRecord r;
    r.kappa = 25;
    r.mu = 0.5;
    r.energy = -24.2;
    r.ratio = 1.01;
    r.converged = true;
    r.status = "converged";
    r.iterations = 17;
    r.seed = 3;
    r.restart_values = {-24.2, -24.19};
    CHECK(RunRecord::from_json(nlohmann::json::parse(r.to_json().dump())) == r);
    auto header = RunRecord::csv_header();
    auto row = r.csv_row();
    CHECK(std::count(header.begin(), header.end(), ',') == std::count(row.begin(), row.end(), ','));
}

TEST_CASE("above the nucleation field the solve returns the normal state") {
    auto p = plan_from("kappa_list = 4\nmu_list = -10\nres = 0.1\n");
    auto rec = run_expansion_experiment(p);
    REQUIRE(rec.size() == 1);
    CHECK(rec[0].converged);
    CHECK(rec[0].energy == 0.0);
    CHECK(rec[0].max_abs_psi == 0.0);
}

TEST_CASE("small solve, persistence and reproducibility") {
    auto p = plan_from("kappa_list = 6\nmu_list = 0, 0.5\nres = 0.08\ne1_run = 0.1525\ne2_run = 0.4276\n");
    auto a = run_expansion_experiment(p, 2);
    auto b = run_expansion_experiment(p, 1);
    REQUIRE(a.size() == 2);
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].converged);
        CHECK(a[k].energy < 0);
        CHECK(std::isfinite(a[k].ratio));
        CHECK(a[k].energy_bulk + a[k].energy_collar == doctest::Approx(a[k].energy));
        CHECK(a[k].max_abs_psi <= 1 + 1e-3);
        CHECK(a[k].energy == b[k].energy);
    }
    auto q = run_quartic_identity(a);
    REQUIRE(q.size() == 2);
    for (auto& row : q) CHECK(row.virial_error < 1e-3);

    auto root = scratch("persist");
    auto d1 = make_run_dir(root.string(), "expansion", p.hash());
    auto d2 = make_run_dir(root.string(), "expansion", p.hash());
    persist(d1, "expansion", p, a, {{"n", 2}}, 1.0);
    persist(d2, "expansion", p, b, {{"n", 2}}, 2.0);
    for (auto f : {"records.json", "records.csv", "config.cfg", "summary.json"})
        CHECK(slurp(fs::path(d1) / f) == slurp(fs::path(d2) / f));
    auto m1 = nlohmann::json::parse(slurp(fs::path(d1) / "manifest.json"));
    auto m2 = nlohmann::json::parse(slurp(fs::path(d2) / "manifest.json"));
    m1.erase("timing");
    m2.erase("timing");
    CHECK(m1 == m2);
    CHECK(m1["config_hash"] == p.hash());
    auto back = load_records(d1);
    REQUIRE(back.size() == 2);
    CHECK(back[1].energy == a[1].energy);
    fs::remove_all(root);
}
