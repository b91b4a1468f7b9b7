#include "doctest.h"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args) {
    std::string cmd = std::string(HC2_CLI) + " " + args + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p);
    std::array<char, 4096> buf;
    while (auto n = fread(buf.data(), 1, buf.size(), p)) r.out.append(buf.data(), n);
    int st = pclose(p);
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("hc2_test_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

std::vector<fs::path> run_dirs(const fs::path& root) {
    std::vector<fs::path> d;
    for (auto& e : fs::directory_iterator(root)) d.push_back(e.path());
    std::sort(d.begin(), d.end());
    return d;
}

} // namespace

TEST_CASE("usage errors exit with 2") {
    CHECK(run("").code == 2);
    CHECK(run("no-such-command").code == 2);
    CHECK(run("gl-min --no-such-flag 1").code == 2);
    CHECK(run("--help").code == 0);
}

TEST_CASE("bulk-e2 prints the cell table") {
    auto root = scratch("bulk");
    auto r = run("--out " + root.string() + " bulk-e2 --N 1 --res 32");
    CHECK(r.code == 0);
    CHECK(r.out.find("N,R,mu1,mu2,cR,beta") != std::string::npos);
    CHECK(r.out.find("eigenvalues:") != std::string::npos);
    CHECK(r.out.find("beta") != std::string::npos);
    auto dirs = run_dirs(root);
    REQUIRE(dirs.size() == 1);
    auto result = nlohmann::json::parse(slurp(dirs[0] / "result.json"));
    // beta_1 = 1.18 on the flux-1 square cell, so -c = 1 / (2 beta)
    CHECK(result["E2"].get<double>() == doctest::Approx(1 / (2 * 1.18034)).epsilon(0.01));

    // flux quantisation: N = 3 is accepted, R = 2.5 is not
    CHECK(run("--out " + root.string() + " bulk-e2 --N 3 --res 36").code == 0);
    CHECK(run("--out " + root.string() + " bulk-e2 --R 2.5").code == 2);
    CHECK(run("--out " + root.string() + " bulk-e2 --N 1 --R 2.5066282746310002").code == 2);
    fs::remove_all(root);
}

TEST_CASE("config files: unknown keys are named, flags win") {
    auto root = scratch("cfg");
    std::ofstream(root / "bad.cfg") << "N = 1\nflux = 3\n";
    std::ofstream(root / "good.cfg") << "# one cell\nN = 4\nres = 24\n";
    CHECK(run("--out " + root.string() + " bulk-e2 --config " + (root / "bad.cfg").string()).code == 2);
    auto r = run("--out " + (root / "runs").string() + " bulk-e2 --config " + (root / "good.cfg").string() + " --N 1");
    CHECK(r.code == 0);
    auto dirs = run_dirs(root / "runs");
    REQUIRE(dirs.size() == 1);
    auto cfg = slurp(dirs[0] / "config.cfg");
    CHECK(cfg.find("N = 1\n") != std::string::npos);
    CHECK(cfg.find("res = 24\n") != std::string::npos);
    CHECK(cfg.find("starts = 12\n") != std::string::npos);  // defaults are echoed
    fs::remove_all(root);
}

TEST_CASE("gl-min writes a reproducible run directory") {
    auto root = scratch("gl");
    const std::string args = "--out " + root.string() + " --seed 7 --quiet gl-min --domain disc --kappa 6 --H 6 --res 0.08";
    REQUIRE(run(args).code == 0);
    REQUIRE(run(args).code == 0);
    auto dirs = run_dirs(root);
    REQUIRE(dirs.size() == 2);
    for (auto f : {"manifest.json", "fields.csv", "diagnostics.json", "config.cfg"}) CHECK(fs::exists(dirs[0] / f));
    auto m1 = nlohmann::json::parse(slurp(dirs[0] / "manifest.json"));
    auto m2 = nlohmann::json::parse(slurp(dirs[1] / "manifest.json"));
    m1.erase("timing");
    m2.erase("timing");
    CHECK(m1 == m2);
    CHECK(slurp(dirs[0] / "fields.csv") == slurp(dirs[1] / "fields.csv"));
    CHECK(slurp(dirs[0] / "diagnostics.json") == slurp(dirs[1] / "diagnostics.json"));
    auto d = nlohmann::json::parse(slurp(dirs[0] / "diagnostics.json"));
    CHECK(d["residual"]["energy"].get<double>() < 0);
    CHECK(slurp(dirs[0] / "fields.csv").rfind("x,y,weight,re_psi,im_psi,abs_psi\n", 0) == 0);
    fs::remove_all(root);
}

TEST_CASE("surface-e1 table") {
    auto root = scratch("surf");
    auto r = run("--out " + root.string() + " surface-e1 --ell 4,8 --T 8 --h 0.25");
    CHECK(r.code == 0);
    CHECK(r.out.rfind("ell,d_ell,e1_est,tail,iters\n", 0) == 0);
    auto dirs = run_dirs(root);
    REQUIRE(dirs.size() == 1);
    auto result = nlohmann::json::parse(slurp(dirs[0] / "result.json"));
    CHECK(result["E1"].get<double>() > 0);
    CHECK(result["E1"].get<double>() < 0.5);
    CHECK(run("--out " + root.string() + " surface-e1 --ell 4 --T 3").code == 2);
    fs::remove_all(root);
}

TEST_CASE("verify sweep feeds on a plan file and a constants run") {
    auto root = scratch("verify");
    fs::create_directories(root / "e1run");
    std::ofstream(root / "e1run" / "result.json") << R"({"E1": 0.1517})";
    std::ofstream(root / "plan.cfg") << "kappa_list = 6\nmu_list = 0\nres = 0.08\ne1_run = "
                                     << (root / "e1run").string() << "\n";
    auto r = run("--out " + (root / "runs").string() + " --jobs 1 verify-expansion --plan " + (root / "plan.cfg").string());
    CHECK(r.code == 0);
    auto dirs = run_dirs(root / "runs");
    REQUIRE(dirs.size() == 1);
    for (auto f : {"manifest.json", "records.json", "records.csv", "summary.json", "config.cfg"})
        CHECK(fs::exists(dirs[0] / f));
    auto m = nlohmann::json::parse(slurp(dirs[0] / "manifest.json"));
    CHECK(m["constants"]["E1_run"] == "e1run");
    auto s = nlohmann::json::parse(slurp(dirs[0] / "summary.json"));
    CHECK(s["converged_fraction"].get<double>() == 1.0);
    CHECK(std::isfinite(s["rows"][0]["ratio"].get<double>()));

    std::ofstream(root / "bad.cfg") << "kappa_lst = 6\n";
    CHECK(run("--out " + (root / "runs").string() + " verify-quartic --plan " + (root / "bad.cfg").string()).code == 2);
    fs::remove_all(root);
}

TEST_CASE("project-lll") {
    auto root = scratch("lll");
    auto r = run("--out " + root.string() + " project-lll --demo zbar");
    CHECK(r.code == 0);
    auto dirs = run_dirs(root);
    REQUIRE(dirs.size() == 1);
    auto rep = nlohmann::json::parse(slurp(dirs[0] / "report.json"));
    CHECK(rep["retained_fraction"].get<double>() < 1e-6);
    CHECK(run("--out " + root.string() + " project-lll --demo nope").code == 2);
    fs::remove_all(root);
}
