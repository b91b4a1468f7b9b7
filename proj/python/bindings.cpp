#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hc2/bulk_energy.hpp"
#include "hc2/gl_solver.hpp"
#include "hc2/harness.hpp"
#include "hc2/surface_energy.hpp"

namespace py = pybind11;
using namespace hc2;

namespace {

py::array_t<std::complex<double>> to_array(const std::vector<cplx>& v) {
    py::array_t<std::complex<double>> a(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
}

py::dict node_arrays(const Grid& g) {
    py::array_t<double> x(g.num_nodes()), y(g.num_nodes()), w(g.num_nodes());
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        x.mutable_data()[i] = g.pos[i].x;
        y.mutable_data()[i] = g.pos[i].y;
        w.mutable_data()[i] = g.weight[i];
    }
    py::dict d;
    d["x"] = x;
    d["y"] = y;
    d["weight"] = w;
    return d;
}

py::dict surface_dict(const SurfaceResult& r) {
    py::dict d;
    d["ell"] = r.ell;
    d["T"] = r.T;
    d["d"] = r.d;
    d["e1"] = r.e1;
    d["tail"] = r.tail;
    d["tail_mass"] = r.tail_mass;
    d["converged"] = r.report.converged;
    d["iterations"] = r.report.iterations;
    return d;
}

py::dict abrikosov_dict(const AbrikosovResult& a) {
    py::dict d;
    d["N"] = a.N;
    d["R"] = a.Rx;
    d["cR"] = a.cR;
    d["cR_descent"] = a.cR_descent;
    d["cR_ray"] = a.cR_ray;
    d["beta"] = a.beta;
    d["mu1"] = a.mu1;
    d["mu2"] = a.mu2;
    return d;
}

} // namespace

PYBIND11_MODULE(_hc2, m) {
    m.doc() = "Ginzburg-Landau surface and bulk energies near the second critical field";
    m.attr("__version__") = tool_version();

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

    m.def("discrete_landau_level", &discrete_landau_level, py::arg("h"));

    m.def(
        "lowest_eigenspace",
        [](int N, int res, std::uint64_t seed) {
            auto b = lowest_eigenspace(MagneticCell::make(N, res), 1e-10, seed);
            py::dict d;
            d["multiplicity"] = b.multiplicity;
            d["mu1"] = b.mu1;
            d["mu2"] = b.mu2;
            d["eigenvalues"] = b.eigenvalues;
            double hol = 0;
            for (const auto& v : b.vectors) hol = std::max(hol, holomorphic_residual(b.cell, v));
            d["holomorphic_residual"] = hol;
            return d;
        },
        py::arg("N"), py::arg("res") = 48, py::arg("seed") = 1);

    m.def(
        "abrikosov",
        [](int N, int res, int starts, std::uint64_t seed) {
            py::gil_scoped_release release;
            auto a = minimize_abrikosov(lowest_eigenspace(MagneticCell::make(N, res), 1e-10, seed), starts, seed);
            py::gil_scoped_acquire acquire;
            return abrikosov_dict(a);
        },
        py::arg("N"), py::arg("res") = 48, py::arg("starts") = 12, py::arg("seed") = 1);

    m.def(
        "estimate_E2",
        [](const std::vector<int>& Ns, int res, std::uint64_t seed) {
            auto e = estimate_E2_lll(Ns, res, seed);
            py::dict d;
            d["E2"] = e.E2;
            d["drift"] = e.drift;
            py::list rows;
            for (const auto& r : e.rows) rows.append(abrikosov_dict(r));
            d["rows"] = rows;
            return d;
        },
        py::arg("Ns"), py::arg("res") = 48, py::arg("seed") = 1);

    m.def(
        "halfstrip",
        [](double ell, double T, double h, double tol) {
            SolverConfig cfg;
            cfg.rel_tol = tol;
            cfg.restarts = 1;
            return surface_dict(solve_halfstrip(HalfStripProblem::with_spacing(ell, T, h, h), cfg));
        },
        py::arg("ell"), py::arg("T") = 12.0, py::arg("h") = 0.1, py::arg("tol") = 1e-7);

    m.def(
        "estimate_E1",
        [](const std::vector<double>& ells, double T, double h, double tol) {
            SolverConfig cfg;
            cfg.rel_tol = tol;
            cfg.restarts = 1;
            auto e = estimate_E1(ells, T, h, h, cfg);
            py::dict d;
            d["E1"] = e.fit.E1;
            d["M"] = e.fit.M;
            py::list rows;
            for (const auto& r : e.rows) rows.append(surface_dict(r));
            d["rows"] = rows;
            return d;
        },
        py::arg("ells"), py::arg("T") = 12.0, py::arg("h") = 0.1, py::arg("tol") = 1e-7);

    m.def(
        "solve_gl",
        [](double kappa, double H, const std::string& domain, double res, double tol, int restarts,
           std::uint64_t seed) {
            ExperimentPlan plan;
            plan.domain = parse_domain(domain);
            plan.res = res;
            GLParams p{kappa, H, plan.delta};
            p.validate();
            auto grid = plan.grid_for(kappa, H);
            SolverConfig cfg;
            cfg.rel_tol = tol;
            cfg.restarts = restarts;
            cfg.seed = seed;
            cfg.max_iter = 200000;
            GLSolution s;
            {
                py::gil_scoped_release release;
                s = solve_gl(grid, p, cfg);
            }
            py::dict d = node_arrays(*grid);
            d["psi"] = to_array(s.psi.values);
            d["energy"] = s.residual.energy;
            d["quartic"] = s.residual.quartic_integral;
            d["max_abs_psi"] = s.residual.max_abs_psi;
            d["virial_defect"] = s.residual.virial_defect;
            d["linf_interior"] = s.residual.linf_interior;
            d["converged"] = s.report.converged;
            d["iterations"] = s.report.iterations;
            d["trial_energy"] = s.trial_energy;
            return d;
        },
        py::arg("kappa"), py::arg("H"), py::arg("domain") = "disc", py::arg("res") = 0.0, py::arg("tol") = 1e-6,
        py::arg("restarts") = 1, py::arg("seed") = 1);

    m.def(
        "lll_project",
        [](py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast> f, double L) {
            if (f.ndim() != 2) throw ConfigError("lll_project expects a 2D array indexed [y, x]");
            const int ny = static_cast<int>(f.shape(0)), nx = static_cast<int>(f.shape(1));
            auto grid = build_grid(DomainSpec::rectangle(L, L * (ny - 1) / double(nx - 1)), {nx, ny});
            ComplexField in(grid);
            const auto& c = *grid->cart;
            for (int j = 0; j < ny; ++j)
                for (int i = 0; i < nx; ++i) in.values[c.index(i, j)] = f.at(j, i);
            auto out = lll_project(in);
            py::array_t<std::complex<double>> r({ny, nx});
            for (int j = 0; j < ny; ++j)
                for (int i = 0; i < nx; ++i) r.mutable_at(j, i) = out.values[c.index(i, j)];
            return r;
        },
        py::arg("f"), py::arg("L"),
        "Project f, sampled on the centred square patch of side L (rows are y), onto the lowest Landau level.");

    m.def(
        "parse_plan",
        [](const std::string& text) {
            auto plan = ExperimentPlan::from_config(parse_config(text, ExperimentPlan::keys()));
            py::dict d;
            d["config"] = plan.to_config();
            d["hash"] = plan.hash();
            d["warnings"] = plan.warnings;
            py::list entries;
            for (const auto& e : plan.entries()) {
                py::dict x;
                x["kappa"] = e.kappa;
                x["mu"] = e.mu;
                x["H"] = e.H;
                x["predicted"] = e.predicted;
                entries.append(x);
            }
            d["entries"] = entries;
            return d;
        },
        py::arg("text"));
}
