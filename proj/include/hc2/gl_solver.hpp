#pragma once

#include <cstdint>
#include <optional>

#include "hc2/bulk_energy.hpp"
#include "hc2/functional.hpp"
#include "hc2/surface_energy.hpp"

namespace hc2 {

struct GLInitOptions {
    bool use_trial = true;     ///< false: pure seeded noise
    double noise = 0.05;       ///< noise amplitude added to the trial state
    double rho = 0.25;         ///< boundary cut-off exponent (raised if eps^rho exceeds the collar)
    double bulk_rho = 1.3;     ///< bulk cut-off exponent
    int bulk_N = 1;            ///< flux quanta of the Abrikosov cell used for mu > 0
    double strip_h = 0.2;      ///< half-strip spacing for the trial profile
    double strip_T = 12.0;
    /// Wrap the mid-strip boundary layer once around the disc with the nearest integer
    /// winding instead of gluing two Dirichlet patches (whose seams relax slowly).
    bool seamless = true;
};

/// Deterministic part of the initial state, computed once per (grid, params).
struct TrialState {
    ComplexField psi;
    double rho_used = 0.0;
    int winding = 0;            ///< seamless variant only
    bool has_boundary = false, has_bulk = false;
    std::optional<SurfaceResult> profile;
    std::optional<AbrikosovResult> abrikosov;
};

/// Boundary trial on discs, plus mu^{1/2} times the bulk trial when mu > 0 and the grid
/// resolves the tiling.  Other domains get a zero trial.
TrialState make_trial_state(GridPtr grid, const GLParams& p, const GLInitOptions& opts = {});

/// Trial plus seeded noise with A = F; |psi| <= 1.  Byte-identical for a fixed seed.
std::vector<double> default_init(const GLObjective& obj, const TrialState& trial, std::uint64_t seed,
                                 const GLInitOptions& opts = {});

struct GLSolution {
    ComplexField psi;
    GaugeField A;
    ConvergenceReport report;
    ResidualReport residual;
    double trial_energy = 0.0;  ///< energy of the noise-free trial state with A = F
};

/// Best of cfg.restarts minimisations of the full functional from default_init.
GLSolution solve_gl(GridPtr grid, const GLParams& p, const SolverConfig& cfg, const GLInitOptions& opts = {});
GLSolution solve_gl(GridPtr grid, const GLParams& p, const SolverConfig& cfg, const TrialState& trial,
                    const GLInitOptions& opts = {});

/// Unit disc mesh used by the experiments: bulk spacing h, 8 nodes across the 1 / kappa collar.
GridPtr experiment_disc(double kappa, double h);

} // namespace hc2
