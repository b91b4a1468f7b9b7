#pragma once

#include <vector>

#include "hc2/fields.hpp"
#include "hc2/minimizer.hpp"

namespace hc2 {

/// Half-strip (-ell, ell) x (0, T) with potential E = (-tau, 0).  Dirichlet at sigma = +-ell
/// and tau = T, natural at tau = 0.
struct HalfStripProblem {
    double ell = 8.0;
    double T = 12.0;
    Resolution res{161, 121};
    bool symmetric_gauge = false;  ///< solve with (-tau/2, sigma/2), gauge equivalent to E
    /// Divide the discrete kinetic term by the discrete Landau level so that the bulk of the
    /// strip is exactly critical, as in the continuum; otherwise it condenses weakly.
    bool calibrate = true;

    /// Grid on (ell, T) with spacings as close as possible to (hx, hy).
    static HalfStripProblem with_spacing(double ell, double T, double hx, double hy);
    double hx() const { return 2 * ell / (res.n1 - 1); }
    double hy() const { return T / (res.n2 - 1); }
    void validate() const;
};

struct SurfaceResult {
    double ell = 0.0, T = 0.0;
    double d = 0.0;             ///< d(ell)
    double e1 = 0.0;            ///< -d / (2 ell)
    double tail = 0.0;          ///< weighted tail integral over tau >= 3
    double tail_mass = 0.0;     ///< int |phi|^2 over the last unit below tau = T
    bool rerun_advised = false; ///< tail_mass > 1e-8: T too small
    double l2 = 0.0;            ///< |phi|_2
    double kinetic_scale = 1.0; ///< 1 / discrete Landau level when calibrated
    ComplexField profile;
    ConvergenceReport report;
};

/// Minimises int |(grad - i E) phi|^2 - |phi|^2 + |phi|^4 / 2 over the half-strip.
SurfaceResult solve_halfstrip(const HalfStripProblem& prob, const SolverConfig& cfg);

/// Initial guess: the boundary-layer ansatz exp(-tau^2/2) exp(-i xi sigma) under a sine
/// envelope, plus seeded noise of relative size `noise`.
std::vector<double> halfstrip_init(const Grid& g, std::mt19937_64& rng, double noise = 0.05);

struct E1Fit {
    double E1 = 0.0;
    double M = 0.0;                 ///< -d / (2 ell) = E1 + M / ell
    std::vector<double> residuals;
};
/// Least-squares fit of -d / (2 ell) = E1 + M / ell.
E1Fit fit_E1(const std::vector<double>& ells, const std::vector<double>& d);

struct E1Estimate {
    std::vector<SurfaceResult> rows;
    E1Fit fit;
    double band = 0.0;              ///< largest |residual|
};
/// Every ell is solved with the same spacings; needs at least two distinct ell >= 1, largest >= 2 x smallest.
/// Throws SolverError if some d > 0 or d increases with ell beyond `tol`.
E1Estimate estimate_E1(const std::vector<double>& ells, double T, double hx, double hy, const SolverConfig& cfg,
                       double tol = 1e-6);

/// Boundary trial state on a disc: two boundary patches, each carrying the half-strip
/// profile at ell = |dOmega| / (4 eps) in the local gauge, cut off at depth eps^rho.
/// The profile must have been solved at that ell (checked to 1e-9).
ComplexField boundary_trial(GridPtr grid, const GLParams& p, double rho, const SurfaceResult& profile);

/// ell at which boundary_trial needs its profile.
double trial_ell(const DomainSpec& domain, const GLParams& p);

} // namespace hc2
