#pragma once

#include <cstdint>
#include <vector>

#include "hc2/eigensolver.hpp"
#include "hc2/fields.hpp"
#include "hc2/minimizer.hpp"

namespace hc2 {

/// Flux-N periodic cell [0, Rx) x [0, Ry), Rx Ry = 2 pi N, with
/// u(z1 + Rx, z2) = e^{i Rx z2 / 2} u(z1, z2) and u(z1, z2 + Ry) = e^{-i Ry z1 / 2} u(z1, z2).
struct MagneticCell {
    int N = 0;
    double Rx = 0.0, Ry = 0.0;
    GridPtr grid;

    /// Square cell (aspect = 1) or Rx / Ry = aspect, nodes_per_side along the longer side.
    static MagneticCell make(int N, int nodes_per_side, double aspect = 1.0);
    /// Square cell from its side; throws ConfigError unless R^2 / (2 pi) is an integer.
    static MagneticCell from_side(double R, int nodes_per_side);
    double area() const { return Rx * Ry; }
    /// Link phases of A0 including the wrap twists (coupling 1).
    std::vector<cplx> phases() const;
    /// Quasi-periodic continuation of nodal values u to any point of the plane
    /// (gauge-covariant bilinear interpolation inside the cell).
    cplx extend(const std::vector<cplx>& u, Vec2 y) const;
    /// Product of the wrap phases around the cell corner; equals 1 under quantisation.
    cplx commutator() const;
};

/// Discrete P_R = -(grad - i A0)^2 as the pencil K u = lambda M u.
class PROperator {
public:
    explicit PROperator(const MagneticCell& cell);
    /// out = M^{-1} K u
    void apply(const std::vector<cplx>& u, std::vector<cplx>& out) const;
    /// Q_R(u) = sum_e c_e |U_e u_b - u_a|^2
    double form(const std::vector<cplx>& u) const;
    double rayleigh(const std::vector<cplx>& u) const;
    cplx inner(const std::vector<cplx>& a, const std::vector<cplx>& b) const;  ///< sum w conj(a) b
    HermitianPencil pencil() const;
    const MagneticCell& cell() const { return cell_; }

private:
    MagneticCell cell_;
    std::vector<cplx> U_;
};

struct LLLBasis {
    MagneticCell cell;
    std::vector<std::vector<cplx>> vectors;   ///< the N cluster vectors, M-orthonormal
    std::vector<std::vector<cplx>> higher;    ///< remaining computed eigenvectors
    std::vector<double> eigenvalues;          ///< N + 2 lowest
    std::vector<double> residuals;
    int multiplicity = 0;
    double mu1 = 0.0, mu2 = 0.0;              ///< lowest and first above the cluster
    double gram_error = 0.0;
    int iterations = 0;
};

/// N + 2 lowest eigenpairs; throws SolverError naming the spectrum unless the
/// lowest cluster has exactly N members.
LLLBasis lowest_eigenspace(const MagneticCell& cell, double tol = 1e-10, std::uint64_t seed = 1);

/// Bottom of the spectrum of the discrete unit-field Landau operator at spacing about h
/// (1 - h^2/8 + O(h^4)), from a flux-1 cell whose side holds a whole number of nodes.
double discrete_landau_level(double h);

/// |(d1 + i d2 + (x1 + i x2)/2) u| / |u| with fourth-order covariant differences.
double holomorphic_residual(const MagneticCell& cell, const std::vector<cplx>& u);

/// T_jklm = sum_x w conj(u_j u_k) u_l u_m, stored as a (N^2) x (N^2) matrix [jk][lm].
struct QuarticTensor {
    int N = 0;
    Eigen::MatrixXcd T;
    double A(const std::vector<cplx>& c) const;  ///< int |sum c_j u_j|^4
    /// A and its real gradient (d/dRe + i d/dIm) per coefficient.
    double A_grad(const std::vector<cplx>& c, std::vector<cplx>& g) const;
};
QuarticTensor quartic_tensor(const LLLBasis& basis);

struct AbrikosovResult {
    int N = 0;
    double Rx = 0.0, Ry = 0.0, area = 0.0;
    double cR = 0.0;          ///< min F_R (better of the two estimators)
    double cR_descent = 0.0;  ///< coefficient descent
    double cR_ray = 0.0;      ///< -1 / (2 beta_min)
    double beta = 0.0;
    double mean_sq = 0.0;     ///< (1/|K|) int |f_R|^2
    double mean_quartic = 0.0;///< (1/|K|) int |f_R|^4
    double moment = 0.0;      ///< sum of the two
    std::vector<cplx> coeffs; ///< optimal coefficients (descent)
    std::vector<cplx> profile;///< f_R at the cell nodes
    bool agree = false;       ///< |cR_descent - cR_ray| <= 1e-6
    bool in_bounds = false;   ///< -1/2 <= cR <= 0
    double mu1 = 0.0, mu2 = 0.0;
};

AbrikosovResult minimize_abrikosov(const LLLBasis& basis, int starts = 12, std::uint64_t seed = 1);

struct E2Estimate {
    std::vector<AbrikosovResult> rows;
    double E2 = 0.0;     ///< -c(R) at the largest N
    double drift = 0.0;  ///< relative change between the two largest N
    bool warning = false;
};
/// Ns increasing; res nodes per cell side.
E2Estimate estimate_E2_lll(const std::vector<int>& Ns, int res, std::uint64_t seed = 1);

struct ThermoResult {
    double b = 0.0, R = 0.0;
    double g = 0.0;             ///< min G / |K_R| on the Dirichlet square
    double ratio = 0.0;         ///< |g| / (1 - b)^2
    double bound = 0.0;         ///< (1 - b)^2 / 2
    double lambda_h = 1.0;      ///< bottom of the discrete spectrum at this spacing
    double ratio_spectral = 0.0;///< |g| / (1 - b lambda_h)^2, the discrete analogue of ratio
    double h = 0.0;
    ConvergenceReport report;
};
/// Dirichlet square of side about R; the spacing is adjusted so that a flux-1 cell
/// holds a whole number of nodes (lambda_h is computed on that cell).
ThermoResult estimate_E2_thermo(double b, double R, double h, const SolverConfig& cfg);

struct ThermoExtrapolation {
    ThermoResult small, large;
    double g_inf = 0.0;         ///< g + P / R fitted through the two sizes
    double ratio = 0.0;         ///< |g_inf| / (1 - b)^2
    double ratio_spectral = 0.0;///< |g_inf| / (1 - b lambda_h)^2
};
/// Perimeter extrapolation from sides R and 1.5 R.
ThermoExtrapolation estimate_E2_thermo_extrapolated(double b, double R, double h, const SolverConfig& cfg);

struct ThermoContinuum {
    ThermoExtrapolation coarse, fine;
    double g0 = 0.0;      ///< g_inf extrapolated to zero spacing, assuming an h^2 error
    double ratio = 0.0;   ///< |g0| / (1 - b)^2
};
/// Perimeter extrapolation at spacings h_coarse and h_fine, then Richardson in h^2.
ThermoContinuum estimate_E2_thermo_continuum(double b, double R, double h_coarse, double h_fine,
                                             const SolverConfig& cfg);

struct GapFilterReport {
    std::vector<double> gammas;
    std::vector<double> l2_ratio;   ///< max over trials of |f - P1 f| / |f|
    std::vector<double> l2_bound;   ///< sqrt(2 gamma)
    std::vector<double> l4_ratio;   ///< information only
    std::vector<double> rayleigh_error;
    double lll_residual = 0.0;      ///< |f - P1 f| for f in the LLL
    double slope = 0.0;             ///< d log l2_ratio / d log gamma
    bool bound_holds = false;
};
GapFilterReport gap_filter_check(const LLLBasis& basis, const std::vector<double>& gammas, int trials,
                                 std::uint64_t seed = 1);

/// kappa^{-1/4} h(R^rho dist / 2) f_R(x sqrt(kappa H)) in the A0 gauge; the caller multiplies by mu^{1/2}.
ComplexField bulk_trial(GridPtr grid, const GLParams& p, const AbrikosovResult& f, const MagneticCell& cell, double rho);

} // namespace hc2
