#pragma once

#include <vector>

#include "hc2/geometry.hpp"

namespace hc2 {

/// Ginzburg-Landau parameters.  mu = (kappa - H) / sqrt(kappa).
struct GLParams {
    double kappa = 1.0;
    double H = 1.0;
    double delta = 0.5;

    static GLParams from_mu(double kappa, double mu, double delta = 0.5);

    double mu() const { return (kappa - H) / std::sqrt(kappa); }
    double coupling() const { return kappa * H; }
    double eps() const { return 1.0 / std::sqrt(kappa * H); }
    double gamma() const { return kappa / H - 1.0; }
    /// max(|1 - kappa/H|^{1/2}, kappa^{-1/4})
    double zeta() const;
    /// max(|kappa/H - 1|^{1/2}, kappa^{-1+delta})
    double lambda() const;
    void validate() const;  ///< throws ConfigError unless kappa > 0, H > 0, 0 < delta < 1
};

struct ComplexField {
    GridPtr grid;
    std::vector<cplx> values;

    ComplexField() = default;
    ComplexField(GridPtr g, cplx fill = 0.0) : grid(std::move(g)), values(grid->num_nodes(), fill) {}
    ComplexField(GridPtr g, std::vector<cplx> v);

    std::size_t size() const { return values.size(); }
    double norm2() const;      ///< sqrt(sum w |psi|^2)
    double max_abs() const;
    std::vector<double> abs() const;
};

/// Vector potential: nodal values plus line integrals on every edge.  The links are
/// what the energy sees; nodal values are for output and interpolation.
struct GaugeField {
    GridPtr grid;
    std::vector<Vec2> nodal;
    std::vector<double> links;

    /// Links by midpoint quadrature of the nodal values.
    static GaugeField from_nodal(GridPtr g, std::vector<Vec2> nodal);
    /// Links by Gauss quadrature of an analytic potential along each edge path.
    static GaugeField from_function(GridPtr g, const std::function<Vec2(Vec2)>& A);
    /// A0 = (-x2, x1)/2 with exact links.
    static GaugeField symmetric(GridPtr g);
    /// The canonical field F of the domain.
    static GaugeField canonical(GridPtr g);

    /// exp(i (twist - c * link)) per edge.
    std::vector<cplx> link_phases(double coupling) const;
    /// Circulation / area on every face.
    std::vector<double> curl() const;
};

/// Nodal (grad - i c A) psi from edge differences (least squares per node).
/// Each entry holds the two complex components.
struct CovariantGradient {
    std::vector<cplx> d1, d2;
};
CovariantGradient covariant_gradient(const ComplexField& psi, const GaugeField& A, double coupling);

/// psi' = exp(i c chi) psi, A' = A + grad chi.  Links shift by chi(b) - chi(a) exactly,
/// so every link-based quantity is invariant.
std::pair<ComplexField, GaugeField> gauge_transform(const ComplexField& psi, const GaugeField& A,
                                                    const std::vector<double>& chi, double coupling);

/// Kernel of the lowest-Landau-level projector for unit field in the symmetric gauge,
/// holomorphic convention (matches grad - i A0):
/// K(x, y) = exp(i (x2 y1 - x1 y2) / 2) exp(-|x - y|^2 / 4) / (2 pi).
cplx lll_kernel(Vec2 x, Vec2 y);

/// Applies the projector on a Cartesian patch by direct quadrature.  The field must be
/// negligible near the patch edges.
ComplexField lll_project(const ComplexField& f);
/// Fraction of int |f|^2 carried within `margin` of the patch edge; the projection is
/// unreliable when this exceeds 1e-8.
double patch_edge_mass(const ComplexField& f, double margin = 4.0);

/// Quintic smoothstep: 0 for t <= 0, 1 for t >= 1.
double smoothstep(double t);

void check_same_grid(const GridPtr& a, const GridPtr& b);

} // namespace hc2
