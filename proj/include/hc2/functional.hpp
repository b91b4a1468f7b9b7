#pragma once

#include <functional>
#include <memory>
#include "json.hpp"

#include "hc2/fields.hpp"
#include "hc2/objective.hpp"

namespace hc2 {

/// Set of nodes used for sub-region energies (sharp node membership).
struct Region {
    enum class Kind { All, Disc, Collar, Interior } kind = Kind::All;
    double size = 0.0;  ///< disc radius | collar depth | interior depth

    static Region all() { return {}; }
    static Region disc(double radius) { return {Kind::Disc, radius}; }
    static Region collar(double depth) { return {Kind::Collar, depth}; }
    static Region interior(double depth) { return {Kind::Interior, depth}; }

    bool contains(const Grid& g, std::size_t i) const;
    void validate(const Grid& g) const;
};

struct EnergyParts {
    double kinetic = 0.0;       ///< sum_e c_e |U_e psi_b - psi_a|^2
    double condensation = 0.0;  ///< -kappa^2 int |psi|^2
    double quartic = 0.0;       ///< kappa^2/2 int |psi|^4
    double magnetic = 0.0;      ///< (kappa H)^2 int |curl(A - F)|^2
    double total() const { return kinetic + condensation + quartic + magnetic; }
    double reduced() const { return kinetic + condensation + quartic; }
};

EnergyParts energy_parts(const ComplexField& psi, const GaugeField& A, const GLParams& p,
                         const Region& region = Region::all());
double energy(const ComplexField& psi, const GaugeField& A, const GLParams& p, const Region& region = Region::all());
/// Energy without the magnetic term.
double reduced_energy(const ComplexField& psi, const GaugeField& A, const GLParams& p);
/// Per-node energy divided by the node weight; sum_i w_i e_i equals the energy.
std::vector<double> energy_density(const ComplexField& psi, const GaugeField& A, const GLParams& p);

struct GLGradient {
    std::vector<cplx> psi;      ///< dE = Re sum conj(g_i) dpsi_i
    std::vector<double> links;  ///< dE / d link_e
};
GLGradient gradient(const ComplexField& psi, const GaugeField& A, const GLParams& p);

struct ResidualReport {
    double energy = 0.0;
    double reduced_energy = 0.0;
    double quartic_integral = 0.0;  ///< int |psi|^4
    double max_abs_psi = 0.0;
    double curl_defect_sup = 0.0;   ///< max |curl A - 1|
    double kappa_curl_defect = 0.0;
    double l2_norm = 0.0;
    double l2_over_zeta = 0.0;
    double linf_interior = 0.0;     ///< max |psi| on dist >= kappa^{-1+delta}
    double linf_over_lambda = 0.0;
    double virial_defect = 0.0;     ///< |E0 + kappa^2/2 int |psi|^4|
    double gradient_norm = 0.0;

    nlohmann::json to_json() const;
};
ResidualReport residual_report(const ComplexField& psi, const GaugeField& A, const GLParams& p);

/// Full functional in (psi, links).  Variables: interleaved Re/Im psi, then links.
class GLObjective : public Objective {
public:
    GLObjective(GridPtr grid, const GLParams& p);
    std::size_t size() const override { return 2 * n_ + m_; }
    double evaluate(std::span<const double> x, std::span<double> g) const override;
    void precondition(std::span<const double> g, std::span<double> out) const override;
    bool refresh_preconditioner(std::span<const double> x) const override;

    std::vector<double> pack(const ComplexField& psi, const GaugeField& A) const;
    ComplexField unpack_psi(std::span<const double> x) const;
    GaugeField unpack_gauge(std::span<const double> x) const;
    double reduced(std::span<const double> x) const;

private:
    GridPtr grid_;
    GLParams p_;
    std::size_t n_, m_;
    std::vector<double> face_rhs_;  ///< circulation of F per face
    std::vector<double> diag_;
    struct Factors;
    mutable std::shared_ptr<Factors> fac_;  ///< sparse factorisations, rebuilt by refresh_preconditioner
};

/// psi-only functional with frozen links:
///   kin * sum_e c_e |U_e psi_b - psi_a|^2 + sum_i w_i (quad |psi_i|^2 + quart |psi_i|^4).
/// Pinned nodes stay zero.
class MagneticObjective : public Objective {
public:
    MagneticObjective(GridPtr grid, std::vector<cplx> phases, double kin, double quad, double quart);
    std::size_t size() const override { return 2 * grid_->num_nodes(); }
    double evaluate(std::span<const double> x, std::span<double> g) const override;
    void precondition(std::span<const double> g, std::span<double> out) const override;
    bool refresh_preconditioner(std::span<const double> x) const override;

    /// Per-node split of the energy (edge terms half to each end).
    std::vector<double> node_energy(std::span<const double> x) const;
    const Grid& grid() const { return *grid_; }
    const std::vector<cplx>& phases() const { return U_; }

private:
    GridPtr grid_;
    std::vector<cplx> U_;
    double kin_, quad_, quart_;
    std::vector<double> diag_;
    struct Factors;
    mutable std::shared_ptr<Factors> fac_;
};

std::vector<double> to_real(const std::vector<cplx>& v);
std::vector<cplx> to_complex(std::span<const double> x, std::size_t n);

} // namespace hc2
