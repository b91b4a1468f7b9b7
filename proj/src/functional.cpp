#include "hc2/functional.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <fmt/format.h>

namespace hc2 {

bool Region::contains(const Grid& g, std::size_t i) const {
    switch (kind) {
    case Kind::All: return true;
    case Kind::Disc: return g.pos[i].norm() <= size;
    case Kind::Collar: return g.dist[i] <= size;
    case Kind::Interior: return g.dist[i] >= size;
    }
    return false;
}

void Region::validate(const Grid& g) const {
    if (kind == Kind::Disc) {
        if (g.domain.kind != DomainKind::Disc) throw ConfigError("disc sub-region needs a disc domain");
        if (!(size > 0 && size <= g.domain.a)) throw ConfigError(fmt::format("sub-disc radius {} not inside domain", size));
    }
    if ((kind == Kind::Collar || kind == Kind::Interior) && !(size >= 0))
        throw ConfigError("region depth must be non-negative");
}

std::vector<double> to_real(const std::vector<cplx>& v) {
    std::vector<double> x(2 * v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        x[2 * i] = v[i].real();
        x[2 * i + 1] = v[i].imag();
    }
    return x;
}

std::vector<cplx> to_complex(std::span<const double> x, std::size_t n) {
    std::vector<cplx> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = {x[2 * i], x[2 * i + 1]};
    return v;
}

namespace {

using SpC = Eigen::SparseMatrix<cplx>;
using SpR = Eigen::SparseMatrix<double>;

/// kin * (magnetic Laplacian with phases U) + diag(mass); pinned nodes decoupled.
SpC magnetic_matrix(const Grid& g, const std::vector<cplx>& U, double kin, const std::vector<double>& mass) {
    const int n = static_cast<int>(g.num_nodes());
    std::vector<Eigen::Triplet<cplx>> t;
    t.reserve(4 * g.num_edges() + n);
    for (int i = 0; i < n; ++i) t.emplace_back(i, i, g.pinned[i] ? 1.0 : mass[i]);
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
        int a = g.ea[e], b = g.eb[e];
        double c = kin * g.stiffness[e];
        if (!g.pinned[a]) t.emplace_back(a, a, c);
        if (!g.pinned[b]) t.emplace_back(b, b, c);
        if (!g.pinned[a] && !g.pinned[b]) {
            t.emplace_back(a, b, -c * U[e]);
            t.emplace_back(b, a, -c * std::conj(U[e]));
        }
    }
    SpC K(n, n);
    K.setFromTriplets(t.begin(), t.end());
    return K;
}

void solve_complex(const Eigen::SimplicialLDLT<SpC>& f, const Grid& g, const double* in, double* out) {
    const int n = static_cast<int>(g.num_nodes());
    Eigen::VectorXcd r(n);
    for (int i = 0; i < n; ++i) r[i] = {in[2 * i], in[2 * i + 1]};
    Eigen::VectorXcd z = f.solve(r);
    for (int i = 0; i < n; ++i) {
        bool p = g.pinned[i];
        out[2 * i] = p ? 0.0 : z[i].real();
        out[2 * i + 1] = p ? 0.0 : z[i].imag();
    }
}

} // namespace

struct GLObjective::Factors {
    Eigen::SimplicialLDLT<SpC> psi;
    Eigen::SimplicialLDLT<SpR> link;
    bool ready = false;
};

struct MagneticObjective::Factors {
    Eigen::SimplicialLDLT<SpC> psi;
    bool ready = false;
};

namespace {

std::vector<double> face_rhs(const Grid& g) {
    const auto& F = g.canonical_field();
    std::vector<double> r(g.faces.size());
    for (std::size_t f = 0; f < r.size(); ++f) {
        const Face& fc = g.faces[f];
        double s = 0;
        for (int k = 0; k < fc.count; ++k) s += fc.sign[k] * F.links[fc.edge[k]];
        r[f] = s;
    }
    return r;
}

/// Per-node energy contributions; parts summed only over nodes in region.
EnergyParts node_split(const ComplexField& psi, const GaugeField& A, const GLParams& p, const Region* region,
                       std::vector<double>* per_node) {
    const Grid& g = *psi.grid;
    const double k2 = p.kappa * p.kappa, c = p.coupling();
    const auto& v = psi.values;
    std::vector<char> in(g.num_nodes(), 1);
    if (region)
        for (std::size_t i = 0; i < in.size(); ++i) in[i] = region->contains(g, i);
    EnergyParts out;
    if (per_node) per_node->assign(g.num_nodes(), 0.0);
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
        int a = g.ea[e], b = g.eb[e];
        cplx U = std::polar(1.0, g.twist[e] - c * A.links[e]);
        double t = g.stiffness[e] * std::norm(U * v[b] - v[a]);
        out.kinetic += 0.5 * t * (in[a] + in[b]);
        if (per_node) {
            (*per_node)[a] += 0.5 * t;
            (*per_node)[b] += 0.5 * t;
        }
    }
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        double r2 = std::norm(v[i]);
        double c2 = -k2 * g.weight[i] * r2, q4 = 0.5 * k2 * g.weight[i] * r2 * r2;
        if (in[i]) {
            out.condensation += c2;
            out.quartic += q4;
        }
        if (per_node) (*per_node)[i] += c2 + q4;
    }
    const auto rhs = face_rhs(g);
    const double c2 = c * c;
    for (std::size_t f = 0; f < g.faces.size(); ++f) {
        const Face& fc = g.faces[f];
        double s = 0;
        for (int k = 0; k < fc.count; ++k) s += fc.sign[k] * A.links[fc.edge[k]];
        s -= rhs[f];
        double t = c2 * s * s / fc.area;
        int cnt = 0;
        for (int k = 0; k < fc.count; ++k) cnt += in[fc.node[k]];
        out.magnetic += t * cnt / fc.count;
        if (per_node)
            for (int k = 0; k < fc.count; ++k) (*per_node)[fc.node[k]] += t / fc.count;
    }
    return out;
}

} // namespace

EnergyParts energy_parts(const ComplexField& psi, const GaugeField& A, const GLParams& p, const Region& region) {
    check_same_grid(psi.grid, A.grid);
    region.validate(*psi.grid);
    return node_split(psi, A, p, region.kind == Region::Kind::All ? nullptr : &region, nullptr);
}

double energy(const ComplexField& psi, const GaugeField& A, const GLParams& p, const Region& region) {
    return energy_parts(psi, A, p, region).total();
}

double reduced_energy(const ComplexField& psi, const GaugeField& A, const GLParams& p) {
    return energy_parts(psi, A, p).reduced();
}

std::vector<double> energy_density(const ComplexField& psi, const GaugeField& A, const GLParams& p) {
    check_same_grid(psi.grid, A.grid);
    std::vector<double> e;
    node_split(psi, A, p, nullptr, &e);
    for (std::size_t i = 0; i < e.size(); ++i) e[i] /= psi.grid->weight[i];
    return e;
}

GLGradient gradient(const ComplexField& psi, const GaugeField& A, const GLParams& p) {
    check_same_grid(psi.grid, A.grid);
    GLObjective obj(psi.grid, p);
    auto x = obj.pack(psi, A);
    std::vector<double> g(x.size());
    obj.evaluate(x, g);
    GLGradient out;
    std::size_t n = psi.size();
    out.psi = to_complex(g, n);
    out.links.assign(g.begin() + 2 * n, g.end());
    return out;
}

nlohmann::json ResidualReport::to_json() const {
    return {{"energy", energy},
            {"reduced_energy", reduced_energy},
            {"quartic_integral", quartic_integral},
            {"max_abs_psi", max_abs_psi},
            {"curl_defect_sup", curl_defect_sup},
            {"kappa_curl_defect", kappa_curl_defect},
            {"l2_norm", l2_norm},
            {"l2_over_zeta", l2_over_zeta},
            {"linf_interior", linf_interior},
            {"linf_over_lambda", linf_over_lambda},
            {"virial_defect", virial_defect},
            {"gradient_norm", gradient_norm}};
}

ResidualReport residual_report(const ComplexField& psi, const GaugeField& A, const GLParams& p) {
    check_same_grid(psi.grid, A.grid);
    const Grid& g = *psi.grid;
    ResidualReport r;
    auto parts = energy_parts(psi, A, p);
    r.energy = parts.total();
    r.reduced_energy = parts.reduced();
    double q = 0;
    for (std::size_t i = 0; i < psi.size(); ++i) q += g.weight[i] * std::pow(std::norm(psi.values[i]), 2);
    r.quartic_integral = q;
    r.max_abs_psi = psi.max_abs();
    for (double cu : A.curl()) r.curl_defect_sup = std::max(r.curl_defect_sup, std::abs(cu - 1.0));
    r.kappa_curl_defect = p.kappa * r.curl_defect_sup;
    r.l2_norm = psi.norm2();
    r.l2_over_zeta = r.l2_norm / p.zeta();
    double depth = std::pow(p.kappa, -1.0 + p.delta);
    for (std::size_t i = 0; i < psi.size(); ++i)
        if (g.dist[i] >= depth) r.linf_interior = std::max(r.linf_interior, std::abs(psi.values[i]));
    r.linf_over_lambda = r.linf_interior / p.lambda();
    r.virial_defect = std::abs(r.reduced_energy + 0.5 * p.kappa * p.kappa * q);
    auto gr = gradient(psi, A, p);
    double gn = 0;
    for (auto v : gr.psi) gn += std::norm(v);
    for (double v : gr.links) gn += v * v;
    r.gradient_norm = std::sqrt(gn);
    return r;
}

// ---------------------------------------------------------------- GLObjective

GLObjective::GLObjective(GridPtr grid, const GLParams& p)
    : grid_(std::move(grid)), p_(p), n_(grid_->num_nodes()), m_(grid_->num_edges()) {
    p_.validate();
    face_rhs_ = face_rhs(*grid_);
    const Grid& g = *grid_;
    const double c2 = p.coupling() * p.coupling();
    diag_.assign(size(), 0.0);
    for (std::size_t i = 0; i < n_; ++i) diag_[2 * i] = 2 * p.kappa * p.kappa * g.weight[i];
    for (std::size_t e = 0; e < m_; ++e) {
        diag_[2 * g.ea[e]] += 2 * g.stiffness[e];
        diag_[2 * g.eb[e]] += 2 * g.stiffness[e];
        diag_[2 * n_ + e] = 2 * c2 * g.stiffness[e];
    }
    for (std::size_t i = 0; i < n_; ++i) diag_[2 * i + 1] = diag_[2 * i];
    for (const Face& f : g.faces)
        for (int k = 0; k < f.count; ++k) diag_[2 * n_ + f.edge[k]] += 2 * c2 / f.area;
}

std::vector<double> GLObjective::pack(const ComplexField& psi, const GaugeField& A) const {
    check_same_grid(psi.grid, grid_);
    check_same_grid(A.grid, grid_);
    std::vector<double> x = to_real(psi.values);
    x.insert(x.end(), A.links.begin(), A.links.end());
    for (std::size_t i = 0; i < n_; ++i)
        if (grid_->pinned[i]) x[2 * i] = x[2 * i + 1] = 0.0;
    return x;
}

ComplexField GLObjective::unpack_psi(std::span<const double> x) const {
    return ComplexField(grid_, to_complex(x, n_));
}

GaugeField GLObjective::unpack_gauge(std::span<const double> x) const {
    // nodal values: canonical F plus least-squares reconstruction of the link change
    GaugeField A = GaugeField::canonical(grid_);
    const Grid& g = *grid_;
    std::vector<double> dl(m_);
    for (std::size_t e = 0; e < m_; ++e) dl[e] = x[2 * n_ + e] - A.links[e];
    for (std::size_t i = 0; i < n_; ++i) {
        double m11 = 0, m12 = 0, m22 = 0, b1 = 0, b2 = 0;
        for (int q = g.adj_offset[i]; q < g.adj_offset[i + 1]; ++q) {
            int e = g.adj_edge[q];
            Vec2 d = g.path[e].p1 - g.path[e].p0;
            double w = 1.0 / d.dot(d);
            m11 += w * d.x * d.x;
            m12 += w * d.x * d.y;
            m22 += w * d.y * d.y;
            b1 += w * d.x * dl[e];
            b2 += w * d.y * dl[e];
        }
        double det = m11 * m22 - m12 * m12;
        if (std::abs(det) > 1e-300) A.nodal[i] += Vec2{(m22 * b1 - m12 * b2) / det, (-m12 * b1 + m11 * b2) / det};
    }
    A.links.assign(x.begin() + 2 * n_, x.end());
    return A;
}

double GLObjective::evaluate(std::span<const double> x, std::span<double> gout) const {
    const Grid& g = *grid_;
    const double k2 = p_.kappa * p_.kappa, c = p_.coupling(), c2 = c * c;
    std::fill(gout.begin(), gout.end(), 0.0);
    const double* links = x.data() + 2 * n_;
    double* glinks = gout.data() + 2 * n_;
    double E = 0;
    for (std::size_t e = 0; e < m_; ++e) {
        int a = g.ea[e], b = g.eb[e];
        cplx U = std::polar(1.0, g.twist[e] - c * links[e]);
        cplx pa{x[2 * a], x[2 * a + 1]}, pb{x[2 * b], x[2 * b + 1]};
        cplx Upb = U * pb;
        cplx D = Upb - pa;
        double ce = g.stiffness[e];
        E += ce * std::norm(D);
        cplx gb = 2 * ce * std::conj(U) * D;
        gout[2 * a] -= 2 * ce * D.real();
        gout[2 * a + 1] -= 2 * ce * D.imag();
        gout[2 * b] += gb.real();
        gout[2 * b + 1] += gb.imag();
        glinks[e] += 2 * ce * c * (std::conj(D) * Upb).imag();
    }
    for (std::size_t i = 0; i < n_; ++i) {
        double re = x[2 * i], im = x[2 * i + 1];
        double r2 = re * re + im * im, w = g.weight[i];
        E += w * k2 * (-r2 + 0.5 * r2 * r2);
        double f = 2 * w * k2 * (r2 - 1.0);
        gout[2 * i] += f * re;
        gout[2 * i + 1] += f * im;
        if (g.pinned[i]) gout[2 * i] = gout[2 * i + 1] = 0.0;
    }
    for (std::size_t f = 0; f < g.faces.size(); ++f) {
        const Face& fc = g.faces[f];
        double s = 0;  // same summation order as face_rhs, so s = 0 exactly for F
        for (int k = 0; k < fc.count; ++k) s += fc.sign[k] * links[fc.edge[k]];
        s -= face_rhs_[f];
        E += c2 * s * s / fc.area;
        double d = 2 * c2 * s / fc.area;
        for (int k = 0; k < fc.count; ++k) glinks[fc.edge[k]] += d * fc.sign[k];
    }
    return E;
}

void GLObjective::precondition(std::span<const double> g, std::span<double> out) const {
    if (!fac_ || !fac_->ready) {
        for (std::size_t k = 0; k < g.size(); ++k) out[k] = g[k] / diag_[k];
        return;
    }
    solve_complex(fac_->psi, *grid_, g.data(), out.data());
    Eigen::Map<const Eigen::VectorXd> gl(g.data() + 2 * n_, m_);
    Eigen::Map<Eigen::VectorXd>(out.data() + 2 * n_, m_) = fac_->link.solve(gl);
}

// Block-diagonal model Hessian at x:
//   psi:   2 (K(links) + kappa^2 M (1/2 + |psi|^2))
//   links: 2 c^2 (C^T A^-1 C + diag(c_e (|psi|^2_e + 1e-2)))
bool GLObjective::refresh_preconditioner(std::span<const double> x) const {
    const Grid& g = *grid_;
    const double k2 = p_.kappa * p_.kappa, c = p_.coupling(), c2 = c * c;
    std::vector<cplx> U(m_);
    std::vector<double> r2(n_), mass(n_);
    for (std::size_t i = 0; i < n_; ++i) {
        r2[i] = x[2 * i] * x[2 * i] + x[2 * i + 1] * x[2 * i + 1];
        mass[i] = 2 * k2 * g.weight[i] * (0.5 + r2[i]);
    }
    for (std::size_t e = 0; e < m_; ++e) U[e] = std::polar(1.0, g.twist[e] - c * x[2 * n_ + e]);
    if (!fac_) fac_ = std::make_shared<Factors>();
    SpC Kp = magnetic_matrix(g, U, 2.0, mass);
    std::vector<Eigen::Triplet<double>> t;
    for (std::size_t e = 0; e < m_; ++e)
        t.emplace_back(e, e, 2 * c2 * g.stiffness[e] * (0.5 * (r2[g.ea[e]] + r2[g.eb[e]]) + 1e-2));
    for (const Face& f : g.faces)
        for (int a = 0; a < f.count; ++a)
            for (int b = 0; b < f.count; ++b) t.emplace_back(f.edge[a], f.edge[b], 2 * c2 * f.sign[a] * f.sign[b] / f.area);
    SpR Kl(m_, m_);
    Kl.setFromTriplets(t.begin(), t.end());
    if (!fac_->ready) {
        fac_->psi.analyzePattern(Kp);
        fac_->link.analyzePattern(Kl);
    }
    fac_->psi.factorize(Kp);
    fac_->link.factorize(Kl);
    fac_->ready = fac_->psi.info() == Eigen::Success && fac_->link.info() == Eigen::Success;
    return fac_->ready;
}

double GLObjective::reduced(std::span<const double> x) const {
    std::vector<double> g(size());
    double E = evaluate(x, g);
    const Grid& gr = *grid_;
    const double c2 = p_.coupling() * p_.coupling();
    for (std::size_t f = 0; f < gr.faces.size(); ++f) {
        const Face& fc = gr.faces[f];
        double s = 0;
        for (int k = 0; k < fc.count; ++k) s += fc.sign[k] * x[2 * n_ + fc.edge[k]];
        s -= face_rhs_[f];
        E -= c2 * s * s / fc.area;
    }
    return E;
}

// ---------------------------------------------------------------- MagneticObjective

MagneticObjective::MagneticObjective(GridPtr grid, std::vector<cplx> phases, double kin, double quad, double quart)
    : grid_(std::move(grid)), U_(std::move(phases)), kin_(kin), quad_(quad), quart_(quart) {
    const Grid& g = *grid_;
    if (U_.size() != g.num_edges()) throw GridMismatch("phase count does not match grid");
    std::size_t n = g.num_nodes();
    diag_.assign(2 * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) diag_[2 * i] = 2 * std::abs(quad) * g.weight[i];
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
        diag_[2 * g.ea[e]] += 2 * kin * g.stiffness[e];
        diag_[2 * g.eb[e]] += 2 * kin * g.stiffness[e];
    }
    for (std::size_t i = 0; i < n; ++i) diag_[2 * i + 1] = diag_[2 * i];
}

double MagneticObjective::evaluate(std::span<const double> x, std::span<double> gout) const {
    const Grid& g = *grid_;
    std::fill(gout.begin(), gout.end(), 0.0);
    double E = 0;
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
        int a = g.ea[e], b = g.eb[e];
        cplx pa{x[2 * a], x[2 * a + 1]}, pb{x[2 * b], x[2 * b + 1]};
        cplx D = U_[e] * pb - pa;
        double ce = kin_ * g.stiffness[e];
        E += ce * std::norm(D);
        cplx gb = 2 * ce * std::conj(U_[e]) * D;
        gout[2 * a] -= 2 * ce * D.real();
        gout[2 * a + 1] -= 2 * ce * D.imag();
        gout[2 * b] += gb.real();
        gout[2 * b + 1] += gb.imag();
    }
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        double re = x[2 * i], im = x[2 * i + 1];
        double r2 = re * re + im * im, w = g.weight[i];
        E += w * (quad_ * r2 + quart_ * r2 * r2);
        double f = 2 * w * (quad_ + 2 * quart_ * r2);
        gout[2 * i] += f * re;
        gout[2 * i + 1] += f * im;
        if (g.pinned[i]) gout[2 * i] = gout[2 * i + 1] = 0.0;
    }
    return E;
}

void MagneticObjective::precondition(std::span<const double> g, std::span<double> out) const {
    if (!fac_ || !fac_->ready) {
        for (std::size_t k = 0; k < g.size(); ++k) out[k] = g[k] / diag_[k];
        return;
    }
    solve_complex(fac_->psi, *grid_, g.data(), out.data());
}

// Model Hessian 2 (kin K + M (|quad| / 2 + 2 quart |psi|^2)).
bool MagneticObjective::refresh_preconditioner(std::span<const double> x) const {
    const Grid& g = *grid_;
    const std::size_t n = g.num_nodes();
    std::vector<double> mass(n);
    for (std::size_t i = 0; i < n; ++i) {
        double r2 = x[2 * i] * x[2 * i] + x[2 * i + 1] * x[2 * i + 1];
        mass[i] = 2 * g.weight[i] * (0.5 * std::abs(quad_) + 2 * quart_ * r2);
    }
    if (!fac_) fac_ = std::make_shared<Factors>();
    SpC K = magnetic_matrix(g, U_, 2 * kin_, mass);
    if (!fac_->ready) fac_->psi.analyzePattern(K);
    fac_->psi.factorize(K);
    fac_->ready = fac_->psi.info() == Eigen::Success;
    return fac_->ready;
}

std::vector<double> MagneticObjective::node_energy(std::span<const double> x) const {
    const Grid& g = *grid_;
    std::vector<double> e(g.num_nodes(), 0.0);
    for (std::size_t k = 0; k < g.num_edges(); ++k) {
        int a = g.ea[k], b = g.eb[k];
        cplx pa{x[2 * a], x[2 * a + 1]}, pb{x[2 * b], x[2 * b + 1]};
        double t = kin_ * g.stiffness[k] * std::norm(U_[k] * pb - pa);
        e[a] += 0.5 * t;
        e[b] += 0.5 * t;
    }
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
        double r2 = x[2 * i] * x[2 * i] + x[2 * i + 1] * x[2 * i + 1];
        e[i] += g.weight[i] * (quad_ * r2 + quart_ * r2 * r2);
    }
    return e;
}

} // namespace hc2
