#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "hc2/common.hpp"

namespace hc2 {

enum class DomainKind { Disc, Rectangle, HalfStrip, Cell };

/// Tagged domain description.  Discs and rectangles are centred at the origin,
/// the half-strip is (-ell, ell) x (0, T) and a magnetic cell is [0, Rx) x [0, Ry).
struct DomainSpec {
    DomainKind kind = DomainKind::Disc;
    double a = 1.0;  ///< radius | width | ell | Rx
    double b = 1.0;  ///< -      | height | T  | Ry
    int flux = 0;    ///< cells only

    static DomainSpec disc(double radius);
    static DomainSpec rectangle(double width, double height);
    static DomainSpec half_strip(double ell, double T);
    /// Square cell of side R carrying N flux quanta; R^2 must equal 2 pi N.
    static DomainSpec cell(double R, int N);
    /// Rectangular cell with Rx / Ry = aspect and Rx Ry = 2 pi N.
    static DomainSpec quantized_cell(int N, double aspect = 1.0);

    double area() const;
    double perimeter() const;
    double inradius() const;
    bool smooth_boundary() const { return kind == DomainKind::Disc; }
    std::string name() const;
};

/// n1 x n2 meaning depends on the domain: disc = (radial rings, boundary ring nodes),
/// Cartesian domains = (nodes along x, nodes along y).
struct Resolution {
    int n1 = 0;
    int n2 = 0;
    double boundary_spacing = 0.0;  ///< disc only: radial spacing at r = radius (0 = uniform)
    double stretch = 1.08;          ///< disc only: geometric growth of radial spacing inward
    bool dirichlet = false;         ///< rectangle only: pin every boundary node
};

enum class PathKind : std::uint8_t { Segment, Arc };

/// Geometric path of a mesh edge.  Arcs are centred at the origin and run counterclockwise.
struct EdgePath {
    PathKind kind = PathKind::Segment;
    Vec2 p0, p1;  ///< endpoints (p1 may be a periodic image of the target node)
    double radius = 0.0, angle0 = 0.0, dangle = 0.0;

    Vec2 point(double u) const;    ///< u in [0, 1]
    Vec2 tangent(double u) const;  ///< d point / du
    double length() const;
    /// Line integral of a vector field along the path (7-point Gauss-Legendre).
    double integrate(const std::function<Vec2(Vec2)>& field) const;
    /// Exact line integral of A0 = (-y, x) / 2.
    double integrate_A0() const;
};

struct Face {
    std::array<int, 4> edge{-1, -1, -1, -1};
    std::array<int, 4> node{-1, -1, -1, -1};
    std::array<std::int8_t, 4> sign{0, 0, 0, 0};
    int count = 0;
    double area = 0.0;
};

struct CartesianLayout {
    int nx = 0, ny = 0;
    double x0 = 0.0, y0 = 0.0, hx = 0.0, hy = 0.0;
    bool periodic = false;
    int index(int i, int j) const { return j * nx + i; }
};

struct RingLayout {
    std::vector<double> radius;  ///< radius[0] = 0 is the centre node
    std::vector<int> offset;     ///< first node of each ring
    std::vector<int> count;      ///< nodes per ring (count[0] = 1)
};

/// Line integrals and nodal values of the canonical field F (curl F = 1, div F = 0, F.nu = 0).
struct CanonicalField {
    std::vector<double> stream;  ///< stream function phi, Laplace phi = 1, phi = 0 on the boundary
    std::vector<Vec2> nodal;     ///< F = (-d2 phi, d1 phi) at the nodes
    std::vector<double> links;   ///< edge line integrals of F
};

/// Mesh with lumped quadrature weights, gauge links on edges and oriented faces for curls.
class Grid {
public:
    DomainSpec domain;
    Resolution resolution;

    std::vector<Vec2> pos;
    std::vector<double> weight;
    std::vector<double> dist;          ///< distance to the physical boundary
    std::vector<std::uint8_t> boundary;
    std::vector<std::uint8_t> pinned;  ///< Dirichlet nodes (value fixed to zero)
    std::vector<Vec2> normal;          ///< outward unit normal on boundary nodes, zero elsewhere

    std::vector<int> ea, eb;           ///< edge endpoints
    std::vector<double> stiffness;     ///< kinetic weight of each edge
    std::vector<double> twist;         ///< extra phase for quasi-periodic wrap edges
    std::vector<EdgePath> path;

    std::vector<Face> faces;

    std::optional<CartesianLayout> cart;
    std::optional<RingLayout> rings;

    // node -> incident edges (CSR)
    std::vector<int> adj_offset, adj_edge;

    std::size_t num_nodes() const { return pos.size(); }
    std::size_t num_edges() const { return ea.size(); }
    double total_weight() const;

    /// Exact line integrals of A0 = (-y, x)/2 on every edge.
    std::vector<double> links_A0() const;
    /// Line integrals of a smooth vector field on every edge.
    std::vector<double> links_of(const std::function<Vec2(Vec2)>& field) const;

    /// Pin every boundary node (homogeneous Dirichlet condition).
    void pin_boundary();

    /// Canonical field F, computed on first use.
    const CanonicalField& canonical_field() const;

    /// Bilinear interpolation of nodal data on Cartesian grids (no phase handling).
    cplx interpolate(const std::vector<cplx>& values, Vec2 x) const;

    void finalize();  ///< builds adjacency; called by the builders

private:
    mutable std::once_flag f_once_;
    mutable std::shared_ptr<CanonicalField> f_cache_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Builds the mesh for a domain.  Throws ConfigError for unsupported combinations.
GridPtr build_grid(const DomainSpec& spec, const Resolution& res);

/// Graded disc mesh resolving a collar of width collar_width with at least
/// nodes_in_collar radial nodes, bulk spacing h.
GridPtr build_disc_for(double radius, double h, double collar_width, int nodes_in_collar);

/// Boundary-adapted coordinates (s, t): x = gamma(s) + t nu(s), nu the inward normal.
struct BoundaryChart {
    DomainSpec domain;
    double length = 0.0;  ///< |boundary|
    double t0 = 0.0;      ///< collar depth
    bool smooth = true;

    Vec2 gamma(double s) const;
    Vec2 inward_normal(double s) const;
    double curvature(double s) const;
    Vec2 map(double s, double t) const;
    /// Returns (s, t); only meaningful inside the collar.
    std::pair<double, double> inverse(Vec2 x) const;
    double jacobian(double s, double t) const { return 1.0 - t * curvature(s); }
};

BoundaryChart boundary_chart(const DomainSpec& spec);

/// Computes F from the stream function.  Only disc and rectangle domains.
CanonicalField build_F(const Grid& grid);

/// Discrete circulation of a link field around face f divided by its area.
double face_curl(const Grid& grid, const std::vector<double>& links, std::size_t f);

/// Discrete divergence sum_e stiffness * link at node i (outgoing positive).
double node_divergence(const Grid& grid, const std::vector<double>& links, std::size_t i);

/// CSV with header x,y,weight,value.
void write_field_csv(std::ostream& os, const Grid& grid, const std::vector<double>& values);

} // namespace hc2
