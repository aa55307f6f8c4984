#ifndef RVMLAB_GEOMETRY_HPP
#define RVMLAB_GEOMETRY_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace rvmlab {

// Rectangular meridian cross-section of an axisymmetric solid:
// solid torus when r_min > 0, solid cylinder when r_min = 0.
struct MeridianDomain {
    double r_min = 1.0;
    double r_max = 2.0;
    double z_min = 0.0;
    double z_max = 1.0;

    bool touches_axis() const { return r_min == 0.0; }
    double sup_r() const { return r_max; }   // d = sup of r over the solid
    double width_r() const { return r_max - r_min; }
    double width_z() const { return z_max - z_min; }

    void validate() const {
        if (r_min < 0.0) throw std::invalid_argument("domain: r_min must be >= 0");
        if (!(r_max > r_min)) throw std::invalid_argument("domain: r_max must exceed r_min");
        if (!(z_max > z_min)) throw std::invalid_argument("domain: z_max must exceed z_min");
    }
};

enum class NodeKind : unsigned char {
    interior,
    boundary,   // physical boundary of the 3-D solid; Dirichlet 0 for both fields
    axis        // r = 0 column of an axis-touching domain (excluding its corners)
};

struct Vec2 {
    double r = 0.0;
    double z = 0.0;
};

// Structured tensor grid on the meridian rectangle with per-node classification.
// Immutable after construction; safe to share across threads.
struct MeridianGrid {
    MeridianDomain domain;
    int n_r = 0;
    int n_z = 0;
    double h_r = 0.0;
    double h_z = 0.0;
    std::vector<NodeKind> kind;   // n_r * n_z, radial index fastest

    int idx(int i, int j) const { return j * n_r + i; }
    int n_nodes() const { return n_r * n_z; }
    double r(int i) const { return domain.r_min + i * h_r; }
    double z(int j) const { return domain.z_min + j * h_z; }
    NodeKind kind_at(int i, int j) const { return kind[idx(i, j)]; }
    bool is_unknown(int i, int j, bool axis_is_unknown) const {
        NodeKind k = kind_at(i, j);
        return k == NodeKind::interior || (axis_is_unknown && k == NodeKind::axis);
    }
};

using GridField = std::vector<double>;

MeridianGrid build_grid(const MeridianDomain& domain, int n_r, int n_z);

// Outward unit normal of the meridian rectangle at a physical-boundary node.
// Corner nodes are rejected ("ambiguous normal"); reflection logic treats a
// corner hit as two successive face reflections instead.
Vec2 outward_normal(const MeridianGrid& grid, int i, int j);

// Distance from an interior point to the physical boundary of the 3-D solid.
// The r = 0 edge of an axis-touching domain is not a boundary.
double wall_distance(const MeridianGrid& grid, double r, double z);

bool point_inside(const MeridianGrid& grid, double r, double z);

// Field helpers shared across modules.
double linf_norm(const GridField& f);
double l2_norm_flat(const GridField& f, double h_r, double h_z);

}  // namespace rvmlab

#endif
