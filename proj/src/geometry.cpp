#include "rvmlab/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace rvmlab {

MeridianGrid build_grid(const MeridianDomain& domain, int n_r, int n_z) {
    domain.validate();
    if (n_r < 3 || n_z < 3)
        throw std::invalid_argument("build_grid: n_r and n_z must be >= 3");

    MeridianGrid g;
    g.domain = domain;
    g.n_r = n_r;
    g.n_z = n_z;
    g.h_r = domain.width_r() / (n_r - 1);
    g.h_z = domain.width_z() / (n_z - 1);
    g.kind.assign(static_cast<size_t>(n_r) * n_z, NodeKind::interior);

    for (int j = 0; j < n_z; ++j) {
        for (int i = 0; i < n_r; ++i) {
            bool on_z_face = (j == 0 || j == n_z - 1);
            bool on_outer = (i == n_r - 1);
            bool on_inner = (i == 0);
            NodeKind k = NodeKind::interior;
            if (on_z_face || on_outer) {
                k = NodeKind::boundary;
            } else if (on_inner) {
                // the inner column is a wall for a torus, the symmetry axis otherwise
                k = domain.touches_axis() ? NodeKind::axis : NodeKind::boundary;
            }
            g.kind[g.idx(i, j)] = k;
        }
    }
    return g;
}

Vec2 outward_normal(const MeridianGrid& grid, int i, int j) {
    if (grid.kind_at(i, j) != NodeKind::boundary)
        throw std::invalid_argument("outward_normal: node is not on the physical boundary");

    bool on_rlo = (i == 0 && !grid.domain.touches_axis());
    bool on_rhi = (i == grid.n_r - 1);
    bool on_zlo = (j == 0);
    bool on_zhi = (j == grid.n_z - 1);
    int faces = int(on_rlo) + int(on_rhi) + int(on_zlo) + int(on_zhi);
    if (faces > 1)
        throw std::invalid_argument("outward_normal: ambiguous normal at corner node");

    if (on_rhi) return {1.0, 0.0};
    if (on_rlo) return {-1.0, 0.0};
    if (on_zhi) return {0.0, 1.0};
    return {0.0, -1.0};
}

bool point_inside(const MeridianGrid& grid, double r, double z) {
    const MeridianDomain& d = grid.domain;
    return r >= d.r_min && r <= d.r_max && z >= d.z_min && z <= d.z_max;
}

double wall_distance(const MeridianGrid& grid, double r, double z) {
    if (!point_inside(grid, r, z))
        throw std::invalid_argument("wall_distance: point outside domain");
    const MeridianDomain& d = grid.domain;
    double dist = std::min({d.r_max - r, z - d.z_min, d.z_max - z});
    if (!d.touches_axis()) dist = std::min(dist, r - d.r_min);
    return dist;
}

double linf_norm(const GridField& f) {
    double m = 0.0;
    for (double v : f) m = std::max(m, std::fabs(v));
    return m;
}

double l2_norm_flat(const GridField& f, double h_r, double h_z) {
    double s = 0.0;
    for (double v : f) s += v * v;
    return std::sqrt(s * h_r * h_z);
}

}  // namespace rvmlab
