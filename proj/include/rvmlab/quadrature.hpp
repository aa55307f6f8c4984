#ifndef RVMLAB_QUADRATURE_HPP
#define RVMLAB_QUADRATURE_HPP

#include <vector>

namespace rvmlab {

struct Quad1D {
    std::vector<double> nodes;
    std::vector<double> weights;
    size_t size() const { return nodes.size(); }
};

// Gauss-Legendre nodes/weights on [-1, 1].
Quad1D gauss_legendre(int n);

// Composite Gauss-Legendre: pts-point rule on each [edges[k], edges[k+1]].
Quad1D composite_gauss(const std::vector<double>& edges, int pts);
Quad1D composite_gauss(const std::vector<double>& edges, const std::vector<int>& pts);

// Panel edges 0, 1, 2, 4, ..., 32, 128, 512, ... (octaves first, then x4),
// ending exactly at r_max. Integrand structure lives in the inner octaves;
// the far tail is smooth and needs few points per panel.
std::vector<double> geometric_edges(double r_max);

// Per-panel point counts: pts_inner below the grading switch, thinner beyond.
std::vector<int> graded_points(const std::vector<double>& edges, int pts_inner);

// Mirror a rule on [0, V] into a rule on [-V, V] that is exactly symmetric
// node-by-node, so odd integrands cancel in floating point.
Quad1D mirror_symmetric(const Quad1D& half);

}  // namespace rvmlab

#endif
