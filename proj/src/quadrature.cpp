#include "rvmlab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rvmlab {

Quad1D gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
    Quad1D q;
    q.nodes.resize(n);
    q.weights.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            // Legendre recurrence for P_n(x) and P'_n(x)
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        double w = 2.0 / ((1.0 - x * x) * pp * pp);
        q.nodes[i] = -x;
        q.nodes[n - 1 - i] = x;
        q.weights[i] = w;
        q.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) q.nodes[n / 2] = 0.0;
    return q;
}

Quad1D composite_gauss(const std::vector<double>& edges, int pts) {
    return composite_gauss(edges, std::vector<int>(edges.size() - 1, pts));
}

Quad1D composite_gauss(const std::vector<double>& edges, const std::vector<int>& pts) {
    if (edges.size() < 2) throw std::invalid_argument("composite_gauss: need >= 2 edges");
    if (pts.size() + 1 != edges.size())
        throw std::invalid_argument("composite_gauss: one point count per panel");
    Quad1D q;
    for (size_t k = 0; k + 1 < edges.size(); ++k) {
        Quad1D base = gauss_legendre(pts[k]);
        double a = edges[k], b = edges[k + 1];
        double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (size_t i = 0; i < base.size(); ++i) {
            q.nodes.push_back(mid + half * base.nodes[i]);
            q.weights.push_back(half * base.weights[i]);
        }
    }
    return q;
}

namespace {
constexpr double kGradeSwitch = 32.0;
}

std::vector<double> geometric_edges(double r_max) {
    if (!(r_max > 0.0)) throw std::invalid_argument("geometric_edges: r_max must be > 0");
    std::vector<double> edges{0.0};
    double e = 1.0;
    while (e < r_max) {
        edges.push_back(e);
        e *= (e >= kGradeSwitch) ? 4.0 : 2.0;
    }
    edges.push_back(r_max);
    if (edges.size() >= 3 && edges[edges.size() - 2] >= r_max) edges.erase(edges.end() - 2);
    return edges;
}

std::vector<int> graded_points(const std::vector<double>& edges, int pts_inner) {
    std::vector<int> pts;
    int outer = std::max(6, (2 * pts_inner) / 3);
    for (size_t k = 0; k + 1 < edges.size(); ++k)
        pts.push_back(edges[k] >= kGradeSwitch ? outer : pts_inner);
    return pts;
}

Quad1D mirror_symmetric(const Quad1D& half) {
    Quad1D q;
    size_t n = half.size();
    q.nodes.resize(2 * n);
    q.weights.resize(2 * n);
    for (size_t i = 0; i < n; ++i) {
        q.nodes[i] = -half.nodes[n - 1 - i];
        q.weights[i] = half.weights[n - 1 - i];
        q.nodes[n + i] = half.nodes[i];
        q.weights[n + i] = half.weights[i];
    }
    return q;
}

}  // namespace rvmlab
