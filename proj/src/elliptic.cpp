#include "rvmlab/elliptic.hpp"

#include <cmath>

namespace rvmlab {

namespace {

struct Stencil {
    double diag, west, east, south, north;
};

// coefficients of the row at node i (z-direction is uniform); boundary
// neighbors enter through the input field values (Dirichlet data)
Stencil row_stencil(const MeridianGrid& g, OperatorKind kind, int i, bool axis_row) {
    const double hr2 = g.h_r * g.h_r;
    const double hz2 = g.h_z * g.h_z;
    Stencil s{0, 0, 0, 0, 0};
    if (axis_row) {
        // control volume [0, h/2]: radial part 4(g0 - g1)/h^2
        s.diag = 4.0 / hr2 + 2.0 / hz2;
        s.east = -4.0 / hr2;
    } else {
        const double r = g.r(i);
        const double rw = r - 0.5 * g.h_r;
        const double re = r + 0.5 * g.h_r;
        s.west = -rw / (r * hr2);
        s.east = -re / (r * hr2);
        s.diag = (rw + re) / (r * hr2) + 2.0 / hz2;
        if (kind == OperatorKind::laplace_plus_inv_r2) s.diag += 1.0 / (r * r);
    }
    s.south = -1.0 / hz2;
    s.north = -1.0 / hz2;
    return s;
}

}  // namespace

EllipticOperator::EllipticOperator(OperatorKind kind, const MeridianGrid& grid)
    : kind_(kind), grid_(&grid) {
    axis_unknown_ = grid.domain.touches_axis() && kind == OperatorKind::laplace;
    unknown_of_.assign(grid.n_nodes(), -1);
    for (int j = 0; j < grid.n_z; ++j) {
        for (int i = 0; i < grid.n_r; ++i) {
            if (grid.is_unknown(i, j, axis_unknown_)) {
                unknown_of_[grid.idx(i, j)] = static_cast<int>(unknowns_.size());
                unknowns_.push_back(grid.idx(i, j));
            }
        }
    }
    diag_.resize(unknowns_.size());
    vol_.resize(unknowns_.size());
    for (size_t u = 0; u < unknowns_.size(); ++u) {
        int k = unknowns_[u];
        int i = k % grid.n_r;
        int j = k / grid.n_r;
        bool axis_row = axis_unknown_ && grid.kind_at(i, j) == NodeKind::axis;
        diag_[u] = row_stencil(grid, kind, i, axis_row).diag;
        vol_[u] = axis_row ? (grid.h_r * grid.h_r / 8.0) * grid.h_z
                           : grid.r(i) * grid.h_r * grid.h_z;
    }
}

GridField EllipticOperator::apply(const GridField& g) const {
    if (g.size() != static_cast<size_t>(grid_->n_nodes()))
        throw std::invalid_argument("elliptic apply: dimension mismatch");
    const MeridianGrid& gr = *grid_;
    GridField out = g;   // non-unknown rows pass through untouched
    const int n_u = n_unknowns();
#pragma omp parallel for schedule(static)
    for (int u = 0; u < n_u; ++u) {
        int k = unknowns_[u];
        int i = k % gr.n_r;
        int j = k / gr.n_r;
        bool axis_row = axis_unknown_ && gr.kind_at(i, j) == NodeKind::axis;
        Stencil s = row_stencil(gr, kind_, i, axis_row);
        double v = s.diag * g[k];
        if (!axis_row) v += s.west * g[gr.idx(i - 1, j)];
        v += s.east * g[gr.idx(i + 1, j)];
        v += s.south * g[gr.idx(i, j - 1)];
        v += s.north * g[gr.idx(i, j + 1)];
        out[k] = v;
    }
    return out;
}

void EllipticOperator::apply_unknowns(const std::vector<double>& x, std::vector<double>& y) const {
    const MeridianGrid& gr = *grid_;
    const int n_u = n_unknowns();
#pragma omp parallel for schedule(static)
    for (int u = 0; u < n_u; ++u) {
        int k = unknowns_[u];
        int i = k % gr.n_r;
        int j = k / gr.n_r;
        bool axis_row = axis_unknown_ && gr.kind_at(i, j) == NodeKind::axis;
        Stencil s = row_stencil(gr, kind_, i, axis_row);
        double v = s.diag * x[u];
        auto val = [&](int ii, int jj) {
            int p = unknown_of_[gr.idx(ii, jj)];
            return p >= 0 ? x[p] : 0.0;   // Dirichlet neighbors are zero in solves
        };
        if (!axis_row) v += s.west * val(i - 1, j);
        v += s.east * val(i + 1, j);
        v += s.south * val(i, j - 1);
        v += s.north * val(i, j + 1);
        y[u] = v;
    }
}

double EllipticOperator::inner(const GridField& a, const GridField& b) const {
    double s = 0.0;
    for (size_t u = 0; u < unknowns_.size(); ++u) s += a[unknowns_[u]] * b[unknowns_[u]] * vol_[u];
    return s;
}

GridField EllipticOperator::solve_dirichlet(const GridField& rhs) const {
    if (rhs.size() != static_cast<size_t>(grid_->n_nodes()))
        throw std::invalid_argument("solve_dirichlet: dimension mismatch");
    const int n = n_unknowns();
    std::vector<double> b(n), x(n, 0.0), r(n), z(n), p(n), ap(n);
    for (int u = 0; u < n; ++u) b[u] = rhs[unknowns_[u]];

    auto dot = [&](const std::vector<double>& a, const std::vector<double>& c) {
        double s = 0.0;
        for (int u = 0; u < n; ++u) s += a[u] * c[u] * vol_[u];
        return s;
    };

    r = b;
    double bnorm = std::sqrt(dot(b, b));
    GridField out(grid_->n_nodes(), 0.0);
    if (bnorm == 0.0) return out;

    for (int u = 0; u < n; ++u) z[u] = r[u] / diag_[u];
    p = z;
    double rz = dot(r, z);
    const long cap = 10L * n;
    double rnorm = bnorm;
    for (long it = 0; it < cap; ++it) {
        apply_unknowns(p, ap);
        double pap = dot(p, ap);
        if (pap <= 0.0) throw SolverFailure("CG: operator lost positive definiteness", rnorm);
        double alpha = rz / pap;
        for (int u = 0; u < n; ++u) {
            x[u] += alpha * p[u];
            r[u] -= alpha * ap[u];
        }
        rnorm = std::sqrt(dot(r, r));
        if (rnorm <= solve_rtol * bnorm) {
            for (int u = 0; u < n; ++u) out[unknowns_[u]] = x[u];
            return out;
        }
        for (int u = 0; u < n; ++u) z[u] = r[u] / diag_[u];
        double rz_new = dot(r, z);
        double beta = rz_new / rz;
        rz = rz_new;
        for (int u = 0; u < n; ++u) p[u] = z[u] + beta * p[u];
    }
    throw SolverFailure("CG: no convergence within iteration cap", rnorm / bnorm);
}

GridField lifted_laplace_restriction(const EllipticOperator& plain, const GridField& g,
                                     double phi0) {
    if (plain.kind() != OperatorKind::laplace)
        throw std::invalid_argument("lifted_laplace_restriction: pass the laplace operator");
    const MeridianGrid& gr = plain.grid();
    const std::complex<double> phase(std::cos(phi0), std::sin(phi0));
    GridField re(gr.n_nodes()), im(gr.n_nodes());
    for (int k = 0; k < gr.n_nodes(); ++k) {
        std::complex<double> lifted = g[k] * phase;
        re[k] = lifted.real();
        im[k] = lifted.imag();
    }
    GridField lre = plain.apply(re);
    GridField lim = plain.apply(im);
    GridField out(gr.n_nodes(), 0.0);
    for (int j = 0; j < gr.n_z; ++j) {
        for (int i = 0; i < gr.n_r; ++i) {
            int k = gr.idx(i, j);
            if (!gr.is_unknown(i, j, false)) continue;
            double r = gr.r(i);
            // -(1/r^2) d^2/dphi^2 of e^{i phi} contributes +(1/r^2) * lifted
            std::complex<double> v(lre[k] + re[k] / (r * r), lim[k] + im[k] / (r * r));
            out[k] = (v / phase).real();
        }
    }
    return out;
}

}  // namespace rvmlab
