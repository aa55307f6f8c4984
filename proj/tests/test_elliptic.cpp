#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "rvmlab/elliptic.hpp"

using namespace rvmlab;

namespace {

MeridianGrid torus_grid(int n) { return build_grid({1.0, 2.0, 0.0, 1.0}, n, n); }

// manufactured solution and its analytic image under the two operators
struct Manufactured {
    GridField exact, rhs_laplace, rhs_lifted;
};

Manufactured manufacture(const MeridianGrid& g) {
    Manufactured m;
    m.exact.assign(g.n_nodes(), 0.0);
    m.rhs_laplace.assign(g.n_nodes(), 0.0);
    m.rhs_lifted.assign(g.n_nodes(), 0.0);
    const MeridianDomain& d = g.domain;
    double a = M_PI / d.width_r(), b = M_PI / d.width_z();
    for (int j = 0; j < g.n_z; ++j)
        for (int i = 0; i < g.n_r; ++i) {
            double r = g.r(i), z = g.z(j);
            double S = std::sin(a * (r - d.r_min)), C = std::cos(a * (r - d.r_min));
            double T = std::sin(b * (z - d.z_min));
            int k = g.idx(i, j);
            m.exact[k] = S * T;
            m.rhs_laplace[k] = (a * a + b * b) * S * T - (a / r) * C * T;
            m.rhs_lifted[k] = m.rhs_laplace[k] + S * T / (r * r);
        }
    return m;
}

double l2_err(const MeridianGrid& g, const GridField& x, const GridField& y) {
    double s = 0.0;
    for (int k = 0; k < g.n_nodes(); ++k) {
        double d = x[k] - y[k];
        s += d * d;
    }
    return std::sqrt(s * g.h_r * g.h_z);
}

}  // namespace

TEST_CASE("apply on a quadratic in z is exact") {
    MeridianGrid g = torus_grid(9);
    EllipticOperator lap(OperatorKind::laplace, g);
    GridField f(g.n_nodes());
    for (int j = 0; j < g.n_z; ++j)
        for (int i = 0; i < g.n_r; ++i) f[g.idx(i, j)] = g.z(j) * g.z(j);
    GridField out = lap.apply(f);
    for (int j = 1; j < g.n_z - 1; ++j)
        for (int i = 1; i < g.n_r - 1; ++i)
            CHECK(out[g.idx(i, j)] == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(lap.apply(GridField(g.n_nodes(), 0.0)) == GridField(g.n_nodes(), 0.0));
    CHECK_THROWS(lap.apply(GridField(3, 0.0)));
}

TEST_CASE("lifted operator equals -Delta of the phase-lifted field") {
    MeridianGrid g = torus_grid(65);
    EllipticOperator lap(OperatorKind::laplace, g);
    EllipticOperator lifted(OperatorKind::laplace_plus_inv_r2, g);
    GridField f(g.n_nodes());
    for (int j = 0; j < g.n_z; ++j)
        for (int i = 0; i < g.n_r; ++i)
            f[g.idx(i, j)] = std::sin(2.3 * g.r(i)) * std::cos(1.7 * g.z(j)) + 0.3 * g.r(i);
    GridField direct = lifted.apply(f);
    double scale = linf_norm(direct);
    for (double phi0 : {0.0, 0.7, 2.9}) {
        GridField via_lift = lifted_laplace_restriction(lap, f, phi0);
        for (int j = 1; j < g.n_z - 1; ++j)
            for (int i = 1; i < g.n_r - 1; ++i) {
                int k = g.idx(i, j);
                CHECK(std::fabs(direct[k] - via_lift[k]) <= 1e-12 * scale);
            }
    }
}

TEST_CASE("solve: zero rhs gives the zero field") {
    MeridianGrid g = torus_grid(17);
    EllipticOperator lap(OperatorKind::laplace, g);
    GridField sol = lap.solve_dirichlet(GridField(g.n_nodes(), 0.0));
    CHECK(linf_norm(sol) == 0.0);
}

TEST_CASE("manufactured solution is recovered at second order, both kinds") {
    for (OperatorKind kind : {OperatorKind::laplace, OperatorKind::laplace_plus_inv_r2}) {
        double errs[2];
        int idx = 0;
        for (int n : {17, 33}) {
            MeridianGrid g = torus_grid(n);
            EllipticOperator op(kind, g);
            Manufactured m = manufacture(g);
            GridField sol = op.solve_dirichlet(
                kind == OperatorKind::laplace ? m.rhs_laplace : m.rhs_lifted);
            errs[idx++] = l2_err(g, sol, m.exact);
        }
        double ratio = errs[0] / errs[1];
        CHECK(ratio > 3.6);
        CHECK(ratio < 4.4);
    }
}

TEST_CASE("discrete maximum principle: nonnegative rhs, nonnegative solution") {
    MeridianGrid g = torus_grid(17);
    EllipticOperator lap(OperatorKind::laplace, g);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GridField rhs(g.n_nodes());
    for (double& v : rhs) v = u(rng);
    GridField sol = lap.solve_dirichlet(rhs);
    for (double v : sol) CHECK(v >= -1e-12);
}

TEST_CASE("operator is self-adjoint in the volume-weighted inner product") {
    for (bool touches : {false, true}) {
        MeridianGrid g = touches ? build_grid({0.0, 1.0, 0.0, 1.0}, 13, 13) : torus_grid(13);
        for (OperatorKind kind : {OperatorKind::laplace, OperatorKind::laplace_plus_inv_r2}) {
            EllipticOperator op(kind, g);
            std::mt19937_64 rng(17);
            std::normal_distribution<double> nd;
            GridField a(g.n_nodes(), 0.0), b(g.n_nodes(), 0.0);
            bool axis_unknown = touches && kind == OperatorKind::laplace;
            for (int j = 0; j < g.n_z; ++j)
                for (int i = 0; i < g.n_r; ++i)
                    if (g.is_unknown(i, j, axis_unknown)) {
                        a[g.idx(i, j)] = nd(rng);
                        b[g.idx(i, j)] = nd(rng);
                    }
            double lhs = op.inner(op.apply(a), b);
            double rhs = op.inner(a, op.apply(b));
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
            CHECK(op.inner(op.apply(a), a) > 0.0);   // positive definite
        }
    }
}

TEST_CASE("constant source obeys the distance-squared lower bound") {
    // -Delta u = zeta with u = 0 on the wall implies u >= zeta d_Omega^2 / 6
    MeridianGrid g = torus_grid(65);
    EllipticOperator lap(OperatorKind::laplace, g);
    const double zeta = 2.0;
    GridField rhs(g.n_nodes(), zeta);
    GridField sol = lap.solve_dirichlet(rhs);
    for (int j = 0; j < g.n_z; ++j)
        for (int i = 0; i < g.n_r; ++i) {
            if (g.kind_at(i, j) != NodeKind::interior) continue;
            double d = wall_distance(g, g.r(i), g.z(j));
            CHECK(sol[g.idx(i, j)] >= 0.95 * zeta * d * d / 6.0);
        }
}

TEST_CASE("axis-touching solve: Neumann column for laplace, pinned for lifted") {
    MeridianGrid g = build_grid({0.0, 1.0, 0.0, 1.0}, 33, 33);
    EllipticOperator lap(OperatorKind::laplace, g);
    GridField rhs(g.n_nodes(), 1.0);
    GridField sol = lap.solve_dirichlet(rhs);
    // interior maximum on the axis with a flat slope into the first column
    int jc = g.n_z / 2;
    CHECK(sol[g.idx(0, jc)] > 0.0);
    double slope = (sol[g.idx(1, jc)] - sol[g.idx(0, jc)]) / g.h_r;
    double slope2 = (sol[g.idx(2, jc)] - sol[g.idx(1, jc)]) / g.h_r;
    CHECK(std::fabs(slope) < std::fabs(slope2));   // flattens toward the axis

    EllipticOperator lifted(OperatorKind::laplace_plus_inv_r2, g);
    GridField sol2 = lifted.solve_dirichlet(rhs);
    CHECK(sol2[g.idx(0, jc)] == 0.0);   // Dirichlet axis for A_phi
    CHECK(sol2[g.idx(g.n_r / 2, jc)] > 0.0);
}
