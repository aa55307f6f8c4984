#ifndef RVMLAB_ELLIPTIC_HPP
#define RVMLAB_ELLIPTIC_HPP

#include <complex>
#include <stdexcept>
#include <vector>

#include "rvmlab/geometry.hpp"

namespace rvmlab {

enum class OperatorKind {
    laplace,                // -Delta (axisymmetric), conservative radial stencil
    laplace_plus_inv_r2     // -Delta + 1/r^2, the lifted operator
};

struct SolverFailure : std::runtime_error {
    double last_residual;
    SolverFailure(const std::string& msg, double res)
        : std::runtime_error(msg), last_residual(res) {}
};

// Second-order finite-difference discretization with Dirichlet data on the
// physical boundary. For axis-touching domains the laplace kind carries a
// Neumann axis column (d_r phi = 0); the lifted kind pins A_phi = 0 there.
// Self-adjoint and positive definite in the r-weighted inner product.
class EllipticOperator {
public:
    EllipticOperator(OperatorKind kind, const MeridianGrid& grid);

    OperatorKind kind() const { return kind_; }
    const MeridianGrid& grid() const { return *grid_; }
    int n_unknowns() const { return static_cast<int>(unknowns_.size()); }

    // Discrete operator on a full field (boundary values read from g);
    // non-unknown rows pass through untouched.
    GridField apply(const GridField& g) const;

    // Solve op*g = rhs with zero Dirichlet data, relative residual 1e-10,
    // preconditioned CG in the volume-weighted inner product.
    GridField solve_dirichlet(const GridField& rhs) const;

    // Volume-weighted inner product over unknown nodes (weight r*h_r*h_z,
    // control-volume weight at the axis column).
    double inner(const GridField& a, const GridField& b) const;

    double solve_rtol = 1e-10;

private:
    OperatorKind kind_;
    const MeridianGrid* grid_;
    std::vector<int> unknowns_;        // node indices of unknown rows
    std::vector<int> unknown_of_;      // node -> unknown position or -1
    std::vector<double> diag_;         // per unknown
    std::vector<double> vol_;          // per unknown
    bool axis_unknown_ = false;

    void apply_unknowns(const std::vector<double>& x, std::vector<double>& y) const;
    friend GridField lifted_laplace_restriction(const EllipticOperator&, const GridField&, double);
};

// -Delta applied to the lifted complex field g*e^{i*phi0}, restricted back by
// unwinding the phase: the azimuthal second derivative of the lift factor is
// analytic, the meridian part uses the plain laplace stencil. Agrees with the
// laplace_plus_inv_r2 stencil applied to g.
GridField lifted_laplace_restriction(const EllipticOperator& plain_laplace, const GridField& g,
                                     double phi0);

}  // namespace rvmlab

#endif
