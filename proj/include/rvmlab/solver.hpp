#ifndef RVMLAB_SOLVER_HPP
#define RVMLAB_SOLVER_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rvmlab/distribution.hpp"
#include "rvmlab/elliptic.hpp"
#include "rvmlab/geometry.hpp"
#include "rvmlab/moments.hpp"

namespace rvmlab {

// Equilibrium potentials on the grid: phi (electric, the map's w) and a_phi
// (azimuthal magnetic, the map's u), plus an optional external A_phi,ext that
// enters the particle momenta but is not solved for. Both solved fields
// vanish on the physical boundary.
struct FieldPair {
    GridField phi;
    GridField a_phi;
    std::optional<GridField> a_ext;

    static FieldPair zero(const MeridianGrid& grid) {
        FieldPair f;
        f.phi.assign(grid.n_nodes(), 0.0);
        f.a_phi.assign(grid.n_nodes(), 0.0);
        return f;
    }
    GridField a_total() const {
        if (!a_ext) return a_phi;
        GridField t = a_phi;
        for (size_t k = 0; k < t.size(); ++k) t[k] += (*a_ext)[k];
        return t;
    }
};

enum class SolveMethod { picard, newton };

struct ResidualFields {
    GridField g_u;   // u - (-Delta + 1/r^2)^{-1} j_phi
    GridField g_w;   // w - (-Delta)^{-1} rho
    double l2 = 0.0; // discrete L2: sqrt(h_r*h_z * sum of squares), both blocks
};

struct BranchEntry {
    double K = 0.0;
    FieldPair fields;
    double residual_norm = 0.0;
    double phi_inf_norm = 0.0;
    double a_inf_norm = 0.0;
    double min_phi = 0.0;
    double jacobian_condition_estimate = 0.0;
};

struct EquilibriumBranch {
    std::vector<BranchEntry> entries;
    std::string stop_reason;   // "reached-stop" | "min-step-exhausted" | "blow-up"
};

struct KSchedule {
    double start = 0.0;
    double stop = 1.0;
    double initial_step = 0.05;
    double min_step = 1e-4;
    double max_step = 0.25;
};

struct NewtonDiagnostics {
    int iterations = 0;
    double condition_estimate = 0.0;
    // ratio r_{k+1}/r_k^2 for the final iterates, reported when in the basin
    double quadratic_constant = 0.0;
    std::vector<double> residual_history;
};

struct ContinuationError : std::runtime_error {
    double last_residual;
    ContinuationError(const std::string& m, double r) : std::runtime_error(m), last_residual(r) {}
};

// Solves G(u, w, K) = 0 at fixed K and traces branches over a K sweep.
// Holds the two inverse elliptic operators and the quadrature rule.
class EquilibriumSolver {
public:
    EquilibriumSolver(const MeridianGrid& grid, FamilySpec family, MomentQuadrature quad);

    const MeridianGrid& grid() const { return *grid_; }
    const EllipticOperator& op_laplace() const { return op_lap_; }
    const EllipticOperator& op_lifted() const { return op_inv_r2_; }
    const FamilySpec& family() const { return family_; }
    const MomentQuadrature& quadrature() const { return quad_; }

    ResidualFields residual(const FieldPair& fields, double K) const;

    FieldPair solve_at_K(const FieldPair& guess, double K, SolveMethod method,
                         NewtonDiagnostics* diag = nullptr) const;

    EquilibriumBranch continue_branch(const KSchedule& schedule) const;

    double tolerance = 1e-8;           // residual L2 target
    int max_iterations = 40;
    double blowup_threshold = 1e6;     // sup-norm sweep stop
    double condition_flag_threshold = 1e10;

private:
    const MeridianGrid* grid_;
    FamilySpec family_;
    MomentQuadrature quad_;
    EllipticOperator op_lap_;
    EllipticOperator op_inv_r2_;

    struct Linearization {
        MomentFields moments;
        ResidualFields res;
    };
    Linearization linearize(const FieldPair& fields, double K) const;
    double flat_l2(const GridField& a, const GridField& b) const;
};

}  // namespace rvmlab

#endif
