#ifndef RVMLAB_MOMENTS_HPP
#define RVMLAB_MOMENTS_HPP

#include <stdexcept>
#include <string>

#include "rvmlab/distribution.hpp"
#include "rvmlab/geometry.hpp"
#include "rvmlab/quadrature.hpp"

namespace rvmlab {

struct QuadratureTailError : std::runtime_error {
    double estimated_tail;
    QuadratureTailError(const std::string& msg, double tail)
        : std::runtime_error(msg), estimated_tail(tail) {}
};

// Reduced velocity rule: dv = 2*pi*w dw dv_phi with w^2 = v_r^2 + v_z^2.
// Cutoffs are certified against the decay-based tail bound
//   c_mu * 4*pi * int_R^inf u^2/(1 + <u>^delta) du  <  tail_tolerance.
struct MomentQuadrature {
    Quad1D w;        // nodes on [0, w_max]
    Quad1D vphi;     // nodes on [-vphi_max, vphi_max], exactly symmetric
    double w_max = 0.0;
    double vphi_max = 0.0;
    double tail_tolerance = 1e-5;
    int pts_inner = 12;   // per-panel density on the structured inner panels

    size_t n_evals() const { return w.size() * vphi.size(); }
};

// Tail of the decay bound beyond radius R (includes the 4*pi shell factor).
double decay_tail(double c_mu, double delta, double R);

// Smallest cutoff R with decay_tail(c_mu, delta, R) <= tol.
double certified_cutoff(double c_mu, double delta, double tol);

// Build a rule with ~n_w and ~n_vphi nodes. Pass w_max/vphi_max = 0 to take
// them from the decay bound of the given family pair.
MomentQuadrature build_quadrature(const MuFunction& ion, const MuFunction& electron,
                                  int n_w, int n_vphi, double tail_tolerance,
                                  double w_max = 0.0, double vphi_max = 0.0);

// Same, certifying against an explicit decay bound (c_mu, delta); used when
// the rule must cover every member of a K sweep.
MomentQuadrature build_quadrature_for_bound(double c_mu, double delta, int n_w, int n_vphi,
                                            double tail_tolerance, double w_max = 0.0,
                                            double vphi_max = 0.0);

// Doubled node count, same cutoffs; for refinement studies.
MomentQuadrature refine(const MomentQuadrature& q);

struct MomentFields {
    GridField rho;     // int (mu+ - mu-) dv
    GridField j_phi;   // int vhat_phi (mu+ - mu-) dv
    // Jacobian multiplier fields
    GridField m1;      // int r vhat_phi (mu+_p + mu-_p) dv
    GridField m2;      // int vhat_phi (mu+_e + mu-_e) dv
    GridField m3;      // int r (mu+_p + mu-_p) dv
    GridField m4;      // int (mu+_e + mu-_e) dv
};

// Node-wise moments of the pair (mu+, mu-) at fields (phi, a_total) where
// e+- = <v> +- phi, p+- = r(v_phi +- a_total). OpenMP-parallel over nodes.
MomentFields compute_moments(const MeridianGrid& grid, const GridField& phi,
                             const GridField& a_total, const MuFunction& ion,
                             const MuFunction& electron, const MomentQuadrature& quad,
                             bool with_multipliers = true);

// Serial reference implementation, kept for testing; bitwise-identical results.
MomentFields compute_moments_serial(const MeridianGrid& grid, const GridField& phi,
                                    const GridField& a_total, const MuFunction& ion,
                                    const MuFunction& electron, const MomentQuadrature& quad,
                                    bool with_multipliers = true);

struct PointMoments {
    double rho = 0.0;
    double j_phi = 0.0;
    double j_r = 0.0;
    double j_z = 0.0;
};

// Direct 3-D tensor-product quadrature over (v_r, v_phi, v_z) at one point.
// Test oracle for the 2-D reduction; n points per axis on [-cutoff, cutoff].
PointMoments brute_force_moments(double phi, double a_total, double r, const MuFunction& ion,
                                 const MuFunction& electron, double cutoff, int n);

struct IntegralBoundReport {
    bool ok = true;
    int worst_node = -1;
    double min_upper_margin = 1e300;   // upper_bound - value, should stay >= 0
    double min_lower_margin = 1e300;   // value - lower_bound, should stay >= 0
};

// Two-sided bounds on I(x) = int dv / (1 + |<v> +- phi|^delta + |r(v_phi +- A)|^delta):
//   I <= (2 + 2^delta |phi|^delta) * C_int1
//   I >= C_int2(r) / (2^delta (1 + |phi|^delta + r^delta |A|^delta))
// with C_int1, C_int2 computed by the same quadrature. Both species signs checked.
IntegralBoundReport integral_bound_check(const MeridianGrid& grid, const GridField& phi,
                                         const GridField& a_total, double delta,
                                         const MomentQuadrature& quad);

// Velocity kernels for the stability quadratic form at solved fields:
//   drive(x) = sum_± int vhat_phi mu^±_p r dv      (equals m1)
//   proj(x)  = sum_± int |mu^±_e| vhat_phi^2 dv
struct BracketKernels {
    GridField drive;
    GridField proj;
};

BracketKernels compute_bracket_kernels(const MeridianGrid& grid, const GridField& phi,
                                       const GridField& a_total, const MuFunction& ion,
                                       const MuFunction& electron, const MomentQuadrature& quad);

BracketKernels compute_bracket_kernels_serial(const MeridianGrid& grid, const GridField& phi,
                                              const GridField& a_total, const MuFunction& ion,
                                              const MuFunction& electron,
                                              const MomentQuadrature& quad);

}  // namespace rvmlab

#endif
