#ifndef RVMLAB_STABILITY_HPP
#define RVMLAB_STABILITY_HPP

#include <string>
#include <vector>

#include "rvmlab/distribution.hpp"
#include "rvmlab/elliptic.hpp"
#include "rvmlab/geometry.hpp"
#include "rvmlab/moments.hpp"
#include "rvmlab/solver.hpp"

namespace rvmlab {

// Grid test function vanishing on the physical boundary, normalized so that
// norm_grad = int(|grad h|^2 + h^2/r^2) dx = 1 (3-D volume, includes 2*pi).
struct TestFunction {
    GridField h;
    double norm_grad = 0.0;
    double H1 = 0.0;   // int_{r>=1} r |h|^2 dx
    double H2 = 0.0;   // int |h|^2 dx
};

// Tensor sine modes sin(k pi (r-r0)/Lr) sin(l pi (z-z0)/Lz), k,l = 1..max_mode,
// each normalized. The lifted operator supplies the norm_grad quadratic form.
std::vector<TestFunction> make_test_bank(const MeridianGrid& grid, int max_mode);

TestFunction make_test_function(const MeridianGrid& grid, const GridField& h);

struct Bracket {
    double q_lower = 0.0;
    double q_upper = 0.0;
};

// Two-sided bracket for <A2 h, h>: the projection term is pinned between 0 and
// ||vhat_phi h||^2 in the mu_e-weighted norm (orthogonal projection).
Bracket a2_bracket(const TestFunction& h, const BracketKernels& kernels,
                   const MeridianGrid& grid);

// Constants of the explicit instability inequality; C1 and C2 take their
// standard values unless overridden.
struct MarginConstants {
    double H1 = 1.0, H2 = 1.0;
    double C1 = 0.0;        // default 2^{-1-eps/2} b^{-eps}
    double C2 = 0.0;        // default 8*pi/3 + 4*pi^2/(delta-1)
    double c_P = 1.0;
    double C_mu = 1.0;
    double C_mu_prime = 1.0;
    double C_nu = 1.0;
    double m = 0.0;
    double eps = 0.5;
    double delta = 5.0;
    double b = 2.0;         // set to d = sup r

    void apply_defaults();
};

// margin(K) = 1 - c_drive K^{1+m-eps} + c_field K^{2m} + c_proj K^{m} + c_schur K^{2m}
struct MarginPolynomial {
    double c_drive = 1.0;
    double c_field = 1.0;
    double c_proj = 1.0;
    double c_schur = 1.0;
    double m = 0.0;
    double eps = 0.5;

    double eval(double K) const;
    double derivative(double K) const;
};

struct MarginBreakdown {
    double unit = 1.0;
    double drive = 0.0;    // -H1 C1 C_nu C'_mu K^{1+m-eps}
    double field = 0.0;    // +120 2^delta pi^2 b^2 (H1+H2) C_mu^2 K^{2m}
    double proj = 0.0;     // +2^delta H2 C2 C_mu K^m
    double schur = 0.0;    // +256 pi^2 c_P C_mu^2 H2 K^{2m}
    double total = 0.0;
};

MarginPolynomial margin_polynomial(const MarginConstants& c);
MarginBreakdown instability_margin(double K, const MarginConstants& c);

// ||(B^{0,K})*||_{L2->L2} <= 8 sqrt(2) pi C_mu K^m
double b_star_norm_bound(double c_mu, double K, double m);

// Smallest K with margin < 0 (expand then bisect); +inf-like 1e300 if none
// found below k_cap.
double find_unstable_K(const MarginConstants& c, double k_cap = 1e30);

// Smallest K beyond which the margin is decreasing.
double margin_monotone_from(const MarginConstants& c, double k_cap = 1e30);

// 1/lambda_min of the discrete Dirichlet Laplacian by inverse power iteration.
double c_P_estimate(const MeridianGrid& grid, double rel_tol = 1e-6);

enum class Verdict { certified_stable_at_K0, certified_unstable, indeterminate };
std::string to_string(Verdict v);

struct HypothesisReport {
    bool domain_ok = false;        // d > 1 and inf r > 0
    bool drive_bound_ok = false;   // p mu+_p >= C'_mu |p|<p>^{-eps} nu(e) on |p|>=1 samples
    bool decay_ok = false;         // sampled decay of mu+ on the box
    bool mu_e_negative = false;
    bool all() const { return domain_ok && drive_bound_ok && decay_ok && mu_e_negative; }
};

// Sampled check of the hypotheses the instability certificate rests on,
// applied to the unscaled mu+.
HypothesisReport check_instability_hypotheses(const MeridianGrid& grid, const FamilySpec& family,
                                              int n_samples = 64);

// certified-unstable iff the margin is negative at K and every hypothesis
// holds; never certifies stability away from K = 0.
Verdict classify_margin(double K, const MarginConstants& constants, const HypothesisReport& hyp);

struct StabilityReport {
    double K = 0.0;
    double q_lower_min = 0.0;
    double q_upper_min = 0.0;
    MarginBreakdown margin;
    Verdict verdict = Verdict::indeterminate;
};

// Per branch entry: bracket over the test bank plus the margin polynomial.
// certified-stable-at-K0 requires K = 0, sampled mu_p == 0, mu_e <= 0 and
// q_lower >= 0 for every test function; certified-unstable requires a negative
// margin together with the hypothesis checks.
std::vector<StabilityReport> branch_stability_sweep(const EquilibriumBranch& branch,
                                                    const FamilySpec& family,
                                                    const MeridianGrid& grid,
                                                    const MomentQuadrature& quad,
                                                    const std::vector<TestFunction>& bank,
                                                    const MarginConstants& base_constants);

}  // namespace rvmlab

#endif
