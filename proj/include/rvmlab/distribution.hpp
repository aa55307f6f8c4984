#ifndef RVMLAB_DISTRIBUTION_HPP
#define RVMLAB_DISTRIBUTION_HPP

#include <functional>
#include <optional>
#include <string>
#include <utility>

namespace rvmlab {

// Particle density ansatz mu(e, p) with partial derivatives and the decay
// constants |mu| + |mu_p| + |mu_e| <= c_mu / (1 + |e|^delta), delta > 3.
struct MuFunction {
    std::function<double(double, double)> eval;
    std::function<double(double, double)> d_e;
    std::function<double(double, double)> d_p;
    // combined evaluator, shares subexpressions; always present for built-ins
    std::function<void(double, double, double&, double&, double&)> eval_all;
    double delta = 4.0;
    double c_mu = 1.0;
    bool is_zero = false;

    double operator()(double e, double p) const { return eval(e, p); }
    void all(double e, double p, double& v, double& de, double& dp) const {
        if (eval_all) { eval_all(e, p, v, de, dp); return; }
        v = eval(e, p);
        de = d_e(e, p);
        dp = d_p(e, p);
    }
};

// Built-in concrete families used by runs and tests.
MuFunction mu_zero();
// c / (1 + e^4), independent of p
MuFunction mu_kinetic(double c = 1.0);
// c * exp(-e) / (1 + p^2), even in p
MuFunction mu_even(double c = 1.0);
// c / ((1 + e^4)(1 + p^2)), even in p, polynomial decay in both arguments
MuFunction mu_separable(double c = 1.0);
// c * exp(-e) / (1 + (p - p0)^2), carries azimuthal current
MuFunction mu_shifted(double c = 1.0, double p0 = 1.0);

// The concrete family for the instability regime:
//   mu(e, p) = c_nu * exp(-e) * <p>^(1-eps),  <p> = sqrt(1 + p^2),
// with p*mu_p >= (1-eps) c_nu exp(-e) p^2 <p>^(-1-eps), which dominates
// |p|<p>^(-eps) nu(e) for |p| >= 1. Requires eps in (0, 1 - |m|).
MuFunction instability_family(double m, double eps, double c_nu, double delta = 5.0);

struct InstabilityParams {
    double m = 0.0;
    double eps = 0.5;
    double c_mu_prime = 0.125;
    double c_nu = 1.0;
};

enum class FamilyKind { case1, case2, custom };

// K-parametrized family of ion/electron densities:
//   case1: mu^{K,+-}(e,p) = gamma*mu0(e,p)  + a_pm(K)*mu_pm(e,p)
//   case2: mu^{K,+-}(e,p) = gamma*mu0(e,Kp) + a_pm(K)*mu_pm(e,Kp)
struct FamilySpec {
    FamilyKind kind = FamilyKind::case1;
    double gamma = 0.0;
    MuFunction mu0 = mu_zero();
    MuFunction mu_plus = mu_zero();
    MuFunction mu_minus = mu_zero();
    std::function<double(double)> a_plus = [](double) { return 0.0; };
    std::function<double(double)> a_minus = [](double) { return 0.0; };
    std::optional<InstabilityParams> instability;
    // only for FamilyKind::custom
    std::function<std::pair<MuFunction, MuFunction>(double)> custom_at;
};

// a(K) = K^2  (a(0) = a'(0) = 0)
std::function<double(double)> amplitude_quadratic();
// a(K) = K^2 / (1 + K^{2-m})  ~ K^m as K -> inf, a(0) = a'(0) = 0
std::function<double(double)> amplitude_power_tail(double m);

// mu^{K,+}, mu^{K,-} with derivatives assembled by the chain rule
// (case2 multiplies mu_p by K).
std::pair<MuFunction, MuFunction> family_at(const FamilySpec& spec, double K);

struct DecayReport {
    double max_ratio = 0.0;   // worst (|mu|+|mu_p|+|mu_e|)(1+|e|^delta)/c_mu
    double worst_e = 0.0;
    double worst_p = 0.0;
    bool holds() const { return max_ratio <= 1.0; }
};

struct SampleBox {
    double e_min = 0.0, e_max = 10.0;
    double p_min = -5.0, p_max = 5.0;
};

// Sampled verification of the decay assumption on a lattice of n_samples points.
DecayReport check_decay(const MuFunction& mu, const SampleBox& box, int n_samples);

}  // namespace rvmlab

#endif
