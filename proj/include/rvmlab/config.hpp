#ifndef RVMLAB_CONFIG_HPP
#define RVMLAB_CONFIG_HPP

#include <cstdint>
#include <string>

#include "rvmlab/distribution.hpp"
#include "rvmlab/geometry.hpp"
#include "rvmlab/moments.hpp"
#include "rvmlab/solver.hpp"

namespace rvmlab {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    MeridianDomain domain;
    int n_r = 17, n_z = 17;

    // family block
    std::string family_kind = "case1";       // case1 | case2
    double gamma = 0.0;
    std::string mu0_name = "zero";           // zero|kinetic|even|separable|shifted|drifted
    std::string mu_plus_name = "kinetic";
    std::string mu_minus_name = "zero";
    std::string a_plus_name = "quadratic";   // zero|quadratic|k_power
    std::string a_minus_name = "zero";
    double m = 0.0;
    double eps = 0.5;
    double delta = 4.0;                      // decay exponent for the margin constants
    double c_mu = 1.0;                       // amplitude of the built-in mu's
    double c_nu = 1.0;
    double c_mu_prime = 0.125;

    // quadrature block
    int n_w = 96, n_vphi = 96;
    double w_max = 0.0, vphi_max = 0.0;      // 0 = certified from the decay bound
    double tail_tolerance = 1e-5;

    // solver block
    std::string method = "newton";
    double tolerance = 1e-8;
    double k_solve = 0.0;                    // target K for the solve command
    KSchedule schedule;
    double blowup_threshold = 1e6;
    int max_iterations = 40;

    // stability block
    int test_bank = 2;                       // modes k,l = 1..test_bank

    // trajectories block
    int particles = 100;
    double t_final = 200.0;
    uint64_t seed = 1;
    double push_tolerance = 1e-10;
    double dt_init = 1e-2;
    int output_stride = 50;

    std::string output_dir = "out";

    FamilySpec make_family() const;
    MuFunction make_mu(const std::string& name) const;
    MomentQuadrature make_quadrature(const FamilySpec& family) const;
};

// Parse and validate a run-configuration JSON file. Unknown keys are errors;
// missing required keys and precondition violations name the offending field.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);

}  // namespace rvmlab

#endif
