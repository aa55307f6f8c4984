#include "rvmlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace rvmlab {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& block,
                    const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            throw ConfigError("config: unknown key '" + block + "." + it.key() + "'");
    }
}

double need_number(const json& obj, const std::string& block, const std::string& key) {
    if (!obj.contains(key))
        throw ConfigError("config: missing required field '" + block + "." + key + "'");
    if (!obj[key].is_number())
        throw ConfigError("config: field '" + block + "." + key + "' must be a number");
    return obj[key].get<double>();
}

double opt_number(const json& obj, const std::string& block, const std::string& key,
                  double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number())
        throw ConfigError("config: field '" + block + "." + key + "' must be a number");
    return obj[key].get<double>();
}

std::string opt_string(const json& obj, const std::string& block, const std::string& key,
                       const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_string())
        throw ConfigError("config: field '" + block + "." + key + "' must be a string");
    return obj[key].get<std::string>();
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: JSON parse error: ") + e.what());
    }
    reject_unknown(root, "",
                   {"domain", "family", "quadrature", "solver", "stability", "trajectories",
                    "output"});

    RunConfig c;
    if (!root.contains("domain")) throw ConfigError("config: missing required field 'domain'");
    {
        const json& d = root["domain"];
        reject_unknown(d, "domain", {"r_min", "r_max", "z_min", "z_max", "n_r", "n_z"});
        c.domain.r_min = need_number(d, "domain", "r_min");
        c.domain.r_max = need_number(d, "domain", "r_max");
        c.domain.z_min = need_number(d, "domain", "z_min");
        c.domain.z_max = need_number(d, "domain", "z_max");
        c.n_r = static_cast<int>(need_number(d, "domain", "n_r"));
        c.n_z = static_cast<int>(need_number(d, "domain", "n_z"));
        if (c.domain.r_min < 0.0) throw ConfigError("config: domain.r_min must be >= 0");
        if (!(c.domain.r_max > c.domain.r_min))
            throw ConfigError("config: domain.r_max must exceed domain.r_min");
        if (!(c.domain.z_max > c.domain.z_min))
            throw ConfigError("config: domain.z_max must exceed domain.z_min");
        if (c.n_r < 3 || c.n_z < 3)
            throw ConfigError("config: domain.n_r and domain.n_z must be >= 3");
    }
    if (root.contains("family")) {
        const json& f = root["family"];
        reject_unknown(f, "family",
                       {"kind", "gamma", "mu0", "mu_plus", "mu_minus", "a_plus", "a_minus", "m",
                        "eps", "delta", "c_mu", "c_nu", "c_mu_prime"});
        c.family_kind = opt_string(f, "family", "kind", c.family_kind);
        if (c.family_kind != "case1" && c.family_kind != "case2")
            throw ConfigError("config: family.kind must be 'case1' or 'case2'");
        c.gamma = opt_number(f, "family", "gamma", c.gamma);
        if (c.gamma < 0.0) throw ConfigError("config: family.gamma must be >= 0");
        c.mu0_name = opt_string(f, "family", "mu0", c.mu0_name);
        c.mu_plus_name = opt_string(f, "family", "mu_plus", c.mu_plus_name);
        c.mu_minus_name = opt_string(f, "family", "mu_minus", c.mu_minus_name);
        c.a_plus_name = opt_string(f, "family", "a_plus", c.a_plus_name);
        c.a_minus_name = opt_string(f, "family", "a_minus", c.a_minus_name);
        c.m = opt_number(f, "family", "m", c.m);
        c.eps = opt_number(f, "family", "eps", c.eps);
        c.delta = opt_number(f, "family", "delta", c.delta);
        c.c_mu = opt_number(f, "family", "c_mu", c.c_mu);
        c.c_nu = opt_number(f, "family", "c_nu", c.c_nu);
        c.c_mu_prime = opt_number(f, "family", "c_mu_prime", c.c_mu_prime);
        if (!(c.m > -1.0 && c.m < 1.0)) throw ConfigError("config: family.m must lie in (-1, 1)");
        if (!(c.eps > 0.0 && c.eps < 1.0 - std::fabs(c.m)))
            throw ConfigError("config: family.eps must lie in (0, 1 - |m|)");
        if (!(c.delta > 3.0)) throw ConfigError("config: family.delta must be > 3");
    }
    if (root.contains("quadrature")) {
        const json& q = root["quadrature"];
        reject_unknown(q, "quadrature", {"n_w", "n_vphi", "w_max", "vphi_max", "tail_tolerance"});
        c.n_w = static_cast<int>(opt_number(q, "quadrature", "n_w", c.n_w));
        c.n_vphi = static_cast<int>(opt_number(q, "quadrature", "n_vphi", c.n_vphi));
        c.w_max = opt_number(q, "quadrature", "w_max", c.w_max);
        c.vphi_max = opt_number(q, "quadrature", "vphi_max", c.vphi_max);
        c.tail_tolerance = opt_number(q, "quadrature", "tail_tolerance", c.tail_tolerance);
        if (c.n_w < 8 || c.n_vphi < 8)
            throw ConfigError("config: quadrature.n_w and n_vphi must be >= 8");
        if (!(c.tail_tolerance > 0.0))
            throw ConfigError("config: quadrature.tail_tolerance must be > 0");
    }
    if (root.contains("solver")) {
        const json& s = root["solver"];
        reject_unknown(s, "solver",
                       {"method", "tolerance", "k", "k_start", "k_stop", "k_step", "k_step_min",
                        "k_step_max", "blowup_threshold", "max_iterations"});
        c.method = opt_string(s, "solver", "method", c.method);
        if (c.method != "newton" && c.method != "picard")
            throw ConfigError("config: solver.method must be 'newton' or 'picard'");
        c.tolerance = opt_number(s, "solver", "tolerance", c.tolerance);
        c.k_solve = opt_number(s, "solver", "k", c.k_solve);
        c.schedule.start = opt_number(s, "solver", "k_start", c.schedule.start);
        c.schedule.stop = opt_number(s, "solver", "k_stop", c.schedule.stop);
        c.schedule.initial_step = opt_number(s, "solver", "k_step", c.schedule.initial_step);
        c.schedule.min_step = opt_number(s, "solver", "k_step_min", c.schedule.min_step);
        c.schedule.max_step = opt_number(s, "solver", "k_step_max", c.schedule.max_step);
        c.blowup_threshold = opt_number(s, "solver", "blowup_threshold", c.blowup_threshold);
        c.max_iterations =
            static_cast<int>(opt_number(s, "solver", "max_iterations", c.max_iterations));
        if (!(c.tolerance > 0.0)) throw ConfigError("config: solver.tolerance must be > 0");
        if (c.schedule.start < 0.0) throw ConfigError("config: solver.k_start must be >= 0");
        if (!(c.schedule.stop >= c.schedule.start))
            throw ConfigError("config: solver.k_stop must be >= k_start");
        if (!(c.schedule.initial_step > 0.0))
            throw ConfigError("config: solver.k_step must be > 0");
    }
    if (root.contains("stability")) {
        const json& s = root["stability"];
        reject_unknown(s, "stability", {"test_bank"});
        c.test_bank = static_cast<int>(opt_number(s, "stability", "test_bank", c.test_bank));
        if (c.test_bank < 1 || c.test_bank > 4)
            throw ConfigError("config: stability.test_bank must lie in [1, 4]");
    }
    if (root.contains("trajectories")) {
        const json& t = root["trajectories"];
        reject_unknown(t, "trajectories",
                       {"particles", "t_final", "seed", "tolerance", "dt_init", "output_stride"});
        c.particles = static_cast<int>(opt_number(t, "trajectories", "particles", c.particles));
        c.t_final = opt_number(t, "trajectories", "t_final", c.t_final);
        c.seed = static_cast<uint64_t>(opt_number(t, "trajectories", "seed", double(c.seed)));
        c.push_tolerance = opt_number(t, "trajectories", "tolerance", c.push_tolerance);
        c.dt_init = opt_number(t, "trajectories", "dt_init", c.dt_init);
        c.output_stride =
            static_cast<int>(opt_number(t, "trajectories", "output_stride", c.output_stride));
        if (c.particles < 1) throw ConfigError("config: trajectories.particles must be >= 1");
        if (!(c.t_final > 0.0)) throw ConfigError("config: trajectories.t_final must be > 0");
    }
    if (root.contains("output")) {
        const json& o = root["output"];
        reject_unknown(o, "output", {"directory"});
        c.output_dir = opt_string(o, "output", "directory", c.output_dir);
    }
    return c;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

MuFunction RunConfig::make_mu(const std::string& name) const {
    if (name == "zero") return mu_zero();
    if (name == "kinetic") return mu_kinetic(c_mu);
    if (name == "even") return mu_even(c_mu);
    if (name == "separable") return mu_separable(c_mu);
    if (name == "shifted") return mu_shifted(c_mu);
    if (name == "drifted") return instability_family(m, eps, c_nu, std::max(delta, 4.0 + 1e-9));
    throw ConfigError("config: unknown mu name '" + name + "'");
}

FamilySpec RunConfig::make_family() const {
    FamilySpec f;
    f.kind = (family_kind == "case2") ? FamilyKind::case2 : FamilyKind::case1;
    f.gamma = gamma;
    f.mu0 = make_mu(mu0_name);
    f.mu_plus = make_mu(mu_plus_name);
    f.mu_minus = make_mu(mu_minus_name);
    auto make_a = [this](const std::string& n) -> std::function<double(double)> {
        if (n == "zero") return [](double) { return 0.0; };
        if (n == "quadratic") return amplitude_quadratic();
        if (n == "k_power") return amplitude_power_tail(m);
        throw ConfigError("config: unknown amplitude name '" + n + "'");
    };
    f.a_plus = make_a(a_plus_name);
    f.a_minus = make_a(a_minus_name);
    if (mu_plus_name == "drifted" || mu_minus_name == "drifted")
        f.instability = InstabilityParams{m, eps, c_mu_prime, c_nu};
    return f;
}

MomentQuadrature RunConfig::make_quadrature(const FamilySpec& family) const {
    // certify cutoffs against the worst decay constant over the whole K range
    double k_hi = std::max({schedule.stop, k_solve, 1.0});
    double c_worst = 0.0, delta_min = 1e300;
    for (int s = 0; s <= 32; ++s) {
        double K = k_hi * s / 32.0;
        auto [ion, ele] = family_at(family, K);
        double c = (ion.is_zero ? 0.0 : ion.c_mu) + (ele.is_zero ? 0.0 : ele.c_mu);
        if (c > c_worst) c_worst = c;
        if (!ion.is_zero) delta_min = std::min(delta_min, ion.delta);
        if (!ele.is_zero) delta_min = std::min(delta_min, ele.delta);
    }
    if (c_worst <= 0.0) return build_quadrature_for_bound(0.0, 4.0, n_w, n_vphi, tail_tolerance,
                                                          w_max, vphi_max);
    return build_quadrature_for_bound(c_worst, delta_min, n_w, n_vphi, tail_tolerance, w_max,
                                      vphi_max);
}

}  // namespace rvmlab
