// rvmlab: batch front end for the axisymmetric kinetic equilibrium laboratory.
//   rvmlab <command> --config <path> [--out <dir>] [--seed <u64>]
// Commands: solve, continue, stability, trajectories, moments-check, verify.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "CLI11.hpp"
#include "rvmlab/config.hpp"
#include "rvmlab/output.hpp"
#include "rvmlab/stability.hpp"
#include "rvmlab/trajectories.hpp"

namespace fs = std::filesystem;
using namespace rvmlab;

namespace {

struct Context {
    RunConfig cfg;
    MeridianGrid grid;
    FamilySpec family;
    MomentQuadrature quad;
    fs::path out_dir;
};

Context make_context(const std::string& config_path, const std::string& out_override,
                     uint64_t seed_override, bool seed_given) {
    Context ctx{parse_config(config_path), {}, {}, {}, {}};
    if (seed_given) ctx.cfg.seed = seed_override;
    ctx.grid = build_grid(ctx.cfg.domain, ctx.cfg.n_r, ctx.cfg.n_z);
    ctx.family = ctx.cfg.make_family();
    ctx.quad = ctx.cfg.make_quadrature(ctx.family);
    ctx.out_dir = out_override.empty() ? fs::path(ctx.cfg.output_dir) : fs::path(out_override);
    fs::create_directories(ctx.out_dir);
    return ctx;
}

EquilibriumSolver make_solver(const Context& ctx) {
    EquilibriumSolver solver(ctx.grid, ctx.family, ctx.quad);
    solver.tolerance = ctx.cfg.tolerance;
    solver.max_iterations = ctx.cfg.max_iterations;
    solver.blowup_threshold = ctx.cfg.blowup_threshold;
    return solver;
}

SolveMethod method_of(const Context& ctx) {
    return ctx.cfg.method == "picard" ? SolveMethod::picard : SolveMethod::newton;
}

int cmd_solve(const Context& ctx, const std::string& init_path) {
    EquilibriumSolver solver = make_solver(ctx);
    FieldPair guess = init_path.empty() ? FieldPair::zero(ctx.grid)
                                        : read_fields_csv(init_path, ctx.grid);
    double K = ctx.cfg.k_solve;
    FieldPair sol = solver.solve_at_K(guess, K, method_of(ctx));
    double res = solver.residual(sol, K).l2;
    write_fields_csv((ctx.out_dir / fields_filename(K)).string(), ctx.grid, sol);
    std::cout << "solved K=" << fmt17(K) << " residual=" << fmt17(res)
              << " phi_inf=" << fmt17(linf_norm(sol.phi))
              << " a_inf=" << fmt17(linf_norm(sol.a_phi)) << "\n";
    return 0;
}

EquilibriumBranch run_continuation(const Context& ctx, bool write_fields) {
    EquilibriumSolver solver = make_solver(ctx);
    EquilibriumBranch branch = solver.continue_branch(ctx.cfg.schedule);
    write_branch_csv((ctx.out_dir / "branch.csv").string(), branch);
    if (write_fields)
        for (const BranchEntry& e : branch.entries)
            write_fields_csv((ctx.out_dir / fields_filename(e.K)).string(), ctx.grid, e.fields);
    return branch;
}

int cmd_continue(const Context& ctx) {
    EquilibriumBranch branch = run_continuation(ctx, true);
    std::cout << "branch entries=" << branch.entries.size() << " stop=" << branch.stop_reason
              << "\n";
    return 0;
}

int cmd_stability(const Context& ctx) {
    EquilibriumBranch branch = run_continuation(ctx, false);
    std::vector<TestFunction> bank = make_test_bank(ctx.grid, ctx.cfg.test_bank);
    MarginConstants mc;
    mc.H1 = bank.front().H1;
    mc.H2 = bank.front().H2;
    mc.c_P = c_P_estimate(ctx.grid);
    // the decay constant the hypothesis checks sample against
    mc.C_mu = std::max({ctx.family.mu_plus.c_mu, ctx.family.mu_minus.c_mu,
                        ctx.family.gamma * ctx.family.mu0.c_mu, 1e-12});
    mc.C_mu_prime = ctx.cfg.c_mu_prime;
    mc.C_nu = ctx.cfg.c_nu;
    mc.m = ctx.cfg.m;
    mc.eps = ctx.cfg.eps;
    mc.delta = std::max(ctx.cfg.delta, 4.0 + 1e-9);
    mc.b = ctx.grid.domain.sup_r();
    mc.apply_defaults();
    std::vector<StabilityReport> reports =
        branch_stability_sweep(branch, ctx.family, ctx.grid, ctx.quad, bank, mc);
    write_stability_csv((ctx.out_dir / "stability.csv").string(), reports);
    double kstar = find_unstable_K(mc);
    std::cout << "stability entries=" << reports.size() << " margin_K*=" << fmt17(kstar) << "\n";
    return 0;
}

int cmd_trajectories(const Context& ctx) {
    EquilibriumSolver solver = make_solver(ctx);
    FieldPair sol = solver.solve_at_K(FieldPair::zero(ctx.grid), ctx.cfg.k_solve, method_of(ctx));
    FieldSampler sampler(ctx.grid, sol);
    PushOptions opt;
    opt.tol = ctx.cfg.push_tolerance;
    opt.dt_init = ctx.cfg.dt_init;
    std::vector<ParticleState> starts =
        sample_particles(ctx.grid, ctx.cfg.particles, ctx.cfg.seed);

    // full dump of the first particle, stride-sampled
    {
        std::ofstream tr((ctx.out_dir / "trajectory_0.csv").string());
        tr << "t,r,phi,z,v_r,v_phi,v_z,e,p\n";
        int count = 0;
        integrate(starts[0], sampler, ctx.cfg.t_final, opt,
                  [&](double t, const ParticleState& s) {
                      if (count++ % ctx.cfg.output_stride) return;
                      tr << fmt17(t) << ',' << fmt17(s.r) << ',' << fmt17(s.phi) << ','
                         << fmt17(s.z) << ',' << fmt17(s.v_r) << ',' << fmt17(s.v_phi) << ','
                         << fmt17(s.v_z) << ',' << fmt17(sampler.energy(s)) << ','
                         << fmt17(sampler.momentum(s)) << '\n';
                  });
    }

    std::vector<InvariantRecord> recs = integrate_batch(starts, sampler, ctx.cfg.t_final, opt);
    std::ofstream sum((ctx.out_dir / "trajectories.csv").string());
    sum << "particle,reflections,e0,p0,max_rel_drift_e,max_rel_drift_p\n";
    double worst_e = 0, worst_p = 0;
    for (size_t i = 0; i < recs.size(); ++i) {
        const InvariantRecord& r = recs[i];
        sum << i << ',' << r.reflections << ',' << fmt17(r.e0) << ',' << fmt17(r.p0) << ','
            << fmt17(r.max_rel_drift_e) << ',' << fmt17(r.max_rel_drift_p) << '\n';
        worst_e = std::max(worst_e, r.max_rel_drift_e);
        worst_p = std::max(worst_p, r.max_rel_drift_p);
    }
    std::cout << "particles=" << recs.size() << " worst_drift_e=" << fmt17(worst_e)
              << " worst_drift_p=" << fmt17(worst_p) << "\n";
    return 0;
}

int cmd_moments_check(const Context& ctx) {
    auto [ion, ele] = family_at(ctx.family, std::max(ctx.cfg.k_solve, 1.0));
    FieldPair zero = FieldPair::zero(ctx.grid);

    std::mt19937_64 rng(ctx.cfg.seed);
    std::uniform_real_distribution<double> up(-0.3, 0.3);
    GridField phi(ctx.grid.n_nodes()), a(ctx.grid.n_nodes());
    for (int k = 0; k < ctx.grid.n_nodes(); ++k) {
        phi[k] = up(rng);
        a[k] = up(rng);
    }

    bool all_ok = true;
    // oracle equivalence at grid nodes vs 3-D tensor quadrature
    MomentFields mf = compute_moments(ctx.grid, phi, a, ion, ele, ctx.quad, false);
    double worst = 0.0;
    for (int probe = 0; probe < 5; ++probe) {
        int k = (probe * 7919) % ctx.grid.n_nodes();
        int i = k % ctx.grid.n_r;
        PointMoments pm = brute_force_moments(phi[k], a[k], ctx.grid.r(i), ion, ele,
                                              std::min(ctx.quad.w_max, ctx.quad.vphi_max), 160);
        double scale = std::max(1e-12, std::fabs(pm.rho));
        worst = std::max(worst, std::fabs(pm.rho - mf.rho[k]) / scale);
    }
    bool ok = worst < 1e-4;
    all_ok &= ok;
    std::cout << (ok ? "PASS" : "FAIL") << " oracle-equivalence worst_rel=" << fmt17(worst)
              << "\n";

    IntegralBoundReport ib = integral_bound_check(ctx.grid, phi, a, 4.0, ctx.quad);
    all_ok &= ib.ok;
    std::cout << (ib.ok ? "PASS" : "FAIL")
              << " integral-bounds min_upper_margin=" << fmt17(ib.min_upper_margin)
              << " min_lower_margin=" << fmt17(ib.min_lower_margin) << "\n";

    // neutral cancellation with an even family on zero fields
    FamilySpec neutral;
    neutral.gamma = 1.0;
    neutral.mu0 = mu_even(1.0);
    auto [ni, ne] = family_at(neutral, 0.0);
    MomentFields nm = compute_moments(ctx.grid, zero.phi, zero.a_phi, ni, ne,
                                      build_quadrature(ni, ne, 64, 64, 1e-4), false);
    double cmax = std::max(linf_norm(nm.rho), linf_norm(nm.j_phi));
    ok = cmax <= 1e-12;
    all_ok &= ok;
    std::cout << (ok ? "PASS" : "FAIL") << " neutral-cancellation max=" << fmt17(cmax) << "\n";
    return all_ok ? 0 : 1;
}

int cmd_verify(const Context& ctx) {
    int failures = 0;
    auto report = [&](const std::string& name, bool ok, const std::string& detail) {
        std::cout << (ok ? "PASS " : "FAIL ") << name << " (" << detail << ")\n";
        if (!ok) ++failures;
    };

    // lift identity
    {
        MeridianGrid g = build_grid({1.0, 2.0, 0.0, 1.0}, 33, 33);
        EllipticOperator lap(OperatorKind::laplace, g);
        EllipticOperator lift(OperatorKind::laplace_plus_inv_r2, g);
        GridField f(g.n_nodes());
        for (int j = 0; j < g.n_z; ++j)
            for (int i = 0; i < g.n_r; ++i)
                f[g.idx(i, j)] = std::sin(2.1 * g.r(i)) * std::cos(1.3 * g.z(j));
        GridField a = lift.apply(f);
        GridField b = lifted_laplace_restriction(lap, f, 0.7);
        double scale = linf_norm(a);
        double worst = 0.0;
        for (int j = 1; j < g.n_z - 1; ++j)
            for (int i = 1; i < g.n_r - 1; ++i) {
                int k = g.idx(i, j);
                worst = std::max(worst, std::fabs(a[k] - b[k]) / scale);
            }
        report("lift-identity", worst <= 1e-12, "rel=" + fmt17(worst));
    }
    // manufactured solution second-order convergence
    {
        auto err_at = [&](int n) {
            MeridianGrid g = build_grid({1.0, 2.0, 0.0, 1.0}, n, n);
            EllipticOperator lap(OperatorKind::laplace, g);
            GridField rhs(g.n_nodes(), 0.0), exact(g.n_nodes(), 0.0);
            double a = M_PI, b = M_PI;
            for (int j = 0; j < g.n_z; ++j)
                for (int i = 0; i < g.n_r; ++i) {
                    double r = g.r(i), z = g.z(j);
                    double S = std::sin(a * (r - 1.0)), T = std::sin(b * z);
                    exact[g.idx(i, j)] = S * T;
                    rhs[g.idx(i, j)] =
                        (a * a + b * b) * S * T - (a / r) * std::cos(a * (r - 1.0)) * T;
                }
            GridField sol = lap.solve_dirichlet(rhs);
            double s = 0.0;
            for (int k = 0; k < g.n_nodes(); ++k) {
                double d = sol[k] - exact[k];
                s += d * d;
            }
            return std::sqrt(s * g.h_r * g.h_z);
        };
        double e1 = err_at(17), e2 = err_at(33);
        double ratio = e1 / e2;
        report("elliptic-convergence", ratio > 3.6 && ratio < 4.4, "ratio=" + fmt17(ratio));
    }
    // trivial branch at K = 0
    {
        EquilibriumSolver solver = make_solver(ctx);
        FieldPair sol = solver.solve_at_K(FieldPair::zero(ctx.grid), 0.0, SolveMethod::newton);
        double n = std::max(linf_norm(sol.phi), linf_norm(sol.a_phi));
        report("trivial-branch", n <= 1e-10, "norm=" + fmt17(n));
    }
    // oracle equivalence, one sample
    {
        auto [ion, ele] = family_at(ctx.family, std::max(ctx.cfg.k_solve, 1.0));
        FieldPair z = FieldPair::zero(ctx.grid);
        MomentFields mf = compute_moments(ctx.grid, z.phi, z.a_phi, ion, ele, ctx.quad, false);
        int k = ctx.grid.idx(ctx.grid.n_r / 2, ctx.grid.n_z / 2);
        PointMoments pm =
            brute_force_moments(0.0, 0.0, ctx.grid.r(ctx.grid.n_r / 2), ion, ele,
                                std::min(ctx.quad.w_max, ctx.quad.vphi_max), 160);
        double rel = std::fabs(pm.rho - mf.rho[k]) / std::max(1e-12, std::fabs(pm.rho));
        bool skip = ion.is_zero && ele.is_zero;
        report("oracle-equivalence", skip || rel < 1e-4, "rel=" + fmt17(rel));
    }
    // sign property, three-step ion sweep
    {
        FamilySpec ion_only;
        ion_only.kind = FamilyKind::case1;
        ion_only.gamma = 0.0;
        ion_only.mu_plus = mu_kinetic(1.0);
        ion_only.a_plus = amplitude_quadratic();
        MomentQuadrature q = build_quadrature(ion_only.mu_plus, mu_zero(), 64, 64, 1e-4);
        EquilibriumSolver solver(ctx.grid, ion_only, q);
        KSchedule sched{0.0, 0.3, 0.1, 1e-3, 0.1};
        EquilibriumBranch br = solver.continue_branch(sched);
        double min_phi = 0.0;
        for (const BranchEntry& e : br.entries) min_phi = std::min(min_phi, e.min_phi);
        report("sign-property", min_phi >= -1e-8, "min_phi=" + fmt17(min_phi));
    }
    // invariant conservation, short run
    {
        EquilibriumSolver solver = make_solver(ctx);
        FieldPair sol =
            solver.solve_at_K(FieldPair::zero(ctx.grid), ctx.cfg.k_solve, method_of(ctx));
        FieldSampler sampler(ctx.grid, sol);
        PushOptions opt;
        opt.tol = ctx.cfg.push_tolerance;
        std::vector<ParticleState> starts = sample_particles(ctx.grid, 5, ctx.cfg.seed);
        std::vector<InvariantRecord> recs = integrate_batch(starts, sampler, 20.0, opt);
        double worst = 0.0;
        for (const InvariantRecord& r : recs)
            worst = std::max({worst, r.max_rel_drift_e, r.max_rel_drift_p});
        report("invariant-conservation", worst <= 1e-6, "worst=" + fmt17(worst));
    }
    std::cout << (failures == 0 ? "verify: all checks passed\n"
                                : "verify: " + std::to_string(failures) + " check(s) failed\n");
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"axisymmetric kinetic equilibrium laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir, init_path;
    uint64_t seed = 0;
    bool seed_given = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "run configuration JSON")->required();
        sub->add_option("--out", out_dir, "output directory (overrides config)");
        sub->add_option("--seed", seed, "RNG seed (overrides config)")
            ->each([&](const std::string&) { seed_given = true; });
    };

    CLI::App* solve = app.add_subcommand("solve", "solve at a single K");
    add_common(solve);
    solve->add_option("--init", init_path, "warm-start fields CSV");
    CLI::App* cont = app.add_subcommand("continue", "trace a branch over the K schedule");
    add_common(cont);
    CLI::App* stab = app.add_subcommand("stability", "branch sweep plus stability reports");
    add_common(stab);
    CLI::App* traj = app.add_subcommand("trajectories", "integrate particles in solved fields");
    add_common(traj);
    CLI::App* mom = app.add_subcommand("moments-check", "quadrature oracle and bound checks");
    add_common(mom);
    CLI::App* ver = app.add_subcommand("verify", "run the invariant suite");
    add_common(ver);

    CLI11_PARSE(app, argc, argv);

    try {
        Context ctx = make_context(config_path, out_dir, seed, seed_given);
        if (solve->parsed()) return cmd_solve(ctx, init_path);
        if (cont->parsed()) return cmd_continue(ctx);
        if (stab->parsed()) return cmd_stability(ctx);
        if (traj->parsed()) return cmd_trajectories(ctx);
        if (mom->parsed()) return cmd_moments_check(ctx);
        if (ver->parsed()) return cmd_verify(ctx);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
