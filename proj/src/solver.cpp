#include "rvmlab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace rvmlab {

namespace {

// stacked vector [du; dw] over all grid nodes; boundary entries stay zero
struct Stacked {
    GridField u, w;
};

double stacked_dot(const Stacked& a, const Stacked& b) {
    double s = 0.0;
    for (size_t k = 0; k < a.u.size(); ++k) s += a.u[k] * b.u[k] + a.w[k] * b.w[k];
    return s;
}

double stacked_norm(const Stacked& a) { return std::sqrt(stacked_dot(a, a)); }

void axpy(Stacked& y, double alpha, const Stacked& x) {
    for (size_t k = 0; k < y.u.size(); ++k) {
        y.u[k] += alpha * x.u[k];
        y.w[k] += alpha * x.w[k];
    }
}

void scale(Stacked& y, double s) {
    for (size_t k = 0; k < y.u.size(); ++k) {
        y.u[k] *= s;
        y.w[k] *= s;
    }
}

}  // namespace

EquilibriumSolver::EquilibriumSolver(const MeridianGrid& grid, FamilySpec family,
                                     MomentQuadrature quad)
    : grid_(&grid),
      family_(std::move(family)),
      quad_(std::move(quad)),
      op_lap_(OperatorKind::laplace, grid),
      op_inv_r2_(OperatorKind::laplace_plus_inv_r2, grid) {}

double EquilibriumSolver::flat_l2(const GridField& a, const GridField& b) const {
    double s = 0.0;
    for (size_t k = 0; k < a.size(); ++k) s += a[k] * a[k] + b[k] * b[k];
    return std::sqrt(s * grid_->h_r * grid_->h_z);
}

EquilibriumSolver::Linearization EquilibriumSolver::linearize(const FieldPair& fields,
                                                              double K) const {
    auto [ion, ele] = family_at(family_, K);
    Linearization lin;
    lin.moments = compute_moments(*grid_, fields.phi, fields.a_total(), ion, ele, quad_, true);
    GridField s1 = op_inv_r2_.solve_dirichlet(lin.moments.j_phi);
    GridField s2 = op_lap_.solve_dirichlet(lin.moments.rho);
    lin.res.g_u.resize(grid_->n_nodes());
    lin.res.g_w.resize(grid_->n_nodes());
    for (int k = 0; k < grid_->n_nodes(); ++k) {
        lin.res.g_u[k] = fields.a_phi[k] - s1[k];
        lin.res.g_w[k] = fields.phi[k] - s2[k];
    }
    lin.res.l2 = flat_l2(lin.res.g_u, lin.res.g_w);
    return lin;
}

ResidualFields EquilibriumSolver::residual(const FieldPair& fields, double K) const {
    auto [ion, ele] = family_at(family_, K);
    MomentFields mom =
        compute_moments(*grid_, fields.phi, fields.a_total(), ion, ele, quad_, false);
    GridField s1 = op_inv_r2_.solve_dirichlet(mom.j_phi);
    GridField s2 = op_lap_.solve_dirichlet(mom.rho);
    ResidualFields res;
    res.g_u.resize(grid_->n_nodes());
    res.g_w.resize(grid_->n_nodes());
    for (int k = 0; k < grid_->n_nodes(); ++k) {
        res.g_u[k] = fields.a_phi[k] - s1[k];
        res.g_w[k] = fields.phi[k] - s2[k];
    }
    res.l2 = flat_l2(res.g_u, res.g_w);
    return res;
}

FieldPair EquilibriumSolver::solve_at_K(const FieldPair& guess, double K, SolveMethod method,
                                        NewtonDiagnostics* diag) const {
    FieldPair x = guess;
    if (x.phi.size() != static_cast<size_t>(grid_->n_nodes()))
        throw std::invalid_argument("solve_at_K: guess not on grid");

    const int n = grid_->n_nodes();

    if (method == SolveMethod::picard) {
        double last = 0.0;
        for (int it = 0; it < 20 * max_iterations; ++it) {
            auto [ion, ele] = family_at(family_, K);
            MomentFields mom =
                compute_moments(*grid_, x.phi, x.a_total(), ion, ele, quad_, false);
            GridField s1 = op_inv_r2_.solve_dirichlet(mom.j_phi);
            GridField s2 = op_lap_.solve_dirichlet(mom.rho);
            GridField gu(n), gw(n);
            for (int k = 0; k < n; ++k) {
                gu[k] = x.a_phi[k] - s1[k];
                gw[k] = x.phi[k] - s2[k];
            }
            last = flat_l2(gu, gw);
            if (last <= tolerance) {
                if (diag) diag->iterations = it;
                return x;
            }
            x.a_phi = s1;
            x.phi = s2;
        }
        throw ContinuationError("picard: no convergence within iteration cap", last);
    }

    // Newton with the exact Jacobian J = I - [[S1 M1, S1 M2], [S2 M3, S2 M4]],
    // inner linear solves by unrestarted GMRES.
    auto J_apply = [&](const MomentFields& mom, const Stacked& d, Stacked& out) {
        GridField t1(n), t2(n);
        for (int k = 0; k < n; ++k) {
            t1[k] = mom.m1[k] * d.u[k] + mom.m2[k] * d.w[k];
            t2[k] = mom.m3[k] * d.u[k] + mom.m4[k] * d.w[k];
        }
        GridField s1 = op_inv_r2_.solve_dirichlet(t1);
        GridField s2 = op_lap_.solve_dirichlet(t2);
        for (int k = 0; k < n; ++k) {
            out.u[k] = d.u[k] - s1[k];
            out.w[k] = d.w[k] - s2[k];
        }
    };

    auto gmres = [&](const MomentFields& mom, const Stacked& rhs, Stacked& sol, bool& stagnated) {
        const int m_max = 100;
        const double rtol = 1e-10;
        double beta = stacked_norm(rhs);
        sol.u.assign(n, 0.0);
        sol.w.assign(n, 0.0);
        stagnated = false;
        if (beta == 0.0) return;
        std::vector<Stacked> V;
        V.push_back(rhs);
        scale(V[0], 1.0 / beta);
        std::vector<std::vector<double>> H;   // H[j] holds column j (j+2 entries)
        std::vector<double> cs, sn, gvec{beta};
        int m = 0;
        for (int j = 0; j < m_max; ++j) {
            Stacked wv{GridField(n, 0.0), GridField(n, 0.0)};
            J_apply(mom, V[j], wv);
            std::vector<double> h(j + 2, 0.0);
            for (int i = 0; i <= j; ++i) {
                h[i] = stacked_dot(wv, V[i]);
                axpy(wv, -h[i], V[i]);
            }
            h[j + 1] = stacked_norm(wv);
            const double hnorm = h[j + 1];
            // Givens rotations
            for (int i = 0; i < j; ++i) {
                double t = cs[i] * h[i] + sn[i] * h[i + 1];
                h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
                h[i] = t;
            }
            double denom = std::hypot(h[j], h[j + 1]);
            double c = denom > 0 ? h[j] / denom : 1.0;
            double s = denom > 0 ? h[j + 1] / denom : 0.0;
            cs.push_back(c);
            sn.push_back(s);
            h[j] = c * h[j] + s * h[j + 1];
            h[j + 1] = 0.0;
            gvec.push_back(-s * gvec[j]);
            gvec[j] = c * gvec[j];
            H.push_back(h);
            m = j + 1;
            double relres = std::fabs(gvec[j + 1]) / beta;
            if (relres <= rtol) break;
            if (j + 1 == m_max) {
                if (relres > 0.5) stagnated = true;
                break;
            }
            if (hnorm == 0.0) break;   // exact breakdown; solution is in the span
            Stacked vnext = wv;
            scale(vnext, 1.0 / hnorm);
            V.push_back(vnext);
        }
        // back substitution
        std::vector<double> y(m, 0.0);
        for (int i = m - 1; i >= 0; --i) {
            double s = gvec[i];
            for (int k2 = i + 1; k2 < m; ++k2) s -= H[k2][i] * y[k2];
            y[i] = s / H[i][i];
        }
        for (int i = 0; i < m; ++i) axpy(sol, y[i], V[i]);
    };

    double cond_est = 0.0;
    std::vector<double> history;
    for (int it = 0; it < max_iterations; ++it) {
        Linearization lin = linearize(x, K);
        history.push_back(lin.res.l2);
        if (lin.res.l2 <= tolerance) {
            if (diag) {
                diag->iterations = it;
                diag->condition_estimate = cond_est;
                diag->residual_history = history;
                size_t h = history.size();
                if (h >= 2 && history[h - 2] > 0.0)
                    diag->quadratic_constant = history[h - 1] / (history[h - 2] * history[h - 2]);
            }
            return x;
        }
        Stacked rhs{lin.res.g_u, lin.res.g_w};
        scale(rhs, -1.0);
        Stacked delta;
        bool stagnated = false;
        gmres(lin.moments, rhs, delta, stagnated);

        // crude two-sided conditioning probe: sigma_max from the Jacobian on a
        // fixed pseudo-random direction, 1/sigma_min from the solve itself
        {
            std::mt19937_64 rng(12345u + static_cast<uint64_t>(it));
            std::normal_distribution<double> nd;
            Stacked probe{GridField(n), GridField(n)};
            for (int k = 0; k < n; ++k) {
                probe.u[k] = nd(rng);
                probe.w[k] = nd(rng);
            }
            Stacked jp{GridField(n, 0.0), GridField(n, 0.0)};
            J_apply(lin.moments, probe, jp);
            double smax = stacked_norm(jp) / stacked_norm(probe);
            double rn = stacked_norm(rhs);
            double sinv = rn > 0 ? stacked_norm(delta) / rn : 0.0;
            cond_est = std::max({cond_est, smax * sinv, 1.0});
        }
        if (stagnated || cond_est > condition_flag_threshold)
            throw ContinuationError(
                "newton: near-singular Jacobian, possible exceptional gamma or fold "
                "(condition estimate " + std::to_string(cond_est) + ")",
                lin.res.l2);

        // backtracking on the residual norm
        double step = 1.0;
        FieldPair trial = x;
        double new_res = 0.0;
        for (int bt = 0; bt < 6; ++bt) {
            trial = x;
            for (int k = 0; k < n; ++k) {
                trial.a_phi[k] += step * delta.u[k];
                trial.phi[k] += step * delta.w[k];
            }
            new_res = residual(trial, K).l2;
            if (new_res < lin.res.l2 || new_res <= tolerance) break;
            step *= 0.5;
        }
        x = trial;
    }
    throw ContinuationError("newton: no convergence within iteration cap",
                            history.empty() ? 0.0 : history.back());
}

EquilibriumBranch EquilibriumSolver::continue_branch(const KSchedule& schedule) const {
    if (!(schedule.stop >= schedule.start) || !(schedule.initial_step > 0.0) ||
        !(schedule.min_step > 0.0) || !(schedule.max_step >= schedule.min_step))
        throw std::invalid_argument("continue_branch: malformed K schedule");

    EquilibriumBranch branch;
    FieldPair current = FieldPair::zero(*grid_);

    auto record = [&](double K, const FieldPair& f, double res, double cond) {
        BranchEntry e;
        e.K = K;
        e.fields = f;
        e.residual_norm = res;
        e.phi_inf_norm = linf_norm(f.phi);
        e.a_inf_norm = linf_norm(f.a_phi);
        e.min_phi = *std::min_element(f.phi.begin(), f.phi.end());
        e.jacobian_condition_estimate = cond;
        branch.entries.push_back(e);
    };

    NewtonDiagnostics diag;
    FieldPair first;
    try {
        first = solve_at_K(current, schedule.start, SolveMethod::newton, &diag);
    } catch (const std::exception& e) {
        throw ContinuationError(std::string("continue_branch: failed at first step: ") + e.what(),
                                0.0);
    }
    current = first;
    record(schedule.start, current, residual(current, schedule.start).l2,
           diag.condition_estimate);

    double K = schedule.start;
    double dK = schedule.initial_step;
    int successes = 0;
    while (K < schedule.stop) {
        double K_next = std::min(K + dK, schedule.stop);
        bool ok = true;
        FieldPair next;
        NewtonDiagnostics d2;
        try {
            next = solve_at_K(current, K_next, SolveMethod::newton, &d2);
        } catch (const std::exception&) {
            ok = false;
        }
        if (ok) {
            K = K_next;
            current = next;
            record(K, current, residual(current, K).l2, d2.condition_estimate);
            if (std::max(linf_norm(current.phi), linf_norm(current.a_phi)) > blowup_threshold) {
                branch.stop_reason = "blow-up";
                return branch;
            }
            if (++successes >= 3) {
                dK = std::min(2.0 * dK, schedule.max_step);
                successes = 0;
            }
        } else {
            successes = 0;
            dK *= 0.5;
            if (dK < schedule.min_step) {
                branch.stop_reason = "min-step-exhausted";
                return branch;
            }
        }
    }
    branch.stop_reason = "reached-stop";
    return branch;
}

}  // namespace rvmlab
