#include "rvmlab/stability.hpp"

#include <algorithm>
#include <cmath>

namespace rvmlab {

namespace {

constexpr double TWO_PI = 2.0 * M_PI;

double volume_integral_h2(const MeridianGrid& g, const GridField& h, bool r_weighted_extra,
                          bool restrict_r_ge_1) {
    // int f(x) dx over the 3-D solid = 2*pi * sum f r dr dz; integrand h^2
    // vanishes on the boundary so the open-node sum is the natural rule
    double s = 0.0;
    for (int j = 0; j < g.n_z; ++j) {
        for (int i = 0; i < g.n_r; ++i) {
            double r = g.r(i);
            if (restrict_r_ge_1 && r < 1.0) continue;
            double w = r * g.h_r * g.h_z;
            if (r_weighted_extra) w *= r;
            double v = h[g.idx(i, j)];
            s += v * v * w;
        }
    }
    return TWO_PI * s;
}

double weighted_h2(const MeridianGrid& g, const GridField& weight, const GridField& h) {
    double s = 0.0;
    for (int j = 0; j < g.n_z; ++j) {
        for (int i = 0; i < g.n_r; ++i) {
            int k = g.idx(i, j);
            s += weight[k] * h[k] * h[k] * g.r(i) * g.h_r * g.h_z;
        }
    }
    return TWO_PI * s;
}

}  // namespace

TestFunction make_test_function(const MeridianGrid& grid, const GridField& h) {
    EllipticOperator lifted(OperatorKind::laplace_plus_inv_r2, grid);
    GridField ah = lifted.apply(h);
    double ng = TWO_PI * lifted.inner(ah, h);
    if (!(ng > 0.0)) throw std::invalid_argument("make_test_function: degenerate test function");
    TestFunction tf;
    tf.h = h;
    double sc = 1.0 / std::sqrt(ng);
    for (double& v : tf.h) v *= sc;
    tf.norm_grad = 1.0;
    tf.H1 = volume_integral_h2(grid, tf.h, true, true);
    tf.H2 = volume_integral_h2(grid, tf.h, false, false);
    return tf;
}

std::vector<TestFunction> make_test_bank(const MeridianGrid& grid, int max_mode) {
    if (max_mode < 1) throw std::invalid_argument("make_test_bank: max_mode must be >= 1");
    std::vector<TestFunction> bank;
    const MeridianDomain& d = grid.domain;
    for (int k = 1; k <= max_mode; ++k) {
        for (int l = 1; l <= max_mode; ++l) {
            GridField h(grid.n_nodes(), 0.0);
            for (int j = 0; j < grid.n_z; ++j) {
                for (int i = 0; i < grid.n_r; ++i) {
                    double sr = std::sin(k * M_PI * (grid.r(i) - d.r_min) / d.width_r());
                    double sz = std::sin(l * M_PI * (grid.z(j) - d.z_min) / d.width_z());
                    if (grid.kind_at(i, j) != NodeKind::interior) {
                        h[grid.idx(i, j)] = 0.0;   // axis column pinned as well
                    } else {
                        h[grid.idx(i, j)] = sr * sz;
                    }
                }
            }
            bank.push_back(make_test_function(grid, h));
        }
    }
    return bank;
}

Bracket a2_bracket(const TestFunction& h, const BracketKernels& kernels,
                   const MeridianGrid& grid) {
    double drive = weighted_h2(grid, kernels.drive, h.h);
    double proj = weighted_h2(grid, kernels.proj, h.h);
    Bracket b;
    b.q_lower = h.norm_grad - drive;
    b.q_upper = b.q_lower + proj;
    return b;
}

void MarginConstants::apply_defaults() {
    if (C1 == 0.0) C1 = std::pow(2.0, -1.0 - 0.5 * eps) * std::pow(b, -eps);
    if (C2 == 0.0) C2 = 8.0 * M_PI / 3.0 + 4.0 * M_PI * M_PI / (delta - 1.0);
}

double MarginPolynomial::eval(double K) const {
    return 1.0 - c_drive * std::pow(K, 1.0 + m - eps) + c_field * std::pow(K, 2.0 * m) +
           c_proj * std::pow(K, m) + c_schur * std::pow(K, 2.0 * m);
}

double MarginPolynomial::derivative(double K) const {
    return -c_drive * (1.0 + m - eps) * std::pow(K, m - eps) +
           2.0 * m * (c_field + c_schur) * std::pow(K, 2.0 * m - 1.0) +
           m * c_proj * std::pow(K, m - 1.0);
}

MarginPolynomial margin_polynomial(const MarginConstants& cin) {
    MarginConstants c = cin;
    c.apply_defaults();
    if (!(c.eps > 0.0 && c.eps < 1.0 - std::fabs(c.m)))
        throw std::invalid_argument("margin: need eps in (0, 1 - |m|)");
    if (!(c.H1 > 0.0 && c.H2 > 0.0 && c.C_mu > 0.0 && c.C_mu_prime > 0.0 && c.C_nu > 0.0 &&
          c.c_P > 0.0 && c.b > 0.0))
        throw std::invalid_argument("margin: constants must be positive");
    double two_d = std::pow(2.0, c.delta);
    MarginPolynomial p;
    p.c_drive = c.H1 * c.C1 * c.C_nu * c.C_mu_prime;
    p.c_field = 120.0 * two_d * M_PI * M_PI * c.b * c.b * (c.H1 + c.H2) * c.C_mu * c.C_mu;
    p.c_proj = two_d * c.H2 * c.C2 * c.C_mu;
    p.c_schur = 256.0 * M_PI * M_PI * c.c_P * c.C_mu * c.C_mu * c.H2;
    p.m = c.m;
    p.eps = c.eps;
    return p;
}

MarginBreakdown instability_margin(double K, const MarginConstants& c) {
    MarginPolynomial p = margin_polynomial(c);
    MarginBreakdown mb;
    mb.drive = -p.c_drive * std::pow(K, 1.0 + p.m - p.eps);
    mb.field = p.c_field * std::pow(K, 2.0 * p.m);
    mb.proj = p.c_proj * std::pow(K, p.m);
    mb.schur = p.c_schur * std::pow(K, 2.0 * p.m);
    mb.total = mb.unit + mb.drive + mb.field + mb.proj + mb.schur;
    return mb;
}

double b_star_norm_bound(double c_mu, double K, double m) {
    return 8.0 * std::sqrt(2.0) * M_PI * c_mu * std::pow(K, m);
}

double find_unstable_K(const MarginConstants& c, double k_cap) {
    MarginPolynomial p = margin_polynomial(c);
    double hi = 1.0;
    while (p.eval(hi) >= 0.0) {
        hi *= 2.0;
        if (hi > k_cap) return 1e300;
    }
    double lo = hi * 0.5;
    if (hi == 1.0) {
        lo = 1e-12;
        if (p.eval(lo) < 0.0) return lo;
    }
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (p.eval(mid) < 0.0)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

double margin_monotone_from(const MarginConstants& c, double k_cap) {
    MarginPolynomial p = margin_polynomial(c);
    if (p.m <= 0.0) return 1e-12;   // every term is non-increasing beyond K ~ 0
    double K = 1e-6;
    while (K <= k_cap) {
        if (p.derivative(K) < 0.0) {
            // derivative sign is eventually monotone: the drive exponent wins
            double lo = K * 0.5, hi = K;
            for (int it = 0; it < 100; ++it) {
                double mid = 0.5 * (lo + hi);
                if (p.derivative(mid) < 0.0)
                    hi = mid;
                else
                    lo = mid;
            }
            return hi;
        }
        K *= 2.0;
    }
    return 1e300;
}

double c_P_estimate(const MeridianGrid& grid, double rel_tol) {
    EllipticOperator lap(OperatorKind::laplace, grid);
    GridField x(grid.n_nodes(), 0.0);
    for (int j = 0; j < grid.n_z; ++j)
        for (int i = 0; i < grid.n_r; ++i)
            if (grid.is_unknown(i, j, grid.domain.touches_axis())) x[grid.idx(i, j)] = 1.0;

    double lambda = 0.0, lambda_prev = -1.0;
    for (int it = 0; it < 500; ++it) {
        double nrm = std::sqrt(lap.inner(x, x));
        for (double& v : x) v /= nrm;
        GridField y = lap.solve_dirichlet(x);
        GridField ay = lap.apply(y);
        lambda = lap.inner(ay, y) / lap.inner(y, y);
        x = y;
        if (lambda_prev > 0.0 && std::fabs(lambda - lambda_prev) <= rel_tol * lambda)
            return 1.0 / lambda;
        lambda_prev = lambda;
    }
    throw SolverFailure("c_P_estimate: inverse iteration cap reached", lambda);
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::certified_stable_at_K0: return "certified-stable-at-K0";
        case Verdict::certified_unstable: return "certified-unstable";
        default: return "indeterminate";
    }
}

HypothesisReport check_instability_hypotheses(const MeridianGrid& grid, const FamilySpec& family,
                                              int n_samples) {
    HypothesisReport rep;
    rep.domain_ok = grid.domain.sup_r() > 1.0 && grid.domain.r_min > 0.0;
    if (!family.instability) return rep;
    const InstabilityParams& ip = *family.instability;
    const MuFunction& mu = family.mu_plus;
    if (mu.is_zero) return rep;

    rep.drive_bound_ok = true;
    rep.decay_ok = mu.delta > 4.0;   // the certificate's integrals need delta > 4
    rep.mu_e_negative = true;
    int side = std::max(2, static_cast<int>(std::lround(std::sqrt(double(n_samples)))));
    for (int ie = 0; ie < side; ++ie) {
        double e = 0.3 + (8.0 - 0.3) * ie / (side - 1);
        for (int is = 0; is < side; ++is) {
            // |p| >= 1 per the instability estimate's integration region
            double mag = 1.0 + 2.0 * is / (side - 1);
            for (int sgn = -1; sgn <= 1; sgn += 2) {
                double p = sgn * mag;
                double v, de, dp;
                mu.all(e, p, v, de, dp);
                double nu = ip.c_nu * std::exp(-e);
                double lhs = p * dp;
                double rhs = ip.c_mu_prime * std::fabs(p) *
                             std::pow(1.0 + p * p, -0.5 * ip.eps) * nu;
                if (lhs < rhs) rep.drive_bound_ok = false;
                if (de >= 0.0) rep.mu_e_negative = false;
                double ratio = (std::fabs(v) + std::fabs(de) + std::fabs(dp)) *
                               (1.0 + std::pow(std::fabs(e), mu.delta)) / mu.c_mu;
                if (ratio > 1.0) rep.decay_ok = false;
            }
        }
    }
    return rep;
}

Verdict classify_margin(double K, const MarginConstants& constants,
                        const HypothesisReport& hyp) {
    if (instability_margin(std::max(K, 1e-300), constants).total < 0.0 && hyp.all())
        return Verdict::certified_unstable;
    return Verdict::indeterminate;
}

std::vector<StabilityReport> branch_stability_sweep(const EquilibriumBranch& branch,
                                                    const FamilySpec& family,
                                                    const MeridianGrid& grid,
                                                    const MomentQuadrature& quad,
                                                    const std::vector<TestFunction>& bank,
                                                    const MarginConstants& base_constants) {
    if (branch.entries.empty())
        throw std::invalid_argument("branch_stability_sweep: empty branch");
    std::vector<StabilityReport> out;
    HypothesisReport hyp = check_instability_hypotheses(grid, family);
    for (const BranchEntry& entry : branch.entries) {
        StabilityReport rep;
        rep.K = entry.K;
        auto [ion, ele] = family_at(family, entry.K);
        // re-certify the velocity cutoffs for this K's decay constants
        MomentQuadrature kq =
            build_quadrature(ion, ele, static_cast<int>(quad.w.size()),
                             static_cast<int>(quad.vphi.size()), quad.tail_tolerance);
        BracketKernels kern = compute_bracket_kernels(grid, entry.fields.phi,
                                                      entry.fields.a_total(), ion, ele, kq);
        double ql = 1e300, qu = 1e300;
        for (const TestFunction& tf : bank) {
            Bracket b = a2_bracket(tf, kern, grid);
            ql = std::min(ql, b.q_lower);
            qu = std::min(qu, b.q_upper);
        }
        rep.q_lower_min = ql;
        rep.q_upper_min = qu;
        rep.margin = instability_margin(std::max(entry.K, 1e-300), base_constants);

        if (entry.K == 0.0) {
            // certified only for mu_p == 0, mu_e <= 0 at K = 0 with q_lower >= 0
            bool mu_p_zero = true, mu_e_nonpos = true;
            for (int s = 0; s < 16; ++s) {
                double e = 0.2 + 0.5 * s;
                double p = -3.0 + 0.4 * s;
                for (const MuFunction* mf : {&ion, &ele}) {
                    if (mf->is_zero) continue;
                    double v, de, dp;
                    mf->all(e, p, v, de, dp);
                    if (std::fabs(dp) > 1e-14) mu_p_zero = false;
                    if (de > 0.0) mu_e_nonpos = false;
                }
            }
            if (mu_p_zero && mu_e_nonpos && ql >= 0.0)
                rep.verdict = Verdict::certified_stable_at_K0;
        } else {
            rep.verdict = classify_margin(entry.K, base_constants, hyp);
        }
        out.push_back(rep);
    }
    return out;
}

}  // namespace rvmlab
