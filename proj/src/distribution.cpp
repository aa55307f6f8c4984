#include "rvmlab/distribution.hpp"

#include <cmath>
#include <stdexcept>

namespace rvmlab {

MuFunction mu_zero() {
    MuFunction m;
    m.eval = [](double, double) { return 0.0; };
    m.d_e = m.eval;
    m.d_p = m.eval;
    m.eval_all = [](double, double, double& v, double& de, double& dp) { v = de = dp = 0.0; };
    m.delta = 4.0;
    m.c_mu = 0.0;
    m.is_zero = true;
    return m;
}

MuFunction mu_kinetic(double c) {
    MuFunction m;
    m.eval = [c](double e, double) { return c / (1.0 + e * e * e * e); };
    m.d_e = [c](double e, double) {
        double q = 1.0 + e * e * e * e;
        return -4.0 * c * e * e * e / (q * q);
    };
    m.d_p = [](double, double) { return 0.0; };
    m.eval_all = [c](double e, double, double& v, double& de, double& dp) {
        double e3 = e * e * e;
        double q = 1.0 + e3 * e;
        v = c / q;
        de = -4.0 * c * e3 / (q * q);
        dp = 0.0;
    };
    m.delta = 4.0;
    // sup over e >= 0 of (|mu|+|mu_e|)(1+e^4)/c is 1 + 3^{3/4}
    m.c_mu = c * (1.0 + std::pow(3.0, 0.75));
    return m;
}

MuFunction mu_even(double c) {
    MuFunction m;
    m.eval = [c](double e, double p) { return c * std::exp(-e) / (1.0 + p * p); };
    m.d_e = [c](double e, double p) { return -c * std::exp(-e) / (1.0 + p * p); };
    m.d_p = [c](double e, double p) {
        double q = 1.0 + p * p;
        return -2.0 * c * p * std::exp(-e) / (q * q);
    };
    m.eval_all = [c](double e, double p, double& v, double& de, double& dp) {
        double q = 1.0 + p * p;
        double x = c * std::exp(-e) / q;
        v = x;
        de = -x;
        dp = -2.0 * p * x / q;
    };
    m.delta = 6.0;
    // sup over e >= 0 of (2 + 1)*exp(-e)*(1 + e^6)
    double sup = 0.0;
    for (double e = 0.0; e <= 30.0; e += 1e-3) sup = std::max(sup, std::exp(-e) * (1.0 + std::pow(e, 6.0)));
    m.c_mu = 3.0 * c * sup;
    return m;
}

MuFunction mu_separable(double c) {
    MuFunction m;
    m.eval = [c](double e, double p) { return c / ((1.0 + e * e * e * e) * (1.0 + p * p)); };
    m.d_e = [c](double e, double p) {
        double qe = 1.0 + e * e * e * e;
        return -4.0 * c * e * e * e / (qe * qe * (1.0 + p * p));
    };
    m.d_p = [c](double e, double p) {
        double qp = 1.0 + p * p;
        return -2.0 * c * p / ((1.0 + e * e * e * e) * qp * qp);
    };
    m.eval_all = [c](double e, double p, double& v, double& de, double& dp) {
        double e3 = e * e * e;
        double qe = 1.0 + e3 * e;
        double qp = 1.0 + p * p;
        v = c / (qe * qp);
        de = -4.0 * e3 * v / qe;
        dp = -2.0 * p * v / qp;
    };
    m.delta = 4.0;
    m.c_mu = c * (2.0 + std::pow(3.0, 0.75));
    return m;
}

MuFunction mu_shifted(double c, double p0) {
    MuFunction m;
    m.eval = [c, p0](double e, double p) {
        double s = p - p0;
        return c * std::exp(-e) / (1.0 + s * s);
    };
    m.d_e = [c, p0](double e, double p) {
        double s = p - p0;
        return -c * std::exp(-e) / (1.0 + s * s);
    };
    m.d_p = [c, p0](double e, double p) {
        double s = p - p0;
        double q = 1.0 + s * s;
        return -2.0 * c * s * std::exp(-e) / (q * q);
    };
    m.eval_all = [c, p0](double e, double p, double& v, double& de, double& dp) {
        double s = p - p0;
        double q = 1.0 + s * s;
        double x = c * std::exp(-e) / q;
        v = x;
        de = -x;
        dp = -2.0 * s * x / q;
    };
    m.delta = 6.0;
    double sup = 0.0;
    for (double e = 0.0; e <= 30.0; e += 1e-3) sup = std::max(sup, std::exp(-e) * (1.0 + std::pow(e, 6.0)));
    m.c_mu = 3.0 * c * sup;
    return m;
}

MuFunction instability_family(double m_exp, double eps, double c_nu, double delta) {
    if (!(eps > 0.0 && eps < 1.0 - std::fabs(m_exp)))
        throw std::invalid_argument("instability_family: need eps in (0, 1 - |m|)");
    if (!(c_nu > 0.0)) throw std::invalid_argument("instability_family: c_nu must be > 0");
    MuFunction m;
    double a = 1.0 - eps;
    m.eval = [c_nu, a](double e, double p) {
        return c_nu * std::exp(-e) * std::pow(1.0 + p * p, 0.5 * a);
    };
    m.d_e = [c_nu, a](double e, double p) {
        return -c_nu * std::exp(-e) * std::pow(1.0 + p * p, 0.5 * a);
    };
    m.d_p = [c_nu, a](double e, double p) {
        return c_nu * std::exp(-e) * a * p * std::pow(1.0 + p * p, 0.5 * a - 1.0);
    };
    m.eval_all = [c_nu, a](double e, double p, double& v, double& de, double& dp) {
        double q = 1.0 + p * p;
        double ee = c_nu * std::exp(-e);
        double pw = std::pow(q, 0.5 * a);
        v = ee * pw;
        de = -v;
        dp = a * p * ee * pw / q;
    };
    m.delta = delta;
    // decay constant covering the standard sample box |p| <= 3, e >= 0
    double sup = 0.0;
    for (double e = 0.0; e <= 40.0; e += 1e-3)
        sup = std::max(sup, std::exp(-e) * (1.0 + std::pow(e, delta)));
    m.c_mu = c_nu * (2.0 + a) * sup * std::pow(10.0, 0.5 * a);
    return m;
}

std::function<double(double)> amplitude_quadratic() {
    return [](double K) { return K * K; };
}

std::function<double(double)> amplitude_power_tail(double m) {
    return [m](double K) { return K * K / (1.0 + std::pow(K, 2.0 - m)); };
}

namespace {

// gamma*f + a*g with scaled p-argument (case2) folded in
MuFunction combine(const MuFunction& f, double gamma, const MuFunction& g, double a,
                   double p_scale) {
    MuFunction out;
    bool f_on = !f.is_zero && gamma != 0.0;
    bool g_on = !g.is_zero && a != 0.0;
    if (!f_on && !g_on) return mu_zero();

    auto fa = f.eval_all ? f.eval_all : nullptr;
    auto ga = g.eval_all ? g.eval_all : nullptr;
    MuFunction fc = f, gc = g;
    out.eval_all = [fc, gc, gamma, a, p_scale, f_on, g_on](double e, double p, double& v,
                                                           double& de, double& dp) {
        double ps = p_scale * p;
        v = de = dp = 0.0;
        if (f_on) {
            double v1, de1, dp1;
            fc.all(e, ps, v1, de1, dp1);
            v += gamma * v1;
            de += gamma * de1;
            dp += gamma * p_scale * dp1;
        }
        if (g_on) {
            double v2, de2, dp2;
            gc.all(e, ps, v2, de2, dp2);
            v += a * v2;
            de += a * de2;
            dp += a * p_scale * dp2;
        }
    };
    out.eval = [ea = out.eval_all](double e, double p) {
        double v, de, dp;
        ea(e, p, v, de, dp);
        return v;
    };
    out.d_e = [ea = out.eval_all](double e, double p) {
        double v, de, dp;
        ea(e, p, v, de, dp);
        return de;
    };
    out.d_p = [ea = out.eval_all](double e, double p) {
        double v, de, dp;
        ea(e, p, v, de, dp);
        return dp;
    };
    out.delta = 1e300;
    out.c_mu = 0.0;
    if (f_on) {
        out.delta = std::min(out.delta, f.delta);
        out.c_mu += gamma * f.c_mu * std::max(1.0, p_scale);
    }
    if (g_on) {
        out.delta = std::min(out.delta, g.delta);
        out.c_mu += a * g.c_mu * std::max(1.0, p_scale);
    }
    out.is_zero = false;
    return out;
}

}  // namespace

std::pair<MuFunction, MuFunction> family_at(const FamilySpec& spec, double K) {
    if (K < 0.0) throw std::invalid_argument("family_at: K must be >= 0");
    if (spec.kind == FamilyKind::custom) {
        if (!spec.custom_at) throw std::invalid_argument("family_at: custom family without provider");
        return spec.custom_at(K);
    }
    double scale = (spec.kind == FamilyKind::case2) ? K : 1.0;
    MuFunction ion = combine(spec.mu0, spec.gamma, spec.mu_plus, spec.a_plus(K), scale);
    MuFunction ele = combine(spec.mu0, spec.gamma, spec.mu_minus, spec.a_minus(K), scale);
    return {ion, ele};
}

DecayReport check_decay(const MuFunction& mu, const SampleBox& box, int n_samples) {
    if (n_samples < 1) throw std::invalid_argument("check_decay: n_samples must be >= 1");
    int n_side = std::max(1, static_cast<int>(std::lround(std::sqrt(double(n_samples)))));
    DecayReport rep;
    if (mu.c_mu <= 0.0) {
        rep.max_ratio = mu.is_zero ? 0.0 : 1e300;
        return rep;
    }
    for (int ie = 0; ie < n_side; ++ie) {
        double e = (n_side == 1) ? box.e_min
                                 : box.e_min + (box.e_max - box.e_min) * ie / (n_side - 1);
        for (int ip = 0; ip < n_side; ++ip) {
            double p = (n_side == 1) ? box.p_min
                                     : box.p_min + (box.p_max - box.p_min) * ip / (n_side - 1);
            double v, de, dp;
            mu.all(e, p, v, de, dp);
            double ratio =
                (std::fabs(v) + std::fabs(de) + std::fabs(dp)) *
                (1.0 + std::pow(std::fabs(e), mu.delta)) / mu.c_mu;
            if (ratio > rep.max_ratio) {
                rep.max_ratio = ratio;
                rep.worst_e = e;
                rep.worst_p = p;
            }
        }
    }
    return rep;
}

}  // namespace rvmlab
