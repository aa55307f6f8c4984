#include "rvmlab/moments.hpp"

#include <algorithm>
#include <cmath>

namespace rvmlab {

double decay_tail(double c_mu, double delta, double R) {
    if (c_mu <= 0.0) return 0.0;
    // int_R^inf u^2/(1+<u>^delta) du with u = R/s, s in (0,1]
    Quad1D q = gauss_legendre(64);
    double s_int = 0.0;
    for (size_t i = 0; i < q.size(); ++i) {
        double s = 0.5 * (q.nodes[i] + 1.0);
        double ws = 0.5 * q.weights[i];
        double u = R / s;
        double g = std::sqrt(1.0 + u * u);
        s_int += ws * (u * u / (1.0 + std::pow(g, delta))) * (R / (s * s));
    }
    return c_mu * 4.0 * M_PI * s_int;
}

double certified_cutoff(double c_mu, double delta, double tol) {
    if (c_mu <= 0.0) return 1.0;
    if (!(tol > 0.0)) throw std::invalid_argument("certified_cutoff: tolerance must be > 0");
    double R = 1.0;
    while (decay_tail(c_mu, delta, R) > tol) {
        R *= 2.0;
        if (R > 1e12)
            throw QuadratureTailError("certified_cutoff: tail bound unreachable",
                                      decay_tail(c_mu, delta, R));
    }
    return R;
}

MomentQuadrature build_quadrature(const MuFunction& ion, const MuFunction& electron, int n_w,
                                  int n_vphi, double tail_tolerance, double w_max,
                                  double vphi_max) {
    double c_tot = (ion.is_zero ? 0.0 : ion.c_mu) + (electron.is_zero ? 0.0 : electron.c_mu);
    double delta = std::min(ion.is_zero ? 1e300 : ion.delta,
                            electron.is_zero ? 1e300 : electron.delta);
    if (c_tot <= 0.0) delta = 4.0;
    return build_quadrature_for_bound(c_tot, delta, n_w, n_vphi, tail_tolerance, w_max,
                                      vphi_max);
}

namespace {

Quad1D half_rule(double cutoff, int pts_inner) {
    std::vector<double> edges = geometric_edges(cutoff);
    return composite_gauss(edges, graded_points(edges, pts_inner));
}

}  // namespace

MomentQuadrature build_quadrature_for_bound(double c_mu, double delta, int n_w, int n_vphi,
                                            double tail_tolerance, double w_max,
                                            double vphi_max) {
    if (n_w < 8 || n_vphi < 8)
        throw std::invalid_argument("build_quadrature: n_w and n_vphi must be >= 8");
    double R = certified_cutoff(c_mu, delta, tail_tolerance);

    MomentQuadrature mq;
    mq.w_max = (w_max > 0.0) ? w_max : R;
    mq.vphi_max = (vphi_max > 0.0) ? vphi_max : R;
    mq.tail_tolerance = tail_tolerance;
    mq.pts_inner = std::clamp(std::min(n_w, n_vphi) / 8, 12, 48);
    mq.w = half_rule(mq.w_max, std::clamp(n_w / 8, 12, 48));
    mq.vphi = mirror_symmetric(half_rule(mq.vphi_max, std::clamp(n_vphi / 8, 12, 48)));
    return mq;
}

MomentQuadrature refine(const MomentQuadrature& q) {
    MomentQuadrature out = q;
    out.pts_inner = 2 * q.pts_inner;
    out.w = half_rule(q.w_max, out.pts_inner);
    out.vphi = mirror_symmetric(half_rule(q.vphi_max, out.pts_inner));
    return out;
}

namespace {

void check_tail(const MuFunction& ion, const MuFunction& electron, const MomentQuadrature& q) {
    double c_tot = (ion.is_zero ? 0.0 : ion.c_mu) + (electron.is_zero ? 0.0 : electron.c_mu);
    if (c_tot <= 0.0) return;
    double delta = std::min(ion.is_zero ? 1e300 : ion.delta,
                            electron.is_zero ? 1e300 : electron.delta);
    double R = std::min(q.w_max, q.vphi_max);
    double tail = decay_tail(c_tot, delta, R);
    if (tail > q.tail_tolerance)
        throw QuadratureTailError(
            "compute_moments: quadrature tail bound violated (estimated tail " +
                std::to_string(tail) + " > tolerance " + std::to_string(q.tail_tolerance) + ")",
            tail);
}

// all six velocity integrals at one spatial node
struct NodeAccum {
    double rho = 0.0, j = 0.0, m1 = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
};

inline NodeAccum node_moments(double r, double phi_v, double a_v, const MuFunction& ion,
                              const MuFunction& electron, const MomentQuadrature& q,
                              bool with_mult) {
    NodeAccum acc;
    const bool has_ion = !ion.is_zero;
    const bool has_ele = !electron.is_zero;
    if (!has_ion && !has_ele) return acc;
    const size_t nw = q.w.size(), nv = q.vphi.size();
    for (size_t iw = 0; iw < nw; ++iw) {
        const double w = q.w.nodes[iw];
        const double base_wt = 2.0 * M_PI * w * q.w.weights[iw];
        const double w2p1 = 1.0 + w * w;
        for (size_t iv = 0; iv < nv; ++iv) {
            const double vphi = q.vphi.nodes[iv];
            const double wt = base_wt * q.vphi.weights[iv];
            const double gamma = std::sqrt(w2p1 + vphi * vphi);
            const double vhat = vphi / gamma;
            double vp = 0.0, dep = 0.0, dpp = 0.0;
            double vm = 0.0, dem = 0.0, dpm = 0.0;
            if (has_ion) ion.all(gamma + phi_v, r * (vphi + a_v), vp, dep, dpp);
            if (has_ele) electron.all(gamma - phi_v, r * (vphi - a_v), vm, dem, dpm);
            const double diff = vp - vm;
            acc.rho += wt * diff;
            acc.j += wt * vhat * diff;
            if (with_mult) {
                const double sp = dpp + dpm;
                const double se = dep + dem;
                acc.m1 += wt * r * vhat * sp;
                acc.m2 += wt * vhat * se;
                acc.m3 += wt * r * sp;
                acc.m4 += wt * se;
            }
        }
    }
    return acc;
}

MomentFields moments_impl(const MeridianGrid& grid, const GridField& phi,
                          const GridField& a_total, const MuFunction& ion,
                          const MuFunction& electron, const MomentQuadrature& quad,
                          bool with_mult, bool parallel) {
    if (phi.size() != static_cast<size_t>(grid.n_nodes()) || a_total.size() != phi.size())
        throw std::invalid_argument("compute_moments: field size mismatch");
    check_tail(ion, electron, quad);

    const int n = grid.n_nodes();
    MomentFields out;
    out.rho.assign(n, 0.0);
    out.j_phi.assign(n, 0.0);
    if (with_mult) {
        out.m1.assign(n, 0.0);
        out.m2.assign(n, 0.0);
        out.m3.assign(n, 0.0);
        out.m4.assign(n, 0.0);
    }

#pragma omp parallel for schedule(dynamic, 8) if (parallel)
    for (int k = 0; k < n; ++k) {
        const int i = k % grid.n_r;
        NodeAccum a = node_moments(grid.r(i), phi[k], a_total[k], ion, electron, quad, with_mult);
        out.rho[k] = a.rho;
        out.j_phi[k] = a.j;
        if (with_mult) {
            out.m1[k] = a.m1;
            out.m2[k] = a.m2;
            out.m3[k] = a.m3;
            out.m4[k] = a.m4;
        }
    }
    return out;
}

}  // namespace

MomentFields compute_moments(const MeridianGrid& grid, const GridField& phi,
                             const GridField& a_total, const MuFunction& ion,
                             const MuFunction& electron, const MomentQuadrature& quad,
                             bool with_multipliers) {
    return moments_impl(grid, phi, a_total, ion, electron, quad, with_multipliers, true);
}

MomentFields compute_moments_serial(const MeridianGrid& grid, const GridField& phi,
                                    const GridField& a_total, const MuFunction& ion,
                                    const MuFunction& electron, const MomentQuadrature& quad,
                                    bool with_multipliers) {
    return moments_impl(grid, phi, a_total, ion, electron, quad, with_multipliers, false);
}

PointMoments brute_force_moments(double phi, double a_total, double r, const MuFunction& ion,
                                 const MuFunction& electron, double cutoff, int n) {
    // panels mirrored about 0 so parity cancellations are exact
    Quad1D axis = mirror_symmetric(half_rule(cutoff, std::clamp(n / 8, 12, 48)));

    PointMoments out;
    const size_t m = axis.size();
    for (size_t a = 0; a < m; ++a) {
        double vr = axis.nodes[a];
        for (size_t b = 0; b < m; ++b) {
            double vphi = axis.nodes[b];
            double wab = axis.weights[a] * axis.weights[b];
            for (size_t c = 0; c < m; ++c) {
                double vz = axis.nodes[c];
                double wt = wab * axis.weights[c];
                double gamma = std::sqrt(1.0 + vr * vr + vphi * vphi + vz * vz);
                double fp = ion.is_zero ? 0.0 : ion.eval(gamma + phi, r * (vphi + a_total));
                double fm = electron.is_zero ? 0.0
                                             : electron.eval(gamma - phi, r * (vphi - a_total));
                double diff = fp - fm;
                out.rho += wt * diff;
                out.j_phi += wt * (vphi / gamma) * diff;
                out.j_r += wt * (vr / gamma) * diff;
                out.j_z += wt * (vz / gamma) * diff;
            }
        }
    }
    return out;
}

IntegralBoundReport integral_bound_check(const MeridianGrid& grid, const GridField& phi,
                                         const GridField& a_total, double delta,
                                         const MomentQuadrature& quad) {
    if (!(delta > 3.0)) throw std::invalid_argument("integral_bound_check: delta must be > 3");
    const int n = grid.n_nodes();
    const size_t nw = quad.w.size(), nv = quad.vphi.size();

    // C_int1 = int dv/(1+<v>^delta); C_int2 depends on r, computed per column
    double c_int1 = 0.0;
    for (size_t iw = 0; iw < nw; ++iw) {
        double w = quad.w.nodes[iw];
        double bw = 2.0 * M_PI * w * quad.w.weights[iw];
        for (size_t iv = 0; iv < nv; ++iv) {
            double vphi = quad.vphi.nodes[iv];
            double g = std::sqrt(1.0 + w * w + vphi * vphi);
            c_int1 += bw * quad.vphi.weights[iv] / (1.0 + std::pow(g, delta));
        }
    }
    std::vector<double> c_int2(grid.n_r, 0.0);
    for (int i = 0; i < grid.n_r; ++i) {
        double r = grid.r(i);
        double rd = std::pow(r, delta);
        double s = 0.0;
        for (size_t iw = 0; iw < nw; ++iw) {
            double w = quad.w.nodes[iw];
            double bw = 2.0 * M_PI * w * quad.w.weights[iw];
            for (size_t iv = 0; iv < nv; ++iv) {
                double vphi = quad.vphi.nodes[iv];
                double g = std::sqrt(1.0 + w * w + vphi * vphi);
                s += bw * quad.vphi.weights[iv] /
                     (1.0 + std::pow(g, delta) + rd * std::pow(std::fabs(vphi), delta));
            }
        }
        c_int2[i] = s;
    }

    IntegralBoundReport rep;
    const double two_d = std::pow(2.0, delta);
    for (int k = 0; k < n; ++k) {
        int i = k % grid.n_r;
        double r = grid.r(i);
        double pv = phi[k], av = a_total[k];
        for (int sign = -1; sign <= 1; sign += 2) {
            double I = 0.0;
            for (size_t iw = 0; iw < nw; ++iw) {
                double w = quad.w.nodes[iw];
                double bw = 2.0 * M_PI * w * quad.w.weights[iw];
                for (size_t iv = 0; iv < nv; ++iv) {
                    double vphi = quad.vphi.nodes[iv];
                    double g = std::sqrt(1.0 + w * w + vphi * vphi);
                    double ev = std::fabs(g + sign * pv);
                    double pp = std::fabs(r * (vphi + sign * av));
                    I += bw * quad.vphi.weights[iv] /
                         (1.0 + std::pow(ev, delta) + std::pow(pp, delta));
                }
            }
            double upper = (2.0 + two_d * std::pow(std::fabs(pv), delta)) * c_int1;
            double lower = c_int2[i] / (two_d * (1.0 + std::pow(std::fabs(pv), delta) +
                                                 std::pow(r, delta) * std::pow(std::fabs(av), delta)));
            double um = upper - I;
            double lm = I - lower;
            if (um < rep.min_upper_margin) rep.min_upper_margin = um;
            if (lm < rep.min_lower_margin) rep.min_lower_margin = lm;
            if (um < 0.0 || lm < 0.0) {
                rep.ok = false;
                if (rep.worst_node < 0) rep.worst_node = k;
            }
        }
    }
    return rep;
}

namespace {

BracketKernels bracket_impl(const MeridianGrid& grid, const GridField& phi,
                            const GridField& a_total, const MuFunction& ion,
                            const MuFunction& electron, const MomentQuadrature& quad,
                            bool parallel) {
    if (phi.size() != static_cast<size_t>(grid.n_nodes()) || a_total.size() != phi.size())
        throw std::invalid_argument("compute_bracket_kernels: field size mismatch");
    check_tail(ion, electron, quad);
    const int n = grid.n_nodes();
    BracketKernels out;
    out.drive.assign(n, 0.0);
    out.proj.assign(n, 0.0);
    const bool has_ion = !ion.is_zero;
    const bool has_ele = !electron.is_zero;
    const size_t nw = quad.w.size(), nv = quad.vphi.size();

#pragma omp parallel for schedule(dynamic, 8) if (parallel)
    for (int k = 0; k < n; ++k) {
        const int i = k % grid.n_r;
        const double r = grid.r(i);
        const double pv = phi[k], av = a_total[k];
        double drive = 0.0, proj = 0.0;
        for (size_t iw = 0; iw < nw; ++iw) {
            const double w = quad.w.nodes[iw];
            const double bw = 2.0 * M_PI * w * quad.w.weights[iw];
            const double w2p1 = 1.0 + w * w;
            for (size_t iv = 0; iv < nv; ++iv) {
                const double vphi = quad.vphi.nodes[iv];
                const double wt = bw * quad.vphi.weights[iv];
                const double gamma = std::sqrt(w2p1 + vphi * vphi);
                const double vhat = vphi / gamma;
                double v, de, dp;
                if (has_ion) {
                    ion.all(gamma + pv, r * (vphi + av), v, de, dp);
                    drive += wt * vhat * r * dp;
                    proj += wt * vhat * vhat * std::fabs(de);
                }
                if (has_ele) {
                    electron.all(gamma - pv, r * (vphi - av), v, de, dp);
                    drive += wt * vhat * r * dp;
                    proj += wt * vhat * vhat * std::fabs(de);
                }
            }
        }
        out.drive[k] = drive;
        out.proj[k] = proj;
    }
    return out;
}

}  // namespace

BracketKernels compute_bracket_kernels(const MeridianGrid& grid, const GridField& phi,
                                       const GridField& a_total, const MuFunction& ion,
                                       const MuFunction& electron,
                                       const MomentQuadrature& quad) {
    return bracket_impl(grid, phi, a_total, ion, electron, quad, true);
}

BracketKernels compute_bracket_kernels_serial(const MeridianGrid& grid, const GridField& phi,
                                              const GridField& a_total, const MuFunction& ion,
                                              const MuFunction& electron,
                                              const MomentQuadrature& quad) {
    return bracket_impl(grid, phi, a_total, ion, electron, quad, false);
}

}  // namespace rvmlab
