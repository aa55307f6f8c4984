#include "rvmlab/trajectories.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace rvmlab {

double ParticleState::gamma() const {
    return std::sqrt(1.0 + v_r * v_r + v_phi * v_phi + v_z * v_z);
}

FieldSampler::FieldSampler(const MeridianGrid& grid, const FieldPair& fields) : grid_(&grid) {
    phi_ = fields.phi;
    GridField at = fields.a_total();
    psi_.resize(grid.n_nodes());
    for (int j = 0; j < grid.n_z; ++j)
        for (int i = 0; i < grid.n_r; ++i)
            psi_[grid.idx(i, j)] = grid.r(i) * at[grid.idx(i, j)];
}

void FieldSampler::locate(double r, double z, int& i, int& j, double& fr, double& fz) const {
    const MeridianGrid& g = *grid_;
    double margin_r = g.h_r, margin_z = g.h_z;
    if (r < g.domain.r_min - margin_r || r > g.domain.r_max + margin_r ||
        z < g.domain.z_min - margin_z || z > g.domain.z_max + margin_z)
        throw std::out_of_range("FieldSampler: interpolation outside grid");
    i = std::clamp(static_cast<int>(std::floor((r - g.domain.r_min) / g.h_r)), 0, g.n_r - 2);
    j = std::clamp(static_cast<int>(std::floor((z - g.domain.z_min) / g.h_z)), 0, g.n_z - 2);
    fr = (r - g.r(i)) / g.h_r;
    fz = (z - g.z(j)) / g.h_z;
}

double FieldSampler::phi(double r, double z) const {
    int i, j;
    double fr, fz;
    locate(r, z, i, j, fr, fz);
    const MeridianGrid& g = *grid_;
    double f00 = phi_[g.idx(i, j)], f10 = phi_[g.idx(i + 1, j)];
    double f01 = phi_[g.idx(i, j + 1)], f11 = phi_[g.idx(i + 1, j + 1)];
    return (1 - fr) * (1 - fz) * f00 + fr * (1 - fz) * f10 + (1 - fr) * fz * f01 + fr * fz * f11;
}

double FieldSampler::psi(double r, double z) const {
    int i, j;
    double fr, fz;
    locate(r, z, i, j, fr, fz);
    const MeridianGrid& g = *grid_;
    if (i == 0 && g.domain.touches_axis()) {
        // quadratic in r through Psi(0) = 0 and the first column
        double p1 = (1 - fz) * psi_[g.idx(1, j)] + fz * psi_[g.idx(1, j + 1)];
        return fr * fr * p1;
    }
    double f00 = psi_[g.idx(i, j)], f10 = psi_[g.idx(i + 1, j)];
    double f01 = psi_[g.idx(i, j + 1)], f11 = psi_[g.idx(i + 1, j + 1)];
    return (1 - fr) * (1 - fz) * f00 + fr * (1 - fz) * f10 + (1 - fr) * fz * f01 + fr * fz * f11;
}

void FieldSampler::e_field(double r, double z, double& e_r, double& e_z) const {
    int i, j;
    double fr, fz;
    locate(r, z, i, j, fr, fz);
    const MeridianGrid& g = *grid_;
    double f00 = phi_[g.idx(i, j)], f10 = phi_[g.idx(i + 1, j)];
    double f01 = phi_[g.idx(i, j + 1)], f11 = phi_[g.idx(i + 1, j + 1)];
    e_r = -((1 - fz) * (f10 - f00) + fz * (f11 - f01)) / g.h_r;
    e_z = -((1 - fr) * (f01 - f00) + fr * (f11 - f10)) / g.h_z;
}

void FieldSampler::b_field(double r, double z, double& b_r, double& b_z) const {
    int i, j;
    double fr, fz;
    locate(r, z, i, j, fr, fz);
    const MeridianGrid& g = *grid_;
    if (i == 0 && g.domain.touches_axis()) {
        double p1a = psi_[g.idx(1, j)], p1b = psi_[g.idx(1, j + 1)];
        double p1 = (1 - fz) * p1a + fz * p1b;
        double dp1 = (p1b - p1a) / g.h_z;
        // Psi = (r/h)^2 p1(z): dr Psi / r = 2 p1 / h^2, dz Psi / r = r dp1 / h^2
        b_z = 2.0 * p1 / (g.h_r * g.h_r);
        b_r = -r * dp1 / (g.h_r * g.h_r);
        return;
    }
    double f00 = psi_[g.idx(i, j)], f10 = psi_[g.idx(i + 1, j)];
    double f01 = psi_[g.idx(i, j + 1)], f11 = psi_[g.idx(i + 1, j + 1)];
    double dpsidr = ((1 - fz) * (f10 - f00) + fz * (f11 - f01)) / g.h_r;
    double dpsidz = ((1 - fr) * (f01 - f00) + fr * (f11 - f10)) / g.h_z;
    b_r = -dpsidz / r;
    b_z = dpsidr / r;
}

double FieldSampler::energy(const ParticleState& s) const {
    return s.gamma() + s.species_sign * phi(s.r, s.z);
}

double FieldSampler::momentum(const ParticleState& s) const {
    return s.r * s.v_phi + s.species_sign * psi(s.r, s.z);
}

double sample_field(const MeridianGrid& grid, const GridField& f, double r, double z) {
    int i = std::clamp(static_cast<int>(std::floor((r - grid.domain.r_min) / grid.h_r)), 0,
                       grid.n_r - 2);
    int j = std::clamp(static_cast<int>(std::floor((z - grid.domain.z_min) / grid.h_z)), 0,
                       grid.n_z - 2);
    double fr = (r - grid.r(i)) / grid.h_r;
    double fz = (z - grid.z(j)) / grid.h_z;
    double f00 = f[grid.idx(i, j)], f10 = f[grid.idx(i + 1, j)];
    double f01 = f[grid.idx(i, j + 1)], f11 = f[grid.idx(i + 1, j + 1)];
    return (1 - fr) * (1 - fz) * f00 + fr * (1 - fz) * f10 + (1 - fr) * fz * f01 + fr * fz * f11;
}

ParticleState reflect(const ParticleState& at_wall, const Vec2& normal) {
    ParticleState s = at_wall;
    double vn = s.v_r * normal.r + s.v_z * normal.z;
    s.v_r -= 2.0 * vn * normal.r;
    s.v_z -= 2.0 * vn * normal.z;
    return s;
}

namespace {

struct CartState {
    double x = 0, y = 0, z = 0;
    double vx = 0, vy = 0, vz = 0;
    double gamma() const { return std::sqrt(1.0 + vx * vx + vy * vy + vz * vz); }
    double r() const { return std::hypot(x, y); }
};

CartState to_cart(const ParticleState& s) {
    CartState c;
    double cp = std::cos(s.phi), sp = std::sin(s.phi);
    c.x = s.r * cp;
    c.y = s.r * sp;
    c.z = s.z;
    c.vx = s.v_r * cp - s.v_phi * sp;
    c.vy = s.v_r * sp + s.v_phi * cp;
    c.vz = s.v_z;
    return c;
}

ParticleState to_cyl(const CartState& c, int species_sign) {
    ParticleState s;
    s.r = c.r();
    s.phi = std::atan2(c.y, c.x);
    s.z = c.z;
    double er_x = 1.0, er_y = 0.0;
    if (s.r > 1e-300) {
        er_x = c.x / s.r;
        er_y = c.y / s.r;
    }
    s.v_r = c.vx * er_x + c.vy * er_y;
    s.v_phi = -c.vx * er_y + c.vy * er_x;
    s.v_z = c.vz;
    s.species_sign = species_sign;
    return s;
}

// half drift, half electric kick, exact magnetic rotation, half kick, half drift
CartState raw_step(const CartState& s, const FieldSampler& f, int q, double dt) {
    CartState c = s;
    double g = c.gamma();
    c.x += 0.5 * dt * c.vx / g;
    c.y += 0.5 * dt * c.vy / g;
    c.z += 0.5 * dt * c.vz / g;

    double r = c.r();
    double er_x = 1.0, er_y = 0.0;
    if (r > 1e-14) {
        er_x = c.x / r;
        er_y = c.y / r;
    }
    double Er, Ez, Br, Bz;
    f.e_field(r, c.z, Er, Ez);
    f.b_field(r, c.z, Br, Bz);
    double Ex = Er * er_x, Ey = Er * er_y;
    double Bx = Br * er_x, By = Br * er_y;

    double hq = 0.5 * dt * q;
    double vx = c.vx + hq * Ex, vy = c.vy + hq * Ey, vz = c.vz + hq * Ez;

    double gm = std::sqrt(1.0 + vx * vx + vy * vy + vz * vz);
    double wx = -q * Bx / gm, wy = -q * By / gm, wz = -q * Bz / gm;
    double wn = std::sqrt(wx * wx + wy * wy + wz * wz);
    if (wn > 0.0) {
        double th = wn * dt;
        double ux = wx / wn, uy = wy / wn, uz = wz / wn;
        double ct = std::cos(th), st = std::sin(th);
        double dotp = ux * vx + uy * vy + uz * vz;
        double cx = uy * vz - uz * vy, cy = uz * vx - ux * vz, cz = ux * vy - uy * vx;
        double nvx = vx * ct + cx * st + ux * dotp * (1.0 - ct);
        double nvy = vy * ct + cy * st + uy * dotp * (1.0 - ct);
        double nvz = vz * ct + cz * st + uz * dotp * (1.0 - ct);
        vx = nvx;
        vy = nvy;
        vz = nvz;
    }
    c.vx = vx + hq * Ex;
    c.vy = vy + hq * Ey;
    c.vz = vz + hq * Ez;

    double g2 = c.gamma();
    c.x += 0.5 * dt * c.vx / g2;
    c.y += 0.5 * dt * c.vy / g2;
    c.z += 0.5 * dt * c.vz / g2;
    return c;
}

double outside_measure(const MeridianGrid& g, double r, double z) {
    double out = std::max(r - g.domain.r_max, std::max(z - g.domain.z_max, g.domain.z_min - z));
    if (!g.domain.touches_axis()) out = std::max(out, g.domain.r_min - r);
    return out;
}

// two half steps; returns final and exposes the midpoint for crossing checks
CartState composite_step(const CartState& s, const FieldSampler& f, int q, double dt,
                         CartState* mid = nullptr) {
    CartState m = raw_step(s, f, q, 0.5 * dt);
    if (mid) *mid = m;
    return raw_step(m, f, q, 0.5 * dt);
}

double state_diff(const CartState& a, const CartState& b) {
    double sp = std::max({1.0, std::fabs(a.x), std::fabs(a.y), std::fabs(a.z)});
    double sv = std::max({1.0, std::fabs(a.vx), std::fabs(a.vy), std::fabs(a.vz)});
    double dp = std::max({std::fabs(a.x - b.x), std::fabs(a.y - b.y), std::fabs(a.z - b.z)});
    double dv = std::max({std::fabs(a.vx - b.vx), std::fabs(a.vy - b.vy), std::fabs(a.vz - b.vz)});
    return std::max(dp / sp, dv / sv);
}

// cell/containment marker: the interpolated force is smooth on one cell, so
// steps are cut at marker changes (and reflected at domain exits)
struct Marker {
    int i;
    int j;
    bool inside;
    bool operator==(const Marker& o) const = default;
};

Marker marker_of(const MeridianGrid& g, double r, double z) {
    Marker m;
    m.i = std::clamp(static_cast<int>(std::floor((r - g.domain.r_min) / g.h_r)), 0, g.n_r - 2);
    m.j = std::clamp(static_cast<int>(std::floor((z - g.domain.z_min) / g.h_z)), 0, g.n_z - 2);
    m.inside = outside_measure(g, r, z) <= 0.0;
    return m;
}

Marker marker_of(const MeridianGrid& g, const CartState& s) {
    return marker_of(g, s.r(), s.z);
}

void reflect_cart(const MeridianGrid& g, CartState& s, bool outward_r, bool inward_r,
                  bool top_z, bool bottom_z, int& reflections) {
    if (outward_r || inward_r) {
        double r_face = outward_r ? g.domain.r_max : g.domain.r_min;
        double r_here = s.r();
        if (r_here > 1e-300) {
            double sc = r_face / r_here;
            s.x *= sc;
            s.y *= sc;
        }
        double rr = s.r();
        double er_x = s.x / rr, er_y = s.y / rr;
        double vn = s.vx * er_x + s.vy * er_y;
        s.vx -= 2.0 * vn * er_x;
        s.vy -= 2.0 * vn * er_y;
        ++reflections;
    }
    if (top_z || bottom_z) {
        s.z = top_z ? g.domain.z_max : g.domain.z_min;
        s.vz = -s.vz;
        ++reflections;
    }
}

// advance by exactly dt: local-error subdivision, steps cut at cell-boundary
// crossings, specular reflection at domain exits (corner hits r-face first)
CartState advance(CartState s, const FieldSampler& f, const MeridianGrid& g, int q, double dt,
                  const PushOptions& opt, int& reflections) {
    // displacement per sub-step stays below half a cell (|vhat| < 1)
    const double step_cap = 0.45 * std::min(g.h_r, g.h_z);
    double remaining = dt;
    long guard = 0;
    while (remaining > 0.0) {
        if (++guard > 10000000L)
            throw std::runtime_error("push: event cap exceeded (chattering trajectory)");
        double step = std::min(remaining, step_cap);

        // local error control on the smooth extension
        for (int halvings = 0; halvings < 40; ++halvings) {
            CartState full = raw_step(s, f, q, step);
            CartState two = composite_step(s, f, q, step);
            if (state_diff(full, two) <= opt.tol) break;
            step *= 0.5;
        }

        Marker m0 = marker_of(g, s);
        CartState mid;
        CartState end = composite_step(s, f, q, step, &mid);
        if (marker_of(g, mid) == m0 && marker_of(g, end) == m0) {
            s = end;
            remaining -= step;
            continue;
        }

        // first marker change in (0, step]: bisect, then land just past it
        double lo = 0.0;
        double hi = (marker_of(g, mid) != m0) ? 0.5 * step : step;
        while (hi - lo > opt.bisect_time_tol) {
            double t = 0.5 * (lo + hi);
            if (marker_of(g, composite_step(s, f, q, t)) != m0)
                hi = t;
            else
                lo = t;
        }
        CartState past = composite_step(s, f, q, hi);
        Marker m_past = marker_of(g, past);
        if (m_past.inside) {
            // plain cell change: continue from just past the edge
            s = past;
            remaining -= hi;
            continue;
        }
        // domain exit: reflect at the wall point (the last inside state)
        CartState at_wall = composite_step(s, f, q, lo);
        bool outward_r = past.r() >= g.domain.r_max;
        bool inward_r = !g.domain.touches_axis() && past.r() <= g.domain.r_min;
        bool top_z = past.z >= g.domain.z_max;
        bool bottom_z = past.z <= g.domain.z_min;
        reflect_cart(g, at_wall, outward_r, inward_r, top_z, bottom_z, reflections);
        s = at_wall;
        remaining -= lo;
        if (remaining <= opt.bisect_time_tol) break;
    }
    return s;
}

}  // namespace

ParticleState push(const ParticleState& s, const FieldSampler& fields, double dt,
                   const PushOptions& opt, int* reflections) {
    if (!(dt > 0.0)) throw std::invalid_argument("push: dt must be > 0");
    const MeridianGrid& g = fields.grid();
    int refl = 0;
    CartState c = to_cart(s);
    c = advance(c, fields, g, s.species_sign, dt, opt, refl);
    if (reflections) *reflections += refl;
    return to_cyl(c, s.species_sign);
}

InvariantRecord integrate(const ParticleState& start, const FieldSampler& fields, double T,
                          const PushOptions& opt,
                          const std::function<void(double, const ParticleState&)>& on_sample) {
    const MeridianGrid& g = fields.grid();
    double dt_geo = 0.45 * std::min(g.h_r, g.h_z);
    double dt = std::min(opt.dt_init, dt_geo);

    InvariantRecord rec;
    rec.e0 = fields.energy(start);
    rec.p0 = fields.momentum(start);
    double se = std::max(1.0, std::fabs(rec.e0));
    double sp = std::max(1.0, std::fabs(rec.p0));

    ParticleState s = start;
    double t = 0.0;
    if (on_sample) on_sample(0.0, s);
    while (t < T) {
        double step = std::min(dt, T - t);
        s = push(s, fields, step, opt, &rec.reflections);
        t += step;
        double de = std::fabs(fields.energy(s) - rec.e0);
        double dp = std::fabs(fields.momentum(s) - rec.p0);
        rec.max_abs_drift_e = std::max(rec.max_abs_drift_e, de);
        rec.max_abs_drift_p = std::max(rec.max_abs_drift_p, dp);
        if (on_sample) on_sample(t, s);
    }
    rec.max_rel_drift_e = rec.max_abs_drift_e / se;
    rec.max_rel_drift_p = rec.max_abs_drift_p / sp;
    rec.t_final = t;
    return rec;
}

namespace {

std::vector<InvariantRecord> batch_impl(const std::vector<ParticleState>& starts,
                                        const FieldSampler& fields, double T,
                                        const PushOptions& opt, bool parallel) {
    std::vector<InvariantRecord> out(starts.size());
    const int n = static_cast<int>(starts.size());
#pragma omp parallel for schedule(dynamic, 1) if (parallel)
    for (int i = 0; i < n; ++i) out[i] = integrate(starts[i], fields, T, opt);
    return out;
}

}  // namespace

std::vector<InvariantRecord> integrate_batch(const std::vector<ParticleState>& starts,
                                             const FieldSampler& fields, double T,
                                             const PushOptions& opt) {
    return batch_impl(starts, fields, T, opt, true);
}

std::vector<InvariantRecord> integrate_batch_serial(const std::vector<ParticleState>& starts,
                                                    const FieldSampler& fields, double T,
                                                    const PushOptions& opt) {
    return batch_impl(starts, fields, T, opt, false);
}

std::vector<ParticleState> sample_particles(const MeridianGrid& grid, int count, uint64_t seed,
                                            double v_scale, int species_sign) {
    std::vector<ParticleState> out;
    out.reserve(count);
    std::mt19937_64 rng(seed);
    const MeridianDomain& d = grid.domain;
    double inset_r = 0.1 * d.width_r(), inset_z = 0.1 * d.width_z();
    std::uniform_real_distribution<double> ur(d.r_min + inset_r, d.r_max - inset_r);
    std::uniform_real_distribution<double> uz(d.z_min + inset_z, d.z_max - inset_z);
    std::normal_distribution<double> nv(0.0, v_scale);
    for (int i = 0; i < count; ++i) {
        ParticleState s;
        s.r = ur(rng);
        s.phi = 0.0;
        s.z = uz(rng);
        s.v_r = nv(rng);
        s.v_phi = nv(rng);
        s.v_z = nv(rng);
        s.species_sign = species_sign;
        out.push_back(s);
    }
    return out;
}

std::vector<ProjectionEstimate> estimate_projection(const GridField& h, int species_sign,
                                                    const FieldSampler& fields, int samples,
                                                    double T, uint64_t seed,
                                                    const PushOptions& opt) {
    const MeridianGrid& g = fields.grid();
    std::vector<ParticleState> starts = sample_particles(g, samples, seed, 0.5, species_sign);
    std::vector<ProjectionEstimate> out(starts.size());
    const int n = static_cast<int>(starts.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < n; ++i) {
        double accum = 0.0, accum_half = 0.0;
        double t_prev = 0.0, f_prev = 0.0;
        bool first = true;
        integrate(starts[i], fields, T, opt, [&](double t, const ParticleState& s) {
            double f = (s.v_phi / s.gamma()) * sample_field(g, h, s.r, s.z);
            if (!first) {
                double inc = 0.5 * (f + f_prev) * (t - t_prev);
                accum += inc;
                if (t <= 0.5 * T) accum_half += inc;
            }
            first = false;
            t_prev = t;
            f_prev = f;
        });
        ProjectionEstimate pe;
        pe.value = accum / T;
        pe.value_half = accum_half / (0.5 * T);
        pe.diagnostic = std::fabs(pe.value - pe.value_half) / std::max(1.0, std::fabs(pe.value));
        pe.converged = pe.diagnostic < 1e-2;
        out[i] = pe;
    }
    return out;
}

}  // namespace rvmlab
