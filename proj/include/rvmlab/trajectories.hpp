#ifndef RVMLAB_TRAJECTORIES_HPP
#define RVMLAB_TRAJECTORIES_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "rvmlab/geometry.hpp"
#include "rvmlab/solver.hpp"

namespace rvmlab {

// Particle in cylindrical components; momentum is the relativistic v with
// <v> = sqrt(1 + |v|^2), velocity vhat = v/<v>.
struct ParticleState {
    double r = 0.0, phi = 0.0, z = 0.0;
    double v_r = 0.0, v_phi = 0.0, v_z = 0.0;
    int species_sign = +1;   // +1 ion, -1 electron

    double gamma() const;
};

// Bilinear samplers for phi and Psi = r*(A_phi + A_ext). E = -grad(phi),
// B = (1/r)(-dz Psi, 0, dr Psi) are exact derivatives of the interpolants, so
// e = <v> +- phi and p = r v_phi +- Psi are invariants of the sampled dynamics.
// The cell next to the axis uses a quadratic-in-r Psi profile, keeping B_z finite.
class FieldSampler {
public:
    FieldSampler(const MeridianGrid& grid, const FieldPair& fields);

    double phi(double r, double z) const;
    double psi(double r, double z) const;
    void e_field(double r, double z, double& e_r, double& e_z) const;
    void b_field(double r, double z, double& b_r, double& b_z) const;

    double energy(const ParticleState& s) const;     // <v> + sign*phi
    double momentum(const ParticleState& s) const;    // r*v_phi + sign*Psi

    const MeridianGrid& grid() const { return *grid_; }

private:
    const MeridianGrid* grid_;
    GridField phi_, psi_;
    void locate(double r, double z, int& i, int& j, double& fr, double& fz) const;
};

// Interpolate a scalar grid field (bilinear).
double sample_field(const MeridianGrid& grid, const GridField& f, double r, double z);

struct PushOptions {
    double dt_init = 1e-2;
    double tol = 1e-10;          // local step-doubling error target
    double bisect_time_tol = 1e-12;
};

struct InvariantRecord {
    double e0 = 0.0, p0 = 0.0;
    double max_abs_drift_e = 0.0;
    double max_abs_drift_p = 0.0;
    double max_rel_drift_e = 0.0;   // normalized by max(1, |e0|)
    double max_rel_drift_p = 0.0;
    int reflections = 0;
    double t_final = 0.0;
};

// Specular reflection at a wall point: normal momentum negated, tangential
// and azimuthal components unchanged.
ParticleState reflect(const ParticleState& at_wall, const Vec2& normal);

// One adaptive step of the semi-implicit rotation pusher (half drift,
// half electric kick, exact magnetic rotation, half kick, half drift);
// wall crossings are bisected to the boundary and reflected.
ParticleState push(const ParticleState& s, const FieldSampler& fields, double dt,
                   const PushOptions& opt, int* reflections = nullptr);

// Integrate to time T, tracking invariant drift; optional per-sample callback
// (t, state) invoked at accepted steps.
InvariantRecord integrate(const ParticleState& start, const FieldSampler& fields, double T,
                          const PushOptions& opt,
                          const std::function<void(double, const ParticleState&)>& on_sample = {});

// Batch over particles; OpenMP-parallel, one record per particle.
std::vector<InvariantRecord> integrate_batch(const std::vector<ParticleState>& starts,
                                             const FieldSampler& fields, double T,
                                             const PushOptions& opt);
std::vector<InvariantRecord> integrate_batch_serial(const std::vector<ParticleState>& starts,
                                                    const FieldSampler& fields, double T,
                                                    const PushOptions& opt);

// Deterministically seeded particle ensemble inside the domain.
std::vector<ParticleState> sample_particles(const MeridianGrid& grid, int count, uint64_t seed,
                                            double v_scale = 0.5, int species_sign = +1);

struct ProjectionEstimate {
    double value = 0.0;        // (1/T) int_0^T vhat_phi(s) h(X(s)) ds
    double value_half = 0.0;   // same average over [0, T/2]
    double diagnostic = 0.0;   // |value - value_half| / max(1, |value|)
    bool converged = false;    // diagnostic below 1e-2
};

// Trajectory-average estimator for the kernel projection applied to vhat_phi*h.
// Advisory only; stability certificates never depend on it.
std::vector<ProjectionEstimate> estimate_projection(const GridField& h, int species_sign,
                                                    const FieldSampler& fields, int samples,
                                                    double T, uint64_t seed,
                                                    const PushOptions& opt = {});

}  // namespace rvmlab

#endif
