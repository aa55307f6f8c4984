// Timing comparison of the OpenMP kernels against their serial references:
// velocity-moment quadrature, bracket kernels and the particle batch.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>

#include <omp.h>

#include "rvmlab/moments.hpp"
#include "rvmlab/stability.hpp"
#include "rvmlab/trajectories.hpp"

using namespace rvmlab;
using clk = std::chrono::steady_clock;

namespace {

double seconds_since(clk::time_point t0) {
    return std::chrono::duration<double>(clk::now() - t0).count();
}

template <typename F>
double time_best_of(int reps, F&& f) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        auto t0 = clk::now();
        f();
        best = std::min(best, seconds_since(t0));
    }
    return best;
}

}  // namespace

int main(int argc, char** argv) {
    bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;
    const int grid_n = quick ? 9 : 33;
    const int quad_n = quick ? 48 : 128;
    const int particles = quick ? 4 : 64;
    const double t_final = quick ? 5.0 : 50.0;
    const int reps = quick ? 1 : 3;

    std::printf("threads available: %d\n", omp_get_max_threads());

    MeridianGrid grid = build_grid({1.0, 2.0, 0.0, 1.0}, grid_n, grid_n);
    MuFunction ion = mu_separable(1.0);
    MuFunction ele = mu_shifted(0.5);
    MomentQuadrature quad = build_quadrature(ion, ele, quad_n, quad_n, 1e-5);

    GridField phi(grid.n_nodes()), a(grid.n_nodes());
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (int k = 0; k < grid.n_nodes(); ++k) {
        phi[k] = u(rng);
        a[k] = u(rng);
    }

    {
        MomentFields ref = compute_moments_serial(grid, phi, a, ion, ele, quad);
        MomentFields par = compute_moments(grid, phi, a, ion, ele, quad);
        bool same = ref.rho == par.rho && ref.j_phi == par.j_phi;
        double ts = time_best_of(reps, [&] { compute_moments_serial(grid, phi, a, ion, ele, quad); });
        double tp = time_best_of(reps, [&] { compute_moments(grid, phi, a, ion, ele, quad); });
        std::printf("moments      serial %8.3f ms   parallel %8.3f ms   speedup %5.2fx  %s\n",
                    ts * 1e3, tp * 1e3, ts / tp, same ? "bitwise-equal" : "MISMATCH");
        if (!same) return 1;
    }
    {
        BracketKernels ref = compute_bracket_kernels_serial(grid, phi, a, ion, ele, quad);
        BracketKernels par = compute_bracket_kernels(grid, phi, a, ion, ele, quad);
        bool same = ref.drive == par.drive && ref.proj == par.proj;
        double ts = time_best_of(
            reps, [&] { compute_bracket_kernels_serial(grid, phi, a, ion, ele, quad); });
        double tp =
            time_best_of(reps, [&] { compute_bracket_kernels(grid, phi, a, ion, ele, quad); });
        std::printf("bracket      serial %8.3f ms   parallel %8.3f ms   speedup %5.2fx  %s\n",
                    ts * 1e3, tp * 1e3, ts / tp, same ? "bitwise-equal" : "MISMATCH");
        if (!same) return 1;
    }
    {
        FieldPair fields = FieldPair::zero(grid);
        for (int j = 0; j < grid.n_z; ++j)
            for (int i = 0; i < grid.n_r; ++i)
                if (grid.kind_at(i, j) == NodeKind::interior) {
                    fields.phi[grid.idx(i, j)] = 0.2 * std::sin(M_PI * (grid.r(i) - 1.0));
                    fields.a_phi[grid.idx(i, j)] = 0.1 * std::sin(M_PI * grid.z(j));
                }
        FieldSampler sampler(grid, fields);
        std::vector<ParticleState> starts = sample_particles(grid, particles, 7);
        PushOptions opt;
        auto ref = integrate_batch_serial(starts, sampler, t_final, opt);
        auto par = integrate_batch(starts, sampler, t_final, opt);
        bool same = true;
        for (size_t i = 0; i < ref.size(); ++i)
            same = same && ref[i].max_abs_drift_e == par[i].max_abs_drift_e &&
                   ref[i].reflections == par[i].reflections;
        double ts =
            time_best_of(reps, [&] { integrate_batch_serial(starts, sampler, t_final, opt); });
        double tp = time_best_of(reps, [&] { integrate_batch(starts, sampler, t_final, opt); });
        std::printf("trajectories serial %8.3f ms   parallel %8.3f ms   speedup %5.2fx  %s\n",
                    ts * 1e3, tp * 1e3, ts / tp, same ? "bitwise-equal" : "MISMATCH");
        if (!same) return 1;
    }
    return 0;
}
