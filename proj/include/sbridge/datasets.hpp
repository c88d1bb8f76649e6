#pragma once

#include "sbridge/common.hpp"
#include "sbridge/training_set.hpp"

#include <cstdint>
#include <functional>

namespace sbridge {

// x1 ~ N(0, 1 + nu), x2 ~ N(0, nu), independent.
TrainingSet singular_gaussian_2d(std::size_t m, double nu, std::uint64_t seed);

// (r cos theta, r sin theta) with r = 1 + sigma_r xi, theta = pi/4 + sigma_theta xi.
TrainingSet gaussian_ring(std::size_t m, double sigma_r, double sigma_theta, std::uint64_t seed);

// Directions of y = (z_1, ..., z_{d-1}, alpha z_d), z ~ N(0, I), scaled by
// r = 1 + U(0, radial_noise). The last coordinate is reflected to be
// nonnegative unless full_sphere is set.
TrainingSet hyper_semisphere(std::size_t m, std::size_t d, double alpha, double radial_noise,
                             std::uint64_t seed, bool full_sphere = false);

struct OdeSystem {
  std::size_t dim = 0;
  std::function<void(double t, const double* state, double* deriv)> rhs;
  // Characteristic time scale; sets the first trial step.
  double stiffness_scale = 1.0;
};

struct OdeTolerances {
  double rel = 1e-8;
  double abs = 1e-10;
};

// Adaptive Dormand-Prince 5(4) with dense output, sampled at t = k dt_out for
// k = 0 .. floor(t_end / dt_out). Returns dim x N.
Matrix integrate_ode(const OdeSystem& sys, const Vector& state0, double t_end, double dt_out,
                     const OdeTolerances& tol = {});

// Lorenz-63 with every time derivative divided by scale (scale = eps^2 gives the fast system).
OdeSystem lorenz63_system(double scale = 1.0);

// n_points states of Lorenz-63 spaced dt apart, after a transient from a
// seeded random start.
Matrix lorenz63_series(std::size_t n_points, double dt, std::uint64_t seed, double transient = 100.0,
                       const OdeTolerances& tol = {});

enum class CouplingMode { Additive, Multiplicative };

struct MultiscaleOptions {
  CouplingMode mode = CouplingMode::Additive;
  double eps_sep = 0.01;
  std::size_t n_points = 20'001;
  double dt_out = 0.1;
  double coupling = 4.0 / 90.0;
  double transient = 100.0;
  // Fast-only pre-run, in fast time units, to land on the attractor.
  double fast_prerun = 10.0;
  // Looser than OdeTolerances{}: at eps_sep = 0.01 the default costs ~4x the time.
  OdeTolerances tol{1e-6, 1e-9};
  std::uint64_t seed = 0;
};

// Slow variable of dz/dt = z(1 - z^2) + coupling / eps h(z) y2 driven by
// Lorenz-63 run at time scale eps^2. Returns 1 x n_points.
Matrix multiscale_l63(const MultiscaleOptions& options);

// z(1 - z^2).
inline double double_well_drift(double z) { return z * (1.0 - z * z); }

}  // namespace sbridge
