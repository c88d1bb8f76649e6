#pragma once

#include "sbridge/bridge.hpp"
#include "sbridge/common.hpp"
#include "sbridge/random.hpp"
#include "sbridge/sampler.hpp"

#include <functional>
#include <vector>

namespace sbridge {

using ScalarField = std::function<double(const Vector&)>;
using VectorField = std::function<Vector(const Vector&)>;

enum class NoiseMode { Unaware, Aware };

// Known potential V and its gradient.
struct PotentialSpec {
  ScalarField value;
  VectorField gradient;

  // Compares the gradient against central differences at each column of
  // `probes`; throws InvalidArgument when they disagree beyond `rel_tol`.
  void validate(const Matrix& probes, double rel_tol = 1e-5) const;

  static PotentialSpec zero(std::size_t dim);
  // V(x) = curvature / 2 * ||x - center||^2.
  static PotentialSpec quadratic(Vector center, double curvature);
};

// Split of x into a clamped block y (held at y_star) and a free block z.
struct ConditionalSpec {
  std::vector<std::size_t> y_indices;
  std::vector<std::size_t> z_indices;
  Vector y_star;
  std::size_t n_inner = 1;
  NoiseMode noise_mode = NoiseMode::Unaware;
  // Restart the inner chain from a fresh state every outer step instead of
  // carrying the last inner state forward.
  bool reset_inner = false;

  // z_indices is the complement of y_indices in [0, dim).
  static ConditionalSpec clamp(std::size_t dim, std::vector<std::size_t> y_indices, Vector y_star,
                               std::size_t n_inner = 1, NoiseMode mode = NoiseMode::Unaware);

  void validate(std::size_t dim) const;
};

// Copy of x with the y-block overwritten by `y_star`.
Vector clamp_block(const Vector& x, const std::vector<std::size_t>& y_indices, const Vector& y_star);

// One clamped split step: X^ = clamp(x), X_{n+1/2} = X^ + noise, X_{n+1} = m(X_{n+1/2}).
StepResult conditional_step(const BridgeModel& model, const Vector& x,
                            const std::vector<std::size_t>& y_indices, const Vector& y_star,
                            NoiseMode mode, const Vector& xi);

// X_{n+1/2} = X_n - eps grad V(X_n) + sqrt(2) Xi, X_{n+1} = m(X_{n+1/2}), Xi ~ N(0, eps I).
// The scheme field of cfg is ignored.
ChainOutput bayesian_chain(const BridgeModel& model, const PotentialSpec& potential,
                           const SamplerConfig& cfg);

// x_{n+1/2} = x_n - eps grad V(x_n), x_{n+1} = m(x_{n+1/2}).
// Returns the d x (n_iter + 1) iterate history, starting at x0.
Matrix regularized_minimize(const BridgeModel& model, const PotentialSpec& potential,
                            const Vector& x0, std::size_t n_iter);

// Samples of the z-block, each taken after spec.n_inner clamped split steps.
ChainOutput conditional_chain(const BridgeModel& model, const ConditionalSpec& spec,
                              const SamplerConfig& cfg);

// Bridge over pairs (z_{k-1}, psi_k) plus the known slow drift F_z.
struct ClosureModel {
  BridgeModel bridge;
  VectorField drift;
  double dt = 0.1;

  std::size_t slow_dim() const { return bridge.dim() / 2; }
  void validate() const;
};

// psi^(i) = z^(i) - z^(i-1) - F_z(z^(i-1)) dt, paired as x^(i) = (z^(i-1), psi^(i)).
TrainingSet extract_closure_samples(const Matrix& z_series, const VectorField& drift, double dt);

struct SurrogateOptions {
  std::size_t n_outer = 1000;
  std::size_t n_inner = 100;
  bool reset_inner = false;
  NoiseMode noise_mode = NoiseMode::Unaware;
};

struct SurrogateResult {
  Matrix z;    // d_s x n_outer: z_1 .. z_n
  Matrix psi;  // d_s x n_outer: sampled closure terms
};

// z_k = z_{k-1} + F_z(z_{k-1}) dt + psi_k with psi_k drawn conditionally on z_{k-1}.
SurrogateResult surrogate_simulate(const ClosureModel& cm, const Vector& z0,
                                   const SurrogateOptions& options, Rng& rng);

struct TrajectoryOptions {
  std::size_t n_steps = 2000;
  std::size_t n_inner = 20;
  // Restart the inner chain from a random training pair every step; carrying it
  // lets the chain park on isolated pairs.
  bool reset_inner = true;
};

// Sequential generation from a bridge over consecutive pairs (y_{k-1}, y_k).
// Returns d_y x n_steps columns y_0, y_1, y_2, ...
Matrix trajectory_generate(const BridgeModel& model, const Vector& y0, const Vector& y1,
                           const TrajectoryOptions& options, Rng& rng);

}  // namespace sbridge
