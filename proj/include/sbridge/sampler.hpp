#pragma once

#include "sbridge/bridge.hpp"
#include "sbridge/common.hpp"
#include "sbridge/random.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace sbridge {

// Unaware: noise sqrt(2 K(x)). Aware: noise sqrt(C(x)).
// Direct: drift step then noise. Split: noise then projection through m.
enum class Scheme { UnawareDirect, AwareDirect, UnawareSplit, AwareSplit };

Scheme parse_scheme(std::string_view name);
std::string_view scheme_name(Scheme scheme);
inline bool is_split(Scheme s) { return s == Scheme::UnawareSplit || s == Scheme::AwareSplit; }

struct SamplerConfig {
  Scheme scheme = Scheme::AwareSplit;
  std::optional<double> delta_tau;  // direct schemes only; defaults to epsilon
  std::size_t n_steps = 10'000;
  std::size_t burn_in = 6'000;
  std::size_t thin = 20;
  std::uint64_t seed = 0;
  std::optional<Vector> init;  // random training point when unset
  bool record_half_steps = false;

  // burn_in = 60% of n_steps, thin = 20.
  static SamplerConfig with_defaults(Scheme scheme, std::size_t n_steps, std::uint64_t seed);

  std::size_t kept() const { return (n_steps - burn_in) / thin; }
  void validate(std::size_t dim) const;
};

struct StepDiagnostics {
  double max_weight = 0.0;
  double entropy = 0.0;
  bool in_box = false;
};

struct ChainOutput {
  Matrix samples;     // d x N_kept
  Matrix half_steps;  // noisy pre-projection states of kept steps (split schemes, on request)
  std::vector<StepDiagnostics> diagnostics;  // one record per step
  std::uint64_t seed = 0;
};

struct StepResult {
  Vector x;
  ProbabilityVector p;  // weights of the last conditional-mean evaluation
  Vector half;          // X_{n+1/2} for split schemes
};

// Each step comes in two forms: with an explicit standard-normal draw `xi`
// (the injected-noise form used by tests and the conditional samplers) and
// drawing `xi` from an Rng.
StepResult step_unaware_direct(const BridgeModel& model, const Vector& x, double delta_tau,
                               const Vector& xi);
StepResult step_unaware_direct(const BridgeModel& model, const Vector& x, double delta_tau, Rng& rng);
StepResult step_aware_direct(const BridgeModel& model, const Vector& x, double delta_tau,
                             const Vector& xi);
StepResult step_aware_direct(const BridgeModel& model, const Vector& x, double delta_tau, Rng& rng);
StepResult step_unaware_split(const BridgeModel& model, const Vector& x, const Vector& xi);
StepResult step_unaware_split(const BridgeModel& model, const Vector& x, Rng& rng);
StepResult step_aware_split(const BridgeModel& model, const Vector& x, const Vector& xi);
StepResult step_aware_split(const BridgeModel& model, const Vector& x, Rng& rng);

// Symmetric square root with negative eigenvalues clamped to zero.
Matrix psd_sqrt(const Matrix& mat);

// Axis-aligned box of the training samples; membership allows rounding slack.
struct BoundingBox {
  Vector lower;
  Vector upper;

  static BoundingBox of(const TrainingSet& ts) { return {ts.lower(), ts.upper()}; }
  bool contains(const Vector& x) const;
};

// Starting state: cfg.init, or a training sample chosen by `rng`.
Vector initial_state(const BridgeModel& model, const std::optional<Vector>& init, Rng& rng);

ChainOutput run_chain(const BridgeModel& model, const SamplerConfig& cfg);

}  // namespace sbridge
