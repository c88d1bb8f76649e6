#pragma once

#include "sbridge/sampler.hpp"

#include <string>

namespace sbridge::detail {

// Runs cfg.n_steps applications of `step(x, rng) -> StepResult`, applying
// burn-in and thinning. `project(x)` selects what is stored per kept sample.
template <typename Step, typename Project>
ChainOutput drive_chain(const BridgeModel& model, const SamplerConfig& cfg, Eigen::Index out_dim,
                        Step&& step, Project&& project) {
  cfg.validate(model.dim());
  Rng rng(cfg.seed);
  const auto kept = static_cast<Eigen::Index>(cfg.kept());

  ChainOutput out;
  out.seed = cfg.seed;
  out.samples.resize(out_dim, kept);
  if (cfg.record_half_steps) out.half_steps.resize(static_cast<Eigen::Index>(model.dim()), kept);
  out.diagnostics.reserve(cfg.n_steps);

  const BoundingBox box = BoundingBox::of(model.training());
  Vector x = initial_state(model, cfg.init, rng);
  Eigen::Index col = 0;
  for (std::size_t n = 1; n <= cfg.n_steps; ++n) {
    StepResult r = step(x, rng);
    if (!r.x.allFinite())
      throw InternalError("non-finite sampler state at step " + std::to_string(n));
    x = std::move(r.x);
    out.diagnostics.push_back({r.p.max_weight(), r.p.entropy(), box.contains(x)});
    if (n > cfg.burn_in && (n - cfg.burn_in) % cfg.thin == 0 && col < kept) {
      out.samples.col(col) = project(x);
      if (out.half_steps.cols() > 0 && r.half.size() > 0) out.half_steps.col(col) = r.half;
      ++col;
    }
  }
  return out;
}

}  // namespace sbridge::detail
