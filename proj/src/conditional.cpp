#include "sbridge/conditional.hpp"

#include "chain_driver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sbridge {

namespace {

std::string describe(const Vector& x) {
  std::string s = "(";
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (k) s += ", ";
    s += std::to_string(x[k]);
  }
  return s + ")";
}

Vector checked_gradient(const PotentialSpec& potential, const Vector& x) {
  Vector g = potential.gradient(x);
  if (g.size() != x.size()) throw InvalidArgument("potential gradient has the wrong dimension");
  if (!g.allFinite()) throw InvalidArgument("non-finite potential gradient at " + describe(x));
  return g;
}

void require_identity_kernel(const BridgeModel& model, const char* who) {
  if (model.spec().mode != BandwidthMode::Fixed || model.spec().metric != Metric::Identity)
    throw InvalidArgument(std::string(who) + " requires a Fixed-mode model with K = I");
}

Vector select(const Vector& x, const std::vector<std::size_t>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k)
    out[static_cast<Eigen::Index>(k)] = x[static_cast<Eigen::Index>(idx[k])];
  return out;
}

std::vector<std::size_t> range(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> out;
  for (std::size_t k = begin; k < end; ++k) out.push_back(k);
  return out;
}

}  // namespace

void PotentialSpec::validate(const Matrix& probes, double rel_tol) const {
  if (!value || !gradient) throw InvalidArgument("potential needs both a value and a gradient");
  for (Eigen::Index c = 0; c < probes.cols(); ++c) {
    Vector x = probes.col(c);
    const Vector g = checked_gradient(*this, x);
    Vector fd(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      const double h = 1e-6 * (1.0 + std::abs(x[k]));
      Vector xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      fd[k] = (value(xp) - value(xm)) / (xp[k] - xm[k]);
    }
    const double err = (fd - g).cwiseAbs().maxCoeff();
    if (err > rel_tol * (1.0 + g.cwiseAbs().maxCoeff()))
      throw InvalidArgument("potential gradient disagrees with finite differences at " +
                            describe(x));
  }
}

PotentialSpec PotentialSpec::zero(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  return {[](const Vector&) { return 0.0; }, [d](const Vector&) { return Vector(Vector::Zero(d)); }};
}

PotentialSpec PotentialSpec::quadratic(Vector center, double curvature) {
  return {[center, curvature](const Vector& x) { return 0.5 * curvature * (x - center).squaredNorm(); },
          [center, curvature](const Vector& x) { return Vector(curvature * (x - center)); }};
}

ConditionalSpec ConditionalSpec::clamp(std::size_t dim, std::vector<std::size_t> y_indices,
                                       Vector y_star, std::size_t n_inner, NoiseMode mode) {
  ConditionalSpec spec;
  std::sort(y_indices.begin(), y_indices.end());
  for (std::size_t k = 0; k < dim; ++k)
    if (!std::binary_search(y_indices.begin(), y_indices.end(), k)) spec.z_indices.push_back(k);
  spec.y_indices = std::move(y_indices);
  spec.y_star = std::move(y_star);
  spec.n_inner = n_inner;
  spec.noise_mode = mode;
  spec.validate(dim);
  return spec;
}

void ConditionalSpec::validate(std::size_t dim) const {
  if (n_inner < 1) throw InvalidArgument("n_inner must be >= 1");
  if (static_cast<std::size_t>(y_star.size()) != y_indices.size())
    throw InvalidArgument("y* has dimension " + std::to_string(y_star.size()) + ", expected " +
                          std::to_string(y_indices.size()));
  if (!y_star.allFinite()) throw InvalidArgument("y* is not finite");
  std::vector<int> seen(dim, 0);
  for (auto k : y_indices) {
    if (k >= dim) throw IndexError("clamped index out of range");
    ++seen[k];
  }
  for (auto k : z_indices) {
    if (k >= dim) throw IndexError("free index out of range");
    ++seen[k];
  }
  for (int s : seen)
    if (s != 1) throw InvalidArgument("y and z indices must partition the coordinates");
}

Vector clamp_block(const Vector& x, const std::vector<std::size_t>& y_indices, const Vector& y_star) {
  Vector out = x;
  for (std::size_t k = 0; k < y_indices.size(); ++k)
    out[static_cast<Eigen::Index>(y_indices[k])] = y_star[static_cast<Eigen::Index>(k)];
  return out;
}

StepResult conditional_step(const BridgeModel& model, const Vector& x,
                            const std::vector<std::size_t>& y_indices, const Vector& y_star,
                            NoiseMode mode, const Vector& xi) {
  const Vector clamped = clamp_block(x, y_indices, y_star);
  return mode == NoiseMode::Unaware ? step_unaware_split(model, clamped, xi)
                                    : step_aware_split(model, clamped, xi);
}

ChainOutput bayesian_chain(const BridgeModel& model, const PotentialSpec& potential,
                           const SamplerConfig& cfg) {
  require_identity_kernel(model, "bayesian_chain");
  const double eps = model.epsilon();
  const double noise = std::sqrt(2.0 * eps);
  auto step = [&](const Vector& x, Rng& rng) {
    const Vector xi = rng.normal_vector(model.dim());
    StepResult r;
    r.half = x - eps * checked_gradient(potential, x) + noise * xi;
    BridgeQuery q = model.query(r.half);
    r.x = std::move(q.mean);
    r.p = std::move(q.p);
    return r;
  };
  return detail::drive_chain(model, cfg, static_cast<Eigen::Index>(model.dim()), step,
                             [](const Vector& x) -> const Vector& { return x; });
}

Matrix regularized_minimize(const BridgeModel& model, const PotentialSpec& potential,
                            const Vector& x0, std::size_t n_iter) {
  if (static_cast<std::size_t>(x0.size()) != model.dim())
    throw InvalidArgument("x0 has the wrong dimension");
  Matrix path(x0.size(), static_cast<Eigen::Index>(n_iter + 1));
  path.col(0) = x0;
  Vector x = x0;
  for (std::size_t n = 1; n <= n_iter; ++n) {
    const Vector half = x - model.epsilon() * checked_gradient(potential, x);
    x = model.conditional_mean(half);
    path.col(static_cast<Eigen::Index>(n)) = x;
  }
  return path;
}

ChainOutput conditional_chain(const BridgeModel& model, const ConditionalSpec& spec,
                              const SamplerConfig& cfg) {
  spec.validate(model.dim());
  const auto d = model.dim();
  auto step = [&](const Vector& x, Rng& rng) {
    Vector state = spec.reset_inner ? initial_state(model, cfg.init, rng) : x;
    StepResult r;
    for (std::size_t n = 0; n < spec.n_inner; ++n) {
      r = conditional_step(model, state, spec.y_indices, spec.y_star, spec.noise_mode,
                           rng.normal_vector(d));
      state = r.x;
    }
    return r;
  };
  SamplerConfig local = cfg;
  local.record_half_steps = false;
  return detail::drive_chain(model, local, static_cast<Eigen::Index>(spec.z_indices.size()), step,
                             [&](const Vector& x) { return select(x, spec.z_indices); });
}

void ClosureModel::validate() const {
  if (bridge.dim() % 2 != 0 || bridge.dim() == 0)
    throw InvalidArgument("closure bridge must live on R^{2 d_s}");
  if (!drift) throw InvalidArgument("closure model needs a drift");
  if (!(dt > 0.0)) throw InvalidArgument("closure sampling interval must be positive");
}

TrainingSet extract_closure_samples(const Matrix& z_series, const VectorField& drift, double dt) {
  if (z_series.cols() < 2) throw InvalidArgument("closure extraction needs at least two states");
  if (!(dt > 0.0)) throw InvalidArgument("closure sampling interval must be positive");
  const auto ds = z_series.rows();
  const auto m = z_series.cols() - 1;
  Matrix pairs(2 * ds, m);
  for (Eigen::Index i = 1; i <= m; ++i) {
    const Vector prev = z_series.col(i - 1);
    const Vector f = drift(prev);
    if (f.size() != ds || !f.allFinite())
      throw InvalidArgument("drift is non-finite or has the wrong dimension");
    pairs.col(i - 1).head(ds) = prev;
    pairs.col(i - 1).tail(ds) = z_series.col(i) - prev - f * dt;
  }
  return TrainingSet(std::move(pairs));
}

SurrogateResult surrogate_simulate(const ClosureModel& cm, const Vector& z0,
                                   const SurrogateOptions& options, Rng& rng) {
  cm.validate();
  const std::size_t ds = cm.slow_dim();
  if (static_cast<std::size_t>(z0.size()) != ds) throw InvalidArgument("z0 has the wrong dimension");
  if (options.n_inner < 1) throw InvalidArgument("n_inner must be >= 1");
  const auto d = cm.bridge.dim();
  const auto head = range(0, ds);
  const auto n_out = static_cast<Eigen::Index>(options.n_outer);
  const auto ids = static_cast<Eigen::Index>(ds);

  SurrogateResult out;
  out.z.resize(ids, n_out);
  out.psi.resize(ids, n_out);
  Vector z = z0;
  Vector state = cm.bridge.training().sample(rng.index(cm.bridge.count()));
  for (Eigen::Index k = 0; k < n_out; ++k) {
    if (options.reset_inner && k > 0) state = cm.bridge.training().sample(rng.index(cm.bridge.count()));
    for (std::size_t n = 0; n < options.n_inner; ++n)
      state = conditional_step(cm.bridge, state, head, z, options.noise_mode, rng.normal_vector(d)).x;
    const Vector psi = state.tail(ids);
    const Vector f = cm.drift(z);
    if (f.size() != ids || !f.allFinite())
      throw InvalidArgument("non-finite slow drift at z = " + describe(z));
    z = z + f * cm.dt + psi;
    out.z.col(k) = z;
    out.psi.col(k) = psi;
  }
  return out;
}

Matrix trajectory_generate(const BridgeModel& model, const Vector& y0, const Vector& y1,
                           const TrajectoryOptions& options, Rng& rng) {
  if (model.dim() % 2 != 0) throw InvalidArgument("trajectory model must live on R^{2 d_y}");
  const auto dy = static_cast<Eigen::Index>(model.dim() / 2);
  if (y0.size() != dy || y1.size() != dy)
    throw InvalidArgument("initial states must have dimension " + std::to_string(dy));
  if (options.n_steps < 2) throw InvalidArgument("trajectory needs at least two steps");
  if (options.n_inner < 1) throw InvalidArgument("n_inner must be >= 1");
  const auto head = range(0, static_cast<std::size_t>(dy));

  Matrix out(dy, static_cast<Eigen::Index>(options.n_steps));
  out.col(0) = y0;
  out.col(1) = y1;
  Vector state(2 * dy);
  state << y0, y1;
  for (Eigen::Index k = 2; k < out.cols(); ++k) {
    const Vector current = out.col(k - 1);
    if (options.reset_inner) state = model.training().sample(rng.index(model.count()));
    for (std::size_t n = 0; n < options.n_inner; ++n)
      state = conditional_step(model, state, head, current, NoiseMode::Unaware,
                               rng.normal_vector(model.dim()))
                  .x;
    out.col(k) = state.tail(dy);
  }
  return out;
}

}  // namespace sbridge
