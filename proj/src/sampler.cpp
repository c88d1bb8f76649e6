#include "sbridge/sampler.hpp"

#include "chain_driver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sbridge {

Scheme parse_scheme(std::string_view name) {
  if (name == "unaware-direct") return Scheme::UnawareDirect;
  if (name == "aware-direct") return Scheme::AwareDirect;
  if (name == "unaware-split") return Scheme::UnawareSplit;
  if (name == "aware-split") return Scheme::AwareSplit;
  throw InvalidArgument("unknown scheme '" + std::string(name) +
                        "' (expected unaware-direct, aware-direct, unaware-split, aware-split)");
}

std::string_view scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::UnawareDirect: return "unaware-direct";
    case Scheme::AwareDirect: return "aware-direct";
    case Scheme::UnawareSplit: return "unaware-split";
    case Scheme::AwareSplit: return "aware-split";
  }
  return "unknown";
}

SamplerConfig SamplerConfig::with_defaults(Scheme scheme, std::size_t n_steps, std::uint64_t seed) {
  SamplerConfig cfg;
  cfg.scheme = scheme;
  cfg.n_steps = n_steps;
  cfg.burn_in = n_steps * 3 / 5;
  cfg.thin = 20;
  cfg.seed = seed;
  return cfg;
}

void SamplerConfig::validate(std::size_t dim) const {
  if (thin < 1) throw InvalidArgument("thin must be >= 1");
  if (burn_in + thin > n_steps)
    throw InvalidArgument("burn_in plus one kept sample exceeds n_steps");
  if (delta_tau && !(*delta_tau > 0.0)) throw InvalidArgument("delta_tau must be positive");
  if (init && static_cast<std::size_t>(init->size()) != dim)
    throw InvalidArgument("initial state has the wrong dimension");
  if (init && !init->allFinite()) throw InvalidArgument("initial state is not finite");
}

Matrix psd_sqrt(const Matrix& mat) {
  if (mat.rows() != mat.cols()) throw InvalidArgument("psd_sqrt: matrix is not square");
  const double scale = std::max(1.0, mat.cwiseAbs().maxCoeff());
  if ((mat - mat.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw InvalidArgument("psd_sqrt: matrix is not symmetric");
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(mat);
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Matrix& q = eig.eigenvectors();
  Matrix s = q * root.asDiagonal() * q.transpose();
  return 0.5 * (s + s.transpose());
}

bool BoundingBox::contains(const Vector& x) const {
  if (x.size() != lower.size()) return false;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double slack = 1e-12 * (1.0 + std::max(std::abs(lower[k]), std::abs(upper[k])));
    if (!(x[k] >= lower[k] - slack && x[k] <= upper[k] + slack)) return false;
  }
  return true;
}

namespace {

void check_xi(const BridgeModel& model, const Vector& xi) {
  if (static_cast<std::size_t>(xi.size()) != model.dim())
    throw InvalidArgument("noise draw has the wrong dimension");
}

}  // namespace

StepResult step_unaware_direct(const BridgeModel& model, const Vector& x, double delta_tau,
                               const Vector& xi) {
  check_xi(model, xi);
  BridgeQuery q = model.query(x);
  StepResult r;
  r.x = x + (delta_tau / model.epsilon()) * (q.mean - x) +
        std::sqrt(2.0 * delta_tau) * (model.kernel_sqrt(x) * xi);
  r.p = std::move(q.p);
  return r;
}

StepResult step_unaware_direct(const BridgeModel& model, const Vector& x, double delta_tau, Rng& rng) {
  return step_unaware_direct(model, x, delta_tau, rng.normal_vector(model.dim()));
}

StepResult step_aware_direct(const BridgeModel& model, const Vector& x, double delta_tau,
                             const Vector& xi) {
  check_xi(model, xi);
  BridgeQuery q = model.query(x);
  const Matrix root = psd_sqrt(model.conditional_covariance(q));
  StepResult r;
  r.x = x + (delta_tau / model.epsilon()) * (q.mean - x) + std::sqrt(delta_tau) * (root * xi);
  r.p = std::move(q.p);
  return r;
}

StepResult step_aware_direct(const BridgeModel& model, const Vector& x, double delta_tau, Rng& rng) {
  return step_aware_direct(model, x, delta_tau, rng.normal_vector(model.dim()));
}

StepResult step_unaware_split(const BridgeModel& model, const Vector& x, const Vector& xi) {
  check_xi(model, xi);
  StepResult r;
  r.half = x + std::sqrt(2.0 * model.epsilon()) * (model.kernel_sqrt(x) * xi);
  BridgeQuery q = model.query(r.half);
  r.x = std::move(q.mean);
  r.p = std::move(q.p);
  return r;
}

StepResult step_unaware_split(const BridgeModel& model, const Vector& x, Rng& rng) {
  return step_unaware_split(model, x, rng.normal_vector(model.dim()));
}

StepResult step_aware_split(const BridgeModel& model, const Vector& x, const Vector& xi) {
  check_xi(model, xi);
  const Matrix root = psd_sqrt(model.conditional_covariance(x));
  StepResult r;
  r.half = x + std::sqrt(model.epsilon()) * (root * xi);
  BridgeQuery q = model.query(r.half);
  r.x = std::move(q.mean);
  r.p = std::move(q.p);
  return r;
}

StepResult step_aware_split(const BridgeModel& model, const Vector& x, Rng& rng) {
  return step_aware_split(model, x, rng.normal_vector(model.dim()));
}

Vector initial_state(const BridgeModel& model, const std::optional<Vector>& init, Rng& rng) {
  if (init) return *init;
  return model.training().sample(rng.index(model.count()));
}

ChainOutput run_chain(const BridgeModel& model, const SamplerConfig& cfg) {
  const double dtau = cfg.delta_tau.value_or(model.epsilon());
  SamplerConfig local = cfg;
  if (!is_split(cfg.scheme)) local.record_half_steps = false;
  auto step = [&](const Vector& x, Rng& rng) -> StepResult {
    switch (cfg.scheme) {
      case Scheme::UnawareDirect: return step_unaware_direct(model, x, dtau, rng);
      case Scheme::AwareDirect: return step_aware_direct(model, x, dtau, rng);
      case Scheme::UnawareSplit: return step_unaware_split(model, x, rng);
      case Scheme::AwareSplit: break;
    }
    return step_aware_split(model, x, rng);
  };
  return detail::drive_chain(model, local, static_cast<Eigen::Index>(model.dim()), step,
                             [](const Vector& x) -> const Vector& { return x; });
}

}  // namespace sbridge
