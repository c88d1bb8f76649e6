#include "sbridge/bridge.hpp"

#include <algorithm>
#include <cmath>

namespace sbridge {

namespace {

constexpr double kExpUnderflow = -746.0;
constexpr double kMinRowSum = 1e-300;

}  // namespace

double ProbabilityVector::entropy() const {
  double h = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i)
    if (weights[i] > 0.0) h -= weights[i] * std::log(weights[i]);
  return h;
}

BridgeModel::BridgeModel(TrainingSet training, KernelSpec spec, Vector weights, double residual,
                         int iterations)
    : training_(std::move(training)),
      spec_(std::move(spec)),
      kernel_(training_, spec_),
      v_(std::move(weights)),
      residual_(residual),
      iterations_(iterations) {
  if (static_cast<std::size_t>(v_.size()) != training_.count())
    throw InvalidArgument("Sinkhorn weight vector has the wrong length");
  if (!(v_.array() > 0.0).all() || !v_.allFinite())
    throw InvalidArgument("Sinkhorn weights must be positive and finite");
  log_v_ = v_.array().log();
  const auto d = static_cast<Eigen::Index>(training_.dim());
  if (spec_.metric == Metric::EmpiricalCovariance) {
    metric_sqrt_ = Eigen::SelfAdjointEigenSolver<Matrix>(spec_.metric_matrix).operatorSqrt();
  } else {
    metric_sqrt_ = Matrix::Identity(d, d);
  }
}

void BridgeModel::check_query(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != dim())
    throw InvalidArgument("query has dimension " + std::to_string(x.size()) + ", model expects " +
                          std::to_string(dim()));
  if (!x.allFinite()) throw InvalidArgument("query point is not finite");
}

void BridgeModel::check_index(std::size_t j) const {
  if (j >= count())
    throw IndexError("sample index " + std::to_string(j) + " out of range [0, " +
                     std::to_string(count()) + ")");
}

ProbabilityVector BridgeModel::transition_probabilities(std::size_t j) const {
  check_index(j);
  Vector col = kernel_.column(j);
  ProbabilityVector p;
  p.weights = v_[static_cast<Eigen::Index>(j)] * (v_.array() * col.array()).matrix();
  return p;
}

double BridgeModel::diffusion_distance(std::size_t i, std::size_t j) const {
  check_index(i);
  check_index(j);
  if (i == j) return 0.0;
  return (transition_probabilities(i).weights - transition_probabilities(j).weights).squaredNorm();
}

ProbabilityVector BridgeModel::probability_vector(const Vector& x) const {
  check_query(x);
  Vector a;
  kernel_.log_vector(x, a);
  a += log_v_;
  const double mx = a.maxCoeff();
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double e = a[i] - mx;
    a[i] = e > kExpUnderflow ? std::exp(e) : 0.0;
    s += a[i];
  }
  // s >= 1 because the largest term is exactly exp(0).
  ProbabilityVector p;
  p.weights = a / s;
  return p;
}

BridgeQuery BridgeModel::query(const Vector& x) const {
  BridgeQuery q;
  q.p = probability_vector(x);
  q.mean = training_.data() * q.p.weights;
  return q;
}

Vector BridgeModel::conditional_mean(const Vector& x) const { return query(x).mean; }

Matrix BridgeModel::conditional_covariance(const BridgeQuery& q) const {
  const auto d = static_cast<Eigen::Index>(dim());
  Matrix centred = training_.data().colwise() - q.mean;
  centred.array().rowwise() *= q.p.weights.transpose().array().sqrt();
  Matrix c = Matrix::Zero(d, d);
  c.selfadjointView<Eigen::Lower>().rankUpdate(centred, 1.0 / epsilon());
  c.triangularView<Eigen::StrictlyUpper>() = c.transpose();
  return c;
}

Matrix BridgeModel::conditional_covariance(const Vector& x) const {
  return conditional_covariance(query(x));
}

double BridgeModel::log_density_proxy(const Vector& x) const {
  if (spec_.mode != BandwidthMode::Fixed || spec_.metric != Metric::Identity)
    throw InvalidArgument("log_density_proxy requires Fixed mode with K = I");
  check_query(x);
  Vector a;
  kernel_.log_vector(x, a);
  a += log_v_;
  const double mx = a.maxCoeff();
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += std::exp(a[i] - mx);
  return 2.0 * (mx + std::log(s));
}

Vector BridgeModel::score(const Vector& x) const { return (conditional_mean(x) - x) / epsilon(); }

Matrix BridgeModel::kernel_sqrt(const Vector& x) const {
  return std::sqrt(kernel_.rho_at(x)) * metric_sqrt_;
}

BridgeModel sinkhorn_fit(const TrainingSet& ts, const KernelSpec& spec,
                         const SinkhornOptions& options) {
  if (!(options.tol > 0.0)) throw InvalidArgument("Sinkhorn tolerance must be positive");
  if (options.max_iter < 1) throw InvalidArgument("Sinkhorn max_iter must be >= 1");
  spec.validate(ts);
  const KernelEvaluator kernel(ts, spec);
  const auto m = static_cast<Eigen::Index>(ts.count());
  const bool dense = ts.count() <= options.dense_limit;
  Matrix t;
  if (dense) {
    t = kernel.dense();
    if (!t.allFinite()) throw InvalidArgument("kernel matrix has non-finite entries");
  }

  Vector v = Vector::Ones(m);
  double residual = 0.0;
  for (int it = 0; it <= options.max_iter; ++it) {
    const Vector tv = dense ? Vector(t * v) : kernel.apply(v);
    if (it == 0 && tv.minCoeff() < kMinRowSum)
      throw DegenerateDataError("kernel matrix has a vanishing row sum; increase epsilon");
    residual = (v.array() * tv.array() - 1.0).abs().maxCoeff();
    if (!std::isfinite(residual)) break;
    if (residual <= options.tol) return BridgeModel(ts, spec, std::move(v), residual, it);
    if (it == options.max_iter) break;
    v = (v.array() / tv.array()).sqrt();
  }
  throw ConvergenceError("Sinkhorn did not converge: residual " + std::to_string(residual) +
                             " after " + std::to_string(options.max_iter) + " iterations",
                         residual, options.max_iter);
}

}  // namespace sbridge
