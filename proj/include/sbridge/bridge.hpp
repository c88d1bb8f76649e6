#pragma once

#include "sbridge/common.hpp"
#include "sbridge/kernel.hpp"
#include "sbridge/training_set.hpp"

#include <filesystem>

namespace sbridge {

// Nonnegative weights summing to one over the training samples.
struct ProbabilityVector {
  Vector weights;

  double max_weight() const { return weights.maxCoeff(); }
  // Shannon entropy in nats.
  double entropy() const;
};

struct SinkhornOptions {
  double tol = 1e-10;
  int max_iter = 10'000;
  // T is materialised only for M <= dense_limit; larger problems stream
  // their matrix-vector products from the data.
  std::size_t dense_limit = 8192;
};

// Everything a query needs at one point: p(x), m(x; eps) and optionally C(x).
struct BridgeQuery {
  ProbabilityVector p;
  Vector mean;
};

// Fitted symmetric Schrodinger bridge P = D(v) T D(v) over the training set.
class BridgeModel {
 public:
  BridgeModel(TrainingSet training, KernelSpec spec, Vector weights, double residual,
              int iterations);

  const TrainingSet& training() const { return training_; }
  const KernelSpec& spec() const { return spec_; }
  const KernelEvaluator& kernel() const { return kernel_; }
  const Vector& weights() const { return v_; }
  double epsilon() const { return spec_.epsilon; }
  double residual() const { return residual_; }
  int iterations_used() const { return iterations_; }
  std::size_t dim() const { return training_.dim(); }
  std::size_t count() const { return training_.count(); }

  // p_j = P e_j.
  ProbabilityVector transition_probabilities(std::size_t j) const;
  // ||p_i - p_j||^2.
  double diffusion_distance(std::size_t i, std::size_t j) const;

  ProbabilityVector probability_vector(const Vector& x) const;
  Vector conditional_mean(const Vector& x) const;
  BridgeQuery query(const Vector& x) const;
  // eps^{-1} (X - m 1^T) D(p) (X - m 1^T)^T given a query at x.
  Matrix conditional_covariance(const BridgeQuery& q) const;
  Matrix conditional_covariance(const Vector& x) const;
  // 2 log(v^T t(x)); only defined for Fixed mode with K = I.
  double log_density_proxy(const Vector& x) const;
  // (m(x; eps) - x) / eps.
  Vector score(const Vector& x) const;

  // sqrt(K(x)) = sqrt(rho(x)) * sqrt(A).
  Matrix kernel_sqrt(const Vector& x) const;
  double rho_at(const Vector& x) const { return kernel_.rho_at(x); }

  // Binary "SBMD" model plus a JSON sidecar at `path` + ".json".
  void save(const std::filesystem::path& path, const SinkhornOptions& options = {}) const;
  static BridgeModel load(const std::filesystem::path& path);

 private:
  void check_query(const Vector& x) const;
  void check_index(std::size_t j) const;

  TrainingSet training_;
  KernelSpec spec_;
  KernelEvaluator kernel_;
  Vector v_;
  Vector log_v_;
  Matrix metric_sqrt_;
  double residual_;
  int iterations_;
};

// Solves v_i (T v)_i = 1 with the damped symmetric iteration v <- sqrt(v / (T v)).
BridgeModel sinkhorn_fit(const TrainingSet& ts, const KernelSpec& spec,
                         const SinkhornOptions& options = {});

}  // namespace sbridge
