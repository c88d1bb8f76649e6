#pragma once

#include "sbridge/common.hpp"
#include "sbridge/training_set.hpp"

#include <cmath>
#include <memory>
#include <optional>
#include <span>

namespace sbridge {

enum class BandwidthMode { Fixed, Variable };

// Shape matrix A in K(x) = rho(x) * A.
enum class Metric { Identity, EmpiricalCovariance };

// Isotropic Gaussian kernel density estimate over a fixed set of points.
class DensityEstimate {
 public:
  DensityEstimate(Matrix reference_points, double bandwidth);

  double bandwidth() const { return bandwidth_; }
  const Matrix& reference_points() const { return points_; }
  // 1 / (M (2 pi h^2)^(d/2)).
  double normalizer() const { return std::exp(log_normalizer_); }

  // Finite for every finite x, even where the density underflows.
  double log_value(const Vector& x) const;
  // Strictly positive; floors at the smallest normal double in the far tail.
  double operator()(const Vector& x) const;

 private:
  Matrix points_;
  double bandwidth_;
  double log_normalizer_;
};

// Silverman rule of thumb on the RMS per-coordinate standard deviation.
DensityEstimate fit_kde(const TrainingSet& ts);

struct BandwidthProfile {
  Vector rho;
  double z_norm = 1.0;
};

// rho_i = (pi_i / Z)^beta with Z the mean of pi over the samples.
BandwidthProfile bandwidth_profile(const TrainingSet& ts, const DensityEstimate& kde, double beta);
BandwidthProfile bandwidth_profile(std::span<const double> density_values, double beta);

// (exp(log_density) / Z)^beta evaluated in log space. Shared by the
// training-point profile and out-of-sample queries so both agree bitwise.
double scaled_bandwidth(double log_density, double log_z_norm, double beta);

Matrix empirical_covariance(const TrainingSet& ts);

struct KernelSpec {
  double epsilon = 1.0;
  BandwidthMode mode = BandwidthMode::Fixed;
  double beta = 0.0;
  Vector rho;           // per-sample scale; all ones in Fixed mode
  double z_norm = 1.0;  // density normaliser; 1 in Fixed mode
  std::shared_ptr<const DensityEstimate> density;  // Variable mode only
  Metric metric = Metric::Identity;
  Matrix metric_matrix;  // A, only read for Metric::EmpiricalCovariance

  static KernelSpec fixed(const TrainingSet& ts, double epsilon, Metric metric = Metric::Identity);
  static KernelSpec variable(const TrainingSet& ts, double epsilon, double beta,
                             Metric metric = Metric::Identity);

  void validate(const TrainingSet& ts) const;

  // rho(x); 1 in Fixed mode.
  double rho_at(const Vector& x) const;
};

// Evaluates t_ij and t_i(x) for a fixed training set and kernel spec.
// Data are stored pre-whitened so the metric costs one d x d product per query.
class KernelEvaluator {
 public:
  KernelEvaluator(const TrainingSet& ts, const KernelSpec& spec);

  std::size_t size() const { return static_cast<std::size_t>(points_.cols()); }
  std::size_t dim() const { return static_cast<std::size_t>(points_.rows()); }

  double log_entry(std::size_t i, std::size_t j) const;
  // out_i = log t_i(x).
  void log_vector(const Vector& x, Vector& out) const;
  double rho_at(const Vector& x) const;

  // Column j of T (equivalently row j).
  Vector column(std::size_t j) const;
  Matrix dense() const;
  // T v without materialising T; rows are independent so the result does
  // not depend on the thread schedule.
  Vector apply(const Vector& v) const;

 private:
  Matrix points_;  // whitened samples, d x M
  std::optional<Matrix> whitener_;
  Vector rho_;
  double two_eps_;
  BandwidthMode mode_;
  double beta_;
  double log_z_;
  std::shared_ptr<const DensityEstimate> density_;
};

Matrix kernel_matrix(const TrainingSet& ts, const KernelSpec& spec);
Vector kernel_vector(const TrainingSet& ts, const KernelSpec& spec, const Vector& x);

}  // namespace sbridge
