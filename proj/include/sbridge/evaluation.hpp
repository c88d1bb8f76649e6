#pragma once

#include "sbridge/common.hpp"

#include <cstddef>
#include <vector>

namespace sbridge {

enum class OtCost { Euclidean };

struct OtConfig {
  // Entropy coefficient 1/lambda; the default corresponds to lambda = 100.
  double penalty = 0.01;
  int max_iter = 50'000;
  // Sup-norm of the marginal mismatch of the plan.
  double tol = 1e-9;
  OtCost cost = OtCost::Euclidean;
  bool keep_plan = false;

  static OtConfig from_lambda(double lambda);
  void validate() const;
};

struct OtResult {
  double distance = 0.0;        // sum P C - penalty * h(P)
  double transport_cost = 0.0;  // sum P C
  double entropy = 0.0;         // h(P) = -sum P log P
  double plan_residual = 0.0;
  int iterations = 0;  // Sinkhorn sweeps plus Newton steps
  Matrix plan;  // Mg x Mr, only with keep_plan
};

// Uniform-weight entropic OT between the columns of gen (d x Mg) and ref (d x Mr).
OtResult entropic_ot(const Matrix& gen, const Matrix& ref, const OtConfig& cfg = {});

OtResult marginal_ot_1d(const Vector& gen, const Vector& ref, const OtConfig& cfg = {});

struct Histogram {
  double lower = 0.0;
  double upper = 1.0;
  std::vector<std::size_t> counts;

  double bin_width() const { return (upper - lower) / static_cast<double>(counts.size()); }
  double center(std::size_t bin) const { return lower + (static_cast<double>(bin) + 0.5) * bin_width(); }
  std::size_t total() const;
};

// Bins [lower, upper) with the last bin closed; samples outside are dropped.
Histogram histogram(const Vector& samples, std::size_t n_bins, double lower, double upper);
// Range taken from the data (widened by 0.5 on both sides if constant).
Histogram histogram(const Vector& samples, std::size_t n_bins);

// Right-continuous step function F(x) = #{samples <= x} / N.
class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(const Vector& samples);

  double operator()(double x) const;
  const std::vector<double>& values() const { return sorted_; }

 private:
  std::vector<double> sorted_;
};

EmpiricalCdf empirical_cdf(const Vector& samples);

double ks_statistic(const Vector& a, const Vector& b);

// Local maxima of the counts after a centered moving average of `window` bins.
// A plateau counts once. Returns bin indices.
// Maxima lower than min_relative_height times the tallest smoothed bin are dropped.
std::vector<std::size_t> find_modes(const Histogram& hist, std::size_t window = 3, double min_relative_height = 0.0);

// Sample autocorrelation of a scalar series at lags 0 .. max_lag.
std::vector<double> autocorrelation(const Vector& series, std::size_t max_lag);

}  // namespace sbridge
