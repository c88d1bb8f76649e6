#include "sbridge/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace sbridge {

namespace {

// exp() of anything below this is exactly 0 in double precision.
constexpr double kExpUnderflow = -746.0;
// Caps the bandwidth exponent so rho stays finite far outside the data.
constexpr double kMaxLogRho = 700.0;

double squared_distance(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return s;
}

double log_sum_exp(const Vector& a) {
  const double mx = a.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += std::exp(a[i] - mx);
  return mx + std::log(s);
}

}  // namespace

DensityEstimate::DensityEstimate(Matrix reference_points, double bandwidth)
    : points_(std::move(reference_points)), bandwidth_(bandwidth) {
  if (points_.cols() < 1) throw InvalidArgument("density estimate needs at least one point");
  if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_))
    throw InvalidArgument("density estimate bandwidth must be positive");
  const double d = static_cast<double>(points_.rows());
  const double m = static_cast<double>(points_.cols());
  log_normalizer_ =
      -std::log(m) - 0.5 * d * std::log(2.0 * std::numbers::pi * bandwidth_ * bandwidth_);
}

double DensityEstimate::log_value(const Vector& x) const {
  const std::size_t d = static_cast<std::size_t>(points_.rows());
  const double inv = 1.0 / (2.0 * bandwidth_ * bandwidth_);
  Vector expo(points_.cols());
  for (Eigen::Index i = 0; i < points_.cols(); ++i)
    expo[i] = -squared_distance(points_.col(i).data(), x.data(), d) * inv;
  return log_normalizer_ + log_sum_exp(expo);
}

double DensityEstimate::operator()(const Vector& x) const {
  return std::max(std::exp(log_value(x)), std::numeric_limits<double>::min());
}

DensityEstimate fit_kde(const TrainingSet& ts) {
  const auto m = ts.count();
  if (m < 2) throw InvalidArgument("fit_kde needs at least two samples");
  const Matrix& x = ts.data();
  const Vector mean = x.rowwise().mean();
  const double var_sum = (x.colwise() - mean).squaredNorm() / static_cast<double>(m - 1);
  const double sigma = std::sqrt(var_sum / static_cast<double>(ts.dim()));
  if (!(sigma > 0.0)) throw DegenerateDataError("fit_kde: all samples are identical (zero spread)");
  const double d = static_cast<double>(ts.dim());
  const double h = sigma * std::pow(4.0 / ((d + 2.0) * static_cast<double>(m)), 1.0 / (d + 4.0));
  return DensityEstimate(x, h);
}

double scaled_bandwidth(double log_density, double log_z_norm, double beta) {
  const double e = std::min(beta * (log_density - log_z_norm), kMaxLogRho);
  return std::exp(e);
}

namespace {

BandwidthProfile profile_from_logs(const Vector& log_pi, double beta) {
  if (beta > 0.0) throw InvalidArgument("bandwidth exponent beta must be <= 0");
  double z = 0.0;
  for (Eigen::Index i = 0; i < log_pi.size(); ++i) z += std::exp(log_pi[i]);
  z /= static_cast<double>(log_pi.size());
  const double log_z = std::log(z);
  BandwidthProfile out;
  out.z_norm = z;
  out.rho.resize(log_pi.size());
  for (Eigen::Index i = 0; i < log_pi.size(); ++i)
    out.rho[i] = scaled_bandwidth(log_pi[i], log_z, beta);
  return out;
}

}  // namespace

BandwidthProfile bandwidth_profile(const TrainingSet& ts, const DensityEstimate& kde, double beta) {
  Vector log_pi(static_cast<Eigen::Index>(ts.count()));
  for (std::size_t i = 0; i < ts.count(); ++i)
    log_pi[static_cast<Eigen::Index>(i)] = kde.log_value(ts.sample(i));
  return profile_from_logs(log_pi, beta);
}

BandwidthProfile bandwidth_profile(std::span<const double> density_values, double beta) {
  if (density_values.empty()) throw InvalidArgument("bandwidth_profile: no density values");
  Vector log_pi(static_cast<Eigen::Index>(density_values.size()));
  for (std::size_t i = 0; i < density_values.size(); ++i) {
    if (!(density_values[i] > 0.0)) throw InvalidArgument("density values must be positive");
    log_pi[static_cast<Eigen::Index>(i)] = std::log(density_values[i]);
  }
  return profile_from_logs(log_pi, beta);
}

Matrix empirical_covariance(const TrainingSet& ts) {
  if (ts.count() < 2) throw InvalidArgument("empirical covariance needs at least two samples");
  const Matrix centred = ts.data().colwise() - ts.data().rowwise().mean();
  return centred * centred.transpose() / static_cast<double>(ts.count() - 1);
}

KernelSpec KernelSpec::fixed(const TrainingSet& ts, double epsilon, Metric metric) {
  KernelSpec spec;
  spec.epsilon = epsilon;
  spec.mode = BandwidthMode::Fixed;
  spec.rho = Vector::Ones(static_cast<Eigen::Index>(ts.count()));
  spec.metric = metric;
  if (metric == Metric::EmpiricalCovariance) spec.metric_matrix = empirical_covariance(ts);
  spec.validate(ts);
  return spec;
}

KernelSpec KernelSpec::variable(const TrainingSet& ts, double epsilon, double beta, Metric metric) {
  KernelSpec spec;
  spec.epsilon = epsilon;
  spec.mode = BandwidthMode::Variable;
  spec.beta = beta;
  auto kde = std::make_shared<const DensityEstimate>(fit_kde(ts));
  auto profile = bandwidth_profile(ts, *kde, beta);
  spec.rho = std::move(profile.rho);
  spec.z_norm = profile.z_norm;
  spec.density = std::move(kde);
  spec.metric = metric;
  if (metric == Metric::EmpiricalCovariance) spec.metric_matrix = empirical_covariance(ts);
  spec.validate(ts);
  return spec;
}

void KernelSpec::validate(const TrainingSet& ts) const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InvalidArgument("epsilon must be > 0");
  if (beta > 0.0) throw InvalidArgument("beta must be <= 0");
  if (static_cast<std::size_t>(rho.size()) != ts.count())
    throw InvalidArgument("rho length does not match the number of samples");
  for (Eigen::Index i = 0; i < rho.size(); ++i)
    if (!(rho[i] > 0.0) || !std::isfinite(rho[i])) throw InvalidArgument("rho must be positive");
  if (!(z_norm > 0.0) || !std::isfinite(z_norm)) throw InvalidArgument("z_norm must be positive");
  if (mode == BandwidthMode::Fixed) {
    if ((rho.array() != 1.0).any() || z_norm != 1.0)
      throw InvalidArgument("Fixed mode requires rho = 1 and z_norm = 1");
  } else if (!density) {
    throw InvalidArgument("Variable mode requires a density estimate");
  }
  if (metric == Metric::EmpiricalCovariance) {
    const auto d = static_cast<Eigen::Index>(ts.dim());
    if (metric_matrix.rows() != d || metric_matrix.cols() != d)
      throw InvalidArgument("metric matrix must be d x d");
    if (Eigen::LLT<Matrix>(metric_matrix).info() != Eigen::Success)
      throw DegenerateDataError("metric matrix is not positive definite");
  }
}

double KernelSpec::rho_at(const Vector& x) const {
  if (mode == BandwidthMode::Fixed) return 1.0;
  return scaled_bandwidth(density->log_value(x), std::log(z_norm), beta);
}

KernelEvaluator::KernelEvaluator(const TrainingSet& ts, const KernelSpec& spec)
    : rho_(spec.rho),
      two_eps_(2.0 * spec.epsilon),
      mode_(spec.mode),
      beta_(spec.beta),
      log_z_(std::log(spec.z_norm)),
      density_(spec.density) {
  spec.validate(ts);
  if (spec.metric == Metric::EmpiricalCovariance) {
    // A^{-1} = W^T W with W = L^{-1}, A = L L^T.
    const Eigen::LLT<Matrix> llt(spec.metric_matrix);
    Matrix w = Matrix::Identity(spec.metric_matrix.rows(), spec.metric_matrix.cols());
    llt.matrixL().solveInPlace(w);
    points_ = w * ts.data();
    whitener_ = std::move(w);
  } else {
    points_ = ts.data();
  }
}

double KernelEvaluator::rho_at(const Vector& x) const {
  if (mode_ == BandwidthMode::Fixed) return 1.0;
  return scaled_bandwidth(density_->log_value(x), log_z_, beta_);
}

double KernelEvaluator::log_entry(std::size_t i, std::size_t j) const {
  const auto ii = static_cast<Eigen::Index>(i);
  const auto jj = static_cast<Eigen::Index>(j);
  const double q = squared_distance(points_.col(ii).data(), points_.col(jj).data(), dim());
  return -q / (two_eps_ * (rho_[ii] + rho_[jj]));
}

void KernelEvaluator::log_vector(const Vector& x, Vector& out) const {
  const double rx = rho_at(x);
  Vector wx;
  const double* px = x.data();
  if (whitener_) {
    wx = *whitener_ * x;
    px = wx.data();
  }
  const std::size_t d = dim();
  out.resize(points_.cols());
  const double* base = points_.data();
  for (Eigen::Index i = 0; i < points_.cols(); ++i) {
    const double q = squared_distance(base + static_cast<std::size_t>(i) * d, px, d);
    out[i] = -q / (two_eps_ * (rx + rho_[i]));
  }
}

Vector KernelEvaluator::column(std::size_t j) const {
  Vector out(points_.cols());
  for (std::size_t i = 0; i < size(); ++i) out[static_cast<Eigen::Index>(i)] = std::exp(log_entry(i, j));
  return out;
}

Matrix KernelEvaluator::dense() const {
  const auto m = points_.cols();
  Matrix t(m, m);
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (Eigen::Index j = 0; j < m; ++j) {
    t(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < m; ++i)
      t(i, j) = std::exp(log_entry(static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
  }
  t.triangularView<Eigen::StrictlyUpper>() = t.transpose();
  return t;
}

Vector KernelEvaluator::apply(const Vector& v) const {
  const auto m = points_.cols();
  Vector out(m);
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (Eigen::Index i = 0; i < m; ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double e = log_entry(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      if (e > kExpUnderflow) s += std::exp(e) * v[j];
    }
    out[i] = s;
  }
  return out;
}

Matrix kernel_matrix(const TrainingSet& ts, const KernelSpec& spec) {
  return KernelEvaluator(ts, spec).dense();
}

Vector kernel_vector(const TrainingSet& ts, const KernelSpec& spec, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != ts.dim())
    throw InvalidArgument("kernel_vector: query dimension mismatch");
  Vector out;
  KernelEvaluator(ts, spec).log_vector(x, out);
  return out.array().exp();
}

}  // namespace sbridge
