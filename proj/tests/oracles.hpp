#pragma once

// Reference computations written independently of the library code paths.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// t_ij = exp(-|x_i - x_j|^2 / (2 eps (rho_i + rho_j))).
inline MatrixXd kernel(const MatrixXd& x, double eps, const VectorXd& rho) {
  const auto m = x.cols();
  MatrixXd t(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      t(i, j) = std::exp(-(x.col(i) - x.col(j)).squaredNorm() / (2.0 * eps * (rho[i] + rho[j])));
  return t;
}

inline MatrixXd kernel(const MatrixXd& x, double eps) { return kernel(x, eps, VectorXd::Ones(x.cols())); }

// Damped Newton on F(v)_i = v_i (T v)_i - 1, started on the positive branch.
inline VectorXd sinkhorn_newton(const MatrixXd& t) {
  const auto m = t.rows();
  VectorXd v = (t.rowwise().sum().array().rsqrt()).matrix();
  for (int it = 0; it < 200; ++it) {
    const VectorXd tv = t * v;
    const VectorXd f = (v.array() * tv.array() - 1.0).matrix();
    if (f.cwiseAbs().maxCoeff() < 1e-15) break;
    MatrixXd j = v.asDiagonal() * t;
    j.diagonal() += tv;
    const VectorXd step = j.fullPivLu().solve(f);
    double a = 1.0;
    while ((v - a * step).minCoeff() <= 0.0) a *= 0.5;
    v -= a * step;
  }
  return v;
}

// Optimal assignment cost for equal-size uniform marginals by enumeration.
inline double assignment_cost(const MatrixXd& cost) {
  const auto n = cost.rows();
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) c += cost(i, perm[static_cast<std::size_t>(i)]);
    best = std::min(best, c / static_cast<double>(n));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double sample_std(const VectorXd& x) {
  return std::sqrt((x.array() - x.mean()).square().sum() / static_cast<double>(x.size() - 1));
}

// Standard error of the mean of a correlated series from non-overlapping batch means.
inline double batch_standard_error(const VectorXd& x, int batches = 20) {
  const Eigen::Index len = x.size() / batches;
  VectorXd means(batches);
  for (int b = 0; b < batches; ++b) means[b] = x.segment(b * len, len).mean();
  return sample_std(means) / std::sqrt(static_cast<double>(batches));
}

inline MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& gen, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n(gen);
  return m;
}

// Plain log-domain Sinkhorn for uniform marginals, run for a fixed number of sweeps.
// Returns the plan.
inline MatrixXd entropic_plan(const MatrixXd& cost, double penalty, int sweeps = 20000) {
  const auto n = cost.rows(), m = cost.cols();
  const double la = -std::log(static_cast<double>(n)), lb = -std::log(static_cast<double>(m));
  VectorXd f = VectorXd::Zero(n), g = VectorXd::Zero(m);
  auto lse = [](const VectorXd& z) {
    const double mx = z.maxCoeff();
    return mx + std::log((z.array() - mx).exp().sum());
  };
  for (int it = 0; it < sweeps; ++it) {
    for (Eigen::Index i = 0; i < n; ++i)
      f[i] = penalty * (la - lse(((g.transpose() - cost.row(i)) / penalty).transpose()));
    for (Eigen::Index j = 0; j < m; ++j) g[j] = penalty * (lb - lse((f - cost.col(j)) / penalty));
  }
  MatrixXd p(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) p(i, j) = std::exp((f[i] + g[j] - cost(i, j)) / penalty);
  return p;
}

inline MatrixXd euclidean_cost(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd c(a.cols(), b.cols());
  for (Eigen::Index i = 0; i < a.cols(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j) c(i, j) = (a.col(i) - b.col(j)).norm();
  return c;
}

}  // namespace oracle
