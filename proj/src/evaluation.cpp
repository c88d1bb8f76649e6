#include "sbridge/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sbridge {

namespace {

Matrix euclidean_cost(const Matrix& gen, const Matrix& ref) {
  Matrix c(gen.cols(), ref.cols());
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (Eigen::Index i = 0; i < gen.cols(); ++i)
    for (Eigen::Index j = 0; j < ref.cols(); ++j) c(i, j) = (gen.col(i) - ref.col(j)).norm();
  return c;
}

double log_sum_exp(const double* x, Eigen::Index n, Eigen::Index stride) {
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < n; ++k) mx = std::max(mx, x[k * stride]);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) s += std::exp(x[k * stride] - mx);
  return mx + std::log(s);
}

// Dual potentials f, g and scalings u, v with P_ij = u_i exp((f_i + g_j - C_ij) / reg) v_j.
struct Duals {
  Vector f, g, u, v;
  Matrix kernel;
};

void absorb(Duals& s, const Matrix& cost, double reg) {
  s.f.array() += reg * s.u.array().log();
  s.g.array() += reg * s.v.array().log();
  s.u.setOnes();
  s.v.setOnes();
  s.kernel = ((-cost).colwise() + s.f).rowwise() + s.g.transpose();
  s.kernel = (s.kernel / reg).array().exp().matrix();
}

// One exact log-domain sweep; used to start and whenever the scaled form breaks down.
void log_domain_sweep(Duals& s, const Matrix& cost, double reg, double log_a, double log_b) {
  const Eigen::Index mg = cost.rows(), mr = cost.cols();
  s.f.array() += reg * s.u.array().log();
  s.g.array() += reg * s.v.array().log();
  Vector row(mr), col(mg);
  for (Eigen::Index i = 0; i < mg; ++i) {
    row = (s.g - cost.row(i).transpose()) / reg;
    s.f[i] = reg * (log_a - log_sum_exp(row.data(), mr, 1));
  }
  for (Eigen::Index j = 0; j < mr; ++j) {
    col = (s.f - cost.col(j)) / reg;
    s.g[j] = reg * (log_b - log_sum_exp(col.data(), mg, 1));
  }
  s.u.setOnes();
  s.v.setOnes();
  absorb(s, cost, reg);
}

// Row-marginal error after a log-domain sweep (columns are exact then).
double log_row_residual(const Duals& s, const Matrix& cost, double reg, double a) {
  const Eigen::Index mr = cost.cols();
  Vector row(mr);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < cost.rows(); ++i) {
    row = (s.g - cost.row(i).transpose()).array() + s.f[i];
    row /= reg;
    worst = std::max(worst, std::abs(std::exp(log_sum_exp(row.data(), mr, 1)) - a));
  }
  return worst;
}

bool scalings_ok(const Vector& x) {
  for (Eigen::Index k = 0; k < x.size(); ++k)
    if (!(x[k] > 1e-100 && x[k] < 1e100)) return false;
  return true;
}

// Sweeps can stall at small penalties; past this point the same dual is
// finished with Newton steps.
constexpr int kSweepsBeforeNewton = 2000;

constexpr int kSweepsPerStage = 200;

// Scaled Sinkhorn sweeps at penalty `reg`, starting from the absorbed duals in s.
// Falls back to exact log-domain sweeps if the scalings underflow. Returns the
// marginal residual; `iterations` is advanced by the sweeps taken.
double sinkhorn_sweeps(Duals& s, const Matrix& cost, double reg, double a, double b, double tol, int budget,
                       int& iterations) {
  s.u.setOnes();
  s.v.setOnes();
  log_domain_sweep(s, cost, reg, std::log(a), std::log(b));
  auto residual = [&]() {
    const Vector rows = s.u.asDiagonal() * (s.kernel * s.v);
    const Vector cols = s.v.asDiagonal() * (s.kernel.transpose() * s.u);
    return std::max((rows.array() - a).abs().maxCoeff(), (cols.array() - b).abs().maxCoeff());
  };
  bool log_mode = false;
  double res = residual();
  for (int k = 1; k <= budget && res > tol; ++k) {
    ++iterations;
    if (log_mode) {
      log_domain_sweep(s, cost, reg, std::log(a), std::log(b));
      if (k % 10 == 0 || k == budget) res = log_row_residual(s, cost, reg, a);
      continue;
    }
    const Vector kv = s.kernel * s.v;
    s.u = (a / kv.array()).matrix();
    const Vector ktu = s.kernel.transpose() * s.u;
    s.v = (b / ktu.array()).matrix();
    if (!scalings_ok(s.u) || !scalings_ok(s.v)) {
      if (s.u.allFinite() && s.v.allFinite() && (s.u.array() > 0).all() && (s.v.array() > 0).all()) {
        absorb(s, cost, reg);
      } else {
        s.u.setOnes();
        s.v.setOnes();
        log_mode = true;
        log_domain_sweep(s, cost, reg, std::log(a), std::log(b));
      }
    }
    if (k % 10 == 0 || k == budget) res = log_mode ? log_row_residual(s, cost, reg, a) : residual();
  }
  return res;
}

// Newton-CG ascent on the dual
//   D(f, g) = <a, f> + <b, g> - reg * sum_ij exp((f_i + g_j - C_ij) / reg).
// Each Newton step counts as one iteration. Returns the marginal residual.
double newton_polish(Duals& s, const Matrix& cost, double reg, double a, double b, double tol, int budget,
                     int& iterations) {
  const Eigen::Index mg = cost.rows(), mr = cost.cols();
  auto plan_of = [&](const Vector& f, const Vector& g) {
    Matrix p = ((-cost).colwise() + f).rowwise() + g.transpose();
    return Matrix((p / reg).array().exp().matrix());
  };
  auto dual = [&](const Vector& f, const Vector& g, const Matrix& p) {
    return a * f.sum() + b * g.sum() - reg * p.sum();
  };
  Vector f = s.f, g = s.g;
  Matrix p = plan_of(f, g);
  double value = dual(f, g, p);
  double res = std::numeric_limits<double>::infinity();
  for (int step = 0; step < budget; ++step) {
    const Vector r = p.rowwise().sum(), c = p.colwise().sum().transpose();
    const Vector gf = (a - r.array()).matrix(), gg = (b - c.array()).matrix();
    res = std::max(gf.cwiseAbs().maxCoeff(), gg.cwiseAbs().maxCoeff());
    if (res <= tol) break;
    ++iterations;

    // Solve H d = grad with H = [diag(r) P; P^T diag(c)] / reg by Jacobi-preconditioned CG.
    auto apply = [&](const Vector& xf, const Vector& xg, Vector& yf, Vector& yg) {
      yf = (r.array() * xf.array()).matrix() + p * xg;
      yg = p.transpose() * xf + (c.array() * xg.array()).matrix();
      yf /= reg;
      yg /= reg;
    };
    const Vector pf = (reg / r.array()).matrix(), pg = (reg / c.array()).matrix();
    Vector df = Vector::Zero(mg), dg = Vector::Zero(mr);
    Vector rf = gf, rg = gg;
    Vector zf = pf.cwiseProduct(rf), zg = pg.cwiseProduct(rg);
    Vector qf = zf, qg = zg, hf, hg;
    double rz = rf.dot(zf) + rg.dot(zg);
    const double gnorm = std::sqrt(gf.squaredNorm() + gg.squaredNorm());
    const double cg_tol = std::min(0.1, std::sqrt(gnorm)) * gnorm;
    for (int k = 0; k < 1000; ++k) {
      apply(qf, qg, hf, hg);
      const double curv = qf.dot(hf) + qg.dot(hg);
      if (!(curv > 0.0)) break;
      const double alpha = rz / curv;
      df += alpha * qf;
      dg += alpha * qg;
      rf -= alpha * hf;
      rg -= alpha * hg;
      if (std::sqrt(rf.squaredNorm() + rg.squaredNorm()) <= cg_tol) break;
      zf = pf.cwiseProduct(rf);
      zg = pg.cwiseProduct(rg);
      const double rz_next = rf.dot(zf) + rg.dot(zg);
      qf = zf + (rz_next / rz) * qf;
      qg = zg + (rz_next / rz) * qg;
      rz = rz_next;
    }

    // Backtracking on the (concave) dual.
    const double slope = gf.dot(df) + gg.dot(dg);
    bool moved = false;
    for (double t = 1.0; t > 1e-10; t *= 0.5) {
      const Vector f_new = f + t * df, g_new = g + t * dg;
      Matrix p_new = plan_of(f_new, g_new);
      const double v_new = dual(f_new, g_new, p_new);
      if (std::isfinite(v_new) && v_new >= value + 1e-4 * t * slope) {
        f = f_new;
        g = g_new;
        p = std::move(p_new);
        value = v_new;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  s.f = f;
  s.g = g;
  s.u.setOnes();
  s.v.setOnes();
  s.kernel = std::move(p);
  const Vector r = s.kernel.rowwise().sum(), c = s.kernel.colwise().sum().transpose();
  return std::max((r.array() - a).abs().maxCoeff(), (c.array() - b).abs().maxCoeff());
}

}  // namespace

OtConfig OtConfig::from_lambda(double lambda) {
  if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
  OtConfig cfg;
  cfg.penalty = 1.0 / lambda;
  return cfg;
}

void OtConfig::validate() const {
  if (!(penalty > 0.0) || !std::isfinite(penalty)) throw InvalidArgument("OT penalty must be positive");
  if (max_iter < 1) throw InvalidArgument("OT max_iter must be >= 1");
  if (!(tol > 0.0)) throw InvalidArgument("OT tolerance must be positive");
}

OtResult entropic_ot(const Matrix& gen, const Matrix& ref, const OtConfig& cfg) {
  cfg.validate();
  if (gen.cols() == 0 || ref.cols() == 0) throw InvalidArgument("OT inputs must be nonempty");
  if (gen.rows() != ref.rows())
    throw InvalidArgument("OT inputs have dimensions " + std::to_string(gen.rows()) + " and " +
                          std::to_string(ref.rows()));
  if (!gen.allFinite() || !ref.allFinite()) throw InvalidArgument("OT inputs must be finite");

  const Eigen::Index mg = gen.cols(), mr = ref.cols();
  const double a = 1.0 / static_cast<double>(mg);
  const double b = 1.0 / static_cast<double>(mr);
  const double reg = cfg.penalty;
  const Matrix cost = euclidean_cost(gen, ref);

  Duals s{Vector::Zero(mg), Vector::Zero(mr), Vector::Ones(mg), Vector::Ones(mr), Matrix()};
  OtResult out;
  int it = 0;

  // Penalty annealing: each coarser stage warm-starts the duals of the next.
  const double top = std::max(reg, cost.maxCoeff());
  std::vector<double> stages;
  for (double r = top; r > reg; r *= 0.5) stages.push_back(r);
  stages.push_back(reg);

  double res = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < stages.size(); ++k) {
    const bool last = k + 1 == stages.size();
    const double r = stages[k];
    const double stage_tol = last ? cfg.tol : std::max(cfg.tol, 1e-3 * std::min(a, b));
    const int budget = last ? std::min(cfg.max_iter - it, kSweepsBeforeNewton)
                            : std::min(cfg.max_iter - it, kSweepsPerStage);
    res = sinkhorn_sweeps(s, cost, r, a, b, stage_tol, budget, it);
    absorb(s, cost, r);
    if (it >= cfg.max_iter) break;
  }
  if (res > cfg.tol && it < cfg.max_iter) res = newton_polish(s, cost, reg, a, b, cfg.tol, cfg.max_iter - it, it);
  if (res > cfg.tol)
    throw ConvergenceError("entropic OT did not converge: marginal residual " + std::to_string(res) +
                               " after " + std::to_string(it) + " iterations",
                           res, it);

  const Vector log_u = s.u.array().log().matrix();
  const Vector log_v = s.v.array().log().matrix();
  double transport = 0.0, entropy = 0.0;
  if (cfg.keep_plan) out.plan.resize(mg, mr);
  for (Eigen::Index j = 0; j < mr; ++j)
    for (Eigen::Index i = 0; i < mg; ++i) {
      const double p = s.u[i] * s.kernel(i, j) * s.v[j];
      if (cfg.keep_plan) out.plan(i, j) = p;
      if (p <= 0.0) continue;
      const double log_p = log_u[i] + log_v[j] + (s.f[i] + s.g[j] - cost(i, j)) / reg;
      transport += p * cost(i, j);
      entropy -= p * log_p;
    }
  out.transport_cost = transport;
  out.entropy = entropy;
  out.distance = transport - reg * entropy;
  out.plan_residual = res;
  out.iterations = it;
  return out;
}

OtResult marginal_ot_1d(const Vector& gen, const Vector& ref, const OtConfig& cfg) {
  return entropic_ot(gen.transpose(), ref.transpose(), cfg);
}

std::size_t Histogram::total() const {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

Histogram histogram(const Vector& samples, std::size_t n_bins, double lower, double upper) {
  if (samples.size() == 0) throw InvalidArgument("histogram of an empty sample");
  if (n_bins < 1) throw InvalidArgument("histogram needs at least one bin");
  if (!(upper > lower) || !std::isfinite(lower) || !std::isfinite(upper))
    throw InvalidArgument("histogram range must satisfy lower < upper");
  Histogram h{lower, upper, std::vector<std::size_t>(n_bins, 0)};
  const double width = h.bin_width();
  for (Eigen::Index k = 0; k < samples.size(); ++k) {
    const double x = samples[k];
    if (!(x >= lower && x <= upper)) continue;
    auto bin = static_cast<std::size_t>((x - lower) / width);
    ++h.counts[std::min(bin, n_bins - 1)];
  }
  return h;
}

Histogram histogram(const Vector& samples, std::size_t n_bins) {
  if (samples.size() == 0) throw InvalidArgument("histogram of an empty sample");
  double lo = samples.minCoeff(), hi = samples.maxCoeff();
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  return histogram(samples, n_bins, lo, hi);
}

EmpiricalCdf::EmpiricalCdf(const Vector& samples) : sorted_(samples.data(), samples.data() + samples.size()) {
  if (sorted_.empty()) throw InvalidArgument("empirical CDF of an empty sample");
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCdf::operator()(double x) const {
  const auto n = std::upper_bound(sorted_.begin(), sorted_.end(), x) - sorted_.begin();
  return static_cast<double>(n) / static_cast<double>(sorted_.size());
}

EmpiricalCdf empirical_cdf(const Vector& samples) { return EmpiricalCdf(samples); }

double ks_statistic(const Vector& a, const Vector& b) {
  const EmpiricalCdf fa(a), fb(b);
  const auto& xa = fa.values();
  const auto& xb = fb.values();
  const double na = static_cast<double>(xa.size()), nb = static_cast<double>(xb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < xa.size() && j < xb.size()) {
    const double x = std::min(xa[i], xb[j]);
    while (i < xa.size() && xa[i] == x) ++i;
    while (j < xb.size() && xb[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

std::vector<std::size_t> find_modes(const Histogram& hist, std::size_t window, double min_relative_height) {
  if (window < 1) throw InvalidArgument("smoothing window must be >= 1");
  if (!(min_relative_height >= 0.0 && min_relative_height <= 1.0))
    throw InvalidArgument("relative mode height must lie in [0, 1]");
  const std::size_t n = hist.counts.size();
  const std::size_t half = window / 2;
  std::vector<double> s(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t lo = k >= half ? k - half : 0;
    const std::size_t hi = std::min(n - 1, k + half);
    double sum = 0.0;
    for (std::size_t q = lo; q <= hi; ++q) sum += static_cast<double>(hist.counts[q]);
    s[k] = sum / static_cast<double>(hi - lo + 1);
  }
  const double floor = min_relative_height * (n ? *std::max_element(s.begin(), s.end()) : 0.0);
  std::vector<std::size_t> modes;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && s[j + 1] == s[i]) ++j;
    const bool left = i == 0 || s[i - 1] < s[i];
    const bool right = j + 1 == n || s[j + 1] < s[i];
    if (left && right && s[i] > 0.0 && s[i] >= floor) modes.push_back((i + j) / 2);
    i = j + 1;
  }
  return modes;
}

std::vector<double> autocorrelation(const Vector& series, std::size_t max_lag) {
  const auto n = static_cast<std::size_t>(series.size());
  if (n < 2) throw InvalidArgument("autocorrelation needs at least two values");
  if (max_lag >= n) throw InvalidArgument("lag must be shorter than the series");
  const Vector c = series.array() - series.mean();
  const double c0 = c.squaredNorm();
  std::vector<double> out(max_lag + 1, 0.0);
  if (c0 == 0.0) {
    out[0] = 1.0;
    return out;
  }
  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    const auto m = static_cast<Eigen::Index>(n - lag);
    out[lag] = c.head(m).dot(c.tail(m)) / c0;
  }
  return out;
}

}  // namespace sbridge
