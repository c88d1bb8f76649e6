#include "sbridge/experiments.hpp"

#include "sbridge/bridge.hpp"
#include "sbridge/conditional.hpp"
#include "sbridge/csv.hpp"
#include "sbridge/datasets.hpp"
#include "sbridge/evaluation.hpp"
#include "sbridge/random.hpp"
#include "sbridge/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

namespace sbridge {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

double sample_std(const Vector& x) {
  if (x.size() < 2) return 0.0;
  return std::sqrt((x.array() - x.mean()).square().sum() / static_cast<double>(x.size() - 1));
}

json row_stats(const Matrix& samples) {
  json mean = json::array(), std = json::array();
  for (Eigen::Index r = 0; r < samples.rows(); ++r) {
    const Vector row = samples.row(r).transpose();
    mean.push_back(row.mean());
    std.push_back(sample_std(row));
  }
  return json{{"mean", mean}, {"std", std}};
}

json sinkhorn_summary(const BridgeModel& model) {
  return json{{"residual", model.residual()}, {"iterations", model.iterations_used()}};
}

double in_box_fraction(const ChainOutput& out) {
  if (out.diagnostics.empty()) return 1.0;
  std::size_t n = 0;
  for (const auto& d : out.diagnostics) n += d.in_box ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(out.diagnostics.size());
}

void write_csv(const ExperimentOptions& opts, const std::string& name, const Matrix& data,
               std::vector<std::string> columns, std::optional<double> time_step = std::nullopt) {
  if (opts.out_dir.empty()) return;
  fs::create_directories(opts.out_dir);
  csv::WriteOptions w;
  w.columns = std::move(columns);
  w.time_step = time_step;
  csv::write_columns(opts.out_dir / name, data, w);
}

std::vector<std::string> coordinate_names(const std::string& prefix, Eigen::Index n) {
  std::vector<std::string> names;
  for (Eigen::Index k = 1; k <= n; ++k) names.push_back(prefix + std::to_string(k));
  return names;
}

json base_summary(const std::string& name, const ExperimentOptions& opts) {
  return json{{"preset", name}, {"seed", opts.seed}, {"full_scale", opts.full_scale}};
}

// Kept samples per run of a chain; every preset goes through here.
ChainOutput chain(const BridgeModel& model, Scheme scheme, std::size_t n_steps, std::size_t burn_in,
                  std::size_t thin, std::uint64_t seed, std::optional<Vector> init = std::nullopt,
                  bool half_steps = false) {
  SamplerConfig cfg;
  cfg.scheme = scheme;
  cfg.n_steps = n_steps;
  cfg.burn_in = burn_in;
  cfg.thin = thin;
  cfg.seed = seed;
  cfg.init = std::move(init);
  cfg.record_half_steps = half_steps;
  return run_chain(model, cfg);
}

json example_2d(const ExperimentOptions& opts) {
  const std::size_t m = 1000;
  const double nu = 1e-4, eps = 0.1;
  const std::size_t n_steps = 101'000, burn_in = 1'000, thin = 1;
  const TrainingSet ts = singular_gaussian_2d(m, nu, derive_seed(opts.seed, "dataset"));
  const BridgeModel model = sinkhorn_fit(ts, KernelSpec::fixed(ts, eps));
  const ChainOutput out =
      chain(model, Scheme::UnawareSplit, n_steps, burn_in, thin, derive_seed(opts.seed, "sample"));

  write_csv(opts, "training.csv", ts.data(), {"x1", "x2"});
  write_csv(opts, "samples.csv", out.samples, {"x1", "x2"});

  json s = base_summary("example-2d", opts);
  s["parameters"] = {{"m", m}, {"nu", nu}, {"epsilon", eps}, {"scheme", "unaware-split"},
                     {"n_steps", n_steps}, {"burn_in", burn_in}, {"thin", thin}};
  s["sinkhorn"] = sinkhorn_summary(model);
  s["training"] = row_stats(ts.data());
  s["generated"] = row_stats(out.samples);
  s["generated"]["count"] = out.samples.cols();
  s["generated"]["in_box_fraction"] = in_box_fraction(out);
  return s;
}

struct Polar {
  Vector radius, angle;
};

Polar to_polar(const Matrix& xy) {
  Polar p{Vector(xy.cols()), Vector(xy.cols())};
  for (Eigen::Index i = 0; i < xy.cols(); ++i) {
    p.radius[i] = std::hypot(xy(0, i), xy(1, i));
    p.angle[i] = std::atan2(xy(1, i), xy(0, i));
  }
  return p;
}

json polar_stats(const Matrix& xy) {
  const Polar p = to_polar(xy);
  return json{{"radius_mean", p.radius.mean()}, {"radius_std", sample_std(p.radius)},
              {"angle_mean", p.angle.mean()},   {"angle_std", sample_std(p.angle)}};
}

json ring(const ExperimentOptions& opts) {
  const std::size_t m = 2000;
  const double sigma_r = 0.06, sigma_theta = 0.6, eps = 0.009, beta = -0.2;
  const std::size_t n_steps = 50'000, burn_in = 10'000, thin = 4;
  const TrainingSet ts = gaussian_ring(m, sigma_r, sigma_theta, derive_seed(opts.seed, "dataset"));

  const Polar tp = to_polar(ts.data());
  Eigen::Index start = 0;
  tp.angle.minCoeff(&start);
  const Vector init = ts.sample(static_cast<std::size_t>(start));

  const BridgeModel fixed = sinkhorn_fit(ts, KernelSpec::fixed(ts, eps));
  const BridgeModel variable = sinkhorn_fit(ts, KernelSpec::variable(ts, eps, beta));
  write_csv(opts, "training.csv", ts.data(), {"x1", "x2"});

  json s = base_summary("ring", opts);
  s["parameters"] = {{"m", m},         {"sigma_r", sigma_r}, {"sigma_theta", sigma_theta},
                     {"epsilon", eps}, {"beta", beta},       {"n_steps", n_steps},
                     {"burn_in", burn_in}, {"thin", thin},   {"init", {init[0], init[1]}}};
  s["training"] = polar_stats(ts.data());
  s["sinkhorn"] = {{"fixed", sinkhorn_summary(fixed)}, {"variable", sinkhorn_summary(variable)}};

  struct Run {
    const char* name;
    const BridgeModel* model;
    Scheme scheme;
  };
  const Run runs[] = {{"aware-split", &fixed, Scheme::AwareSplit},
                      {"unaware-split", &fixed, Scheme::UnawareSplit},
                      {"aware-split-variable", &variable, Scheme::AwareSplit}};
  json results = json::object();
  for (const auto& run : runs) {
    const ChainOutput out = chain(*run.model, run.scheme, n_steps, burn_in, thin,
                                  derive_seed(opts.seed, "sample"), init, true);
    write_csv(opts, std::string("samples-") + run.name + ".csv", out.samples, {"x1", "x2"});
    json r = polar_stats(out.samples);
    r["half_steps"] = polar_stats(out.half_steps);
    r["in_box_fraction"] = in_box_fraction(out);
    results[run.name] = r;
  }
  s["runs"] = results;
  return s;
}

json semisphere(std::size_t d, const ExperimentOptions& opts) {
  static const std::map<std::size_t, double> best_eps{{3, 0.008}, {4, 0.010}, {9, 0.050}};
  const double eps = best_eps.at(d);
  const std::size_t m = 1000;
  const double alpha = 5.0, noise = 0.01;
  const std::size_t n_steps = 50'000, burn_in = 30'000, thin = 20;
  const std::size_t m_ref = opts.reference_size.value_or(opts.full_scale ? 50'000 : 5'000);

  const TrainingSet ts = hyper_semisphere(m, d, alpha, noise, derive_seed(opts.seed, "dataset"));
  const TrainingSet ref = hyper_semisphere(m_ref, d, alpha, noise, derive_seed(opts.seed, "reference"));
  Vector init = Vector::Zero(static_cast<Eigen::Index>(d));
  init[0] = 1.0;
  const auto last = static_cast<Eigen::Index>(d) - 1;
  const Vector ref_last = ref.data().row(last).transpose();
  const OtConfig ot;

  std::vector<double> betas{0.0};
  for (int n = 0; n <= 8; ++n) betas.push_back(-0.01 * std::ldexp(1.0, n));

  write_csv(opts, "training.csv", ts.data(), coordinate_names("x", static_cast<Eigen::Index>(d)));
  json s = base_summary("semisphere-" + std::to_string(d), opts);
  s["parameters"] = {{"d", d},           {"m", m},           {"alpha", alpha},
                     {"radial_noise", noise}, {"epsilon", eps}, {"scheme", "aware-split"},
                     {"n_steps", n_steps}, {"burn_in", burn_in}, {"thin", thin},
                     {"reference_size", m_ref}, {"ot_penalty", ot.penalty}};

  json runs = json::array();
  double fixed_ot = 0.0, best_ot = std::numeric_limits<double>::infinity(), best_beta = 0.0;
  for (double beta : betas) {
    const KernelSpec spec = beta == 0.0 ? KernelSpec::fixed(ts, eps) : KernelSpec::variable(ts, eps, beta);
    const BridgeModel model = sinkhorn_fit(ts, spec);
    const ChainOutput out =
        chain(model, Scheme::AwareSplit, n_steps, burn_in, thin, derive_seed(opts.seed, "sample"), init);
    const OtResult full = entropic_ot(out.samples, ref.data(), ot);
    const Vector gen_last = out.samples.row(last).transpose();
    const OtResult marginal = marginal_ot_1d(gen_last, ref_last, ot);
    std::ostringstream name;
    name << "samples-beta" << csv::format_double(beta) << ".csv";
    write_csv(opts, name.str(), out.samples, coordinate_names("x", static_cast<Eigen::Index>(d)));
    runs.push_back({{"beta", beta},
                    {"sinkhorn", sinkhorn_summary(model)},
                    {"ot_distance", full.distance},
                    {"transport_cost", full.transport_cost},
                    {"ot_iterations", full.iterations},
                    {"marginal_ot_distance", marginal.distance},
                    {"marginal_transport_cost", marginal.transport_cost},
                    {"marginal_ks", ks_statistic(gen_last, ref_last)},
                    {"in_box_fraction", in_box_fraction(out)}});
    if (beta == 0.0)
      fixed_ot = full.distance;
    else if (full.distance < best_ot) {
      best_ot = full.distance;
      best_beta = beta;
    }
  }
  s["runs"] = runs;
  s["fixed_ot_distance"] = fixed_ot;
  s["best_variable"] = {{"beta", best_beta}, {"ot_distance", best_ot}};
  s["variable_not_worse"] = best_ot <= fixed_ot;
  return s;
}

Matrix cached_multiscale(const MultiscaleOptions& mo, const ExperimentOptions& opts) {
  if (opts.cache_dir.empty()) return multiscale_l63(mo);
  std::ostringstream key;
  key << "multiscale-" << (mo.mode == CouplingMode::Additive ? "additive" : "multiplicative") << "-n"
      << mo.n_points << "-eps" << csv::format_double(mo.eps_sep) << "-rtol"
      << csv::format_double(mo.tol.rel) << "-s" << mo.seed << ".csv";
  const fs::path file = opts.cache_dir / key.str();
  if (fs::exists(file)) {
    const Matrix rows = csv::read_rows(file);
    if (rows.cols() == 1 && rows.rows() == static_cast<Eigen::Index>(mo.n_points))
      return rows.transpose();
  }
  Matrix z = multiscale_l63(mo);
  fs::create_directories(opts.cache_dir);
  const fs::path tmp = file.string() + ".tmp";
  csv::write_columns(tmp, z);
  fs::rename(tmp, file);
  return z;
}

MultiscaleOptions subgrid_series(CouplingMode mode, const ExperimentOptions& opts) {
  MultiscaleOptions mo;
  mo.mode = mode;
  mo.n_points = (opts.full_scale ? 120'000 : 20'000) + 1;
  mo.dt_out = 0.1;
  mo.seed = derive_seed(opts.seed, "dataset");
  return mo;
}

json subgrid(CouplingMode mode, const ExperimentOptions& opts) {
  const bool additive = mode == CouplingMode::Additive;
  const MultiscaleOptions mo = subgrid_series(mode, opts);
  const std::size_t m = mo.n_points - 1;
  const double eps = 0.001, dt = mo.dt_out;
  const std::size_t n_inner = 100, n_outer = 10'000, n_bins = 50;
  const Matrix z = cached_multiscale(mo, opts);

  const VectorField drift = [](const Vector& x) { return Vector::Constant(1, double_well_drift(x[0])); };
  const TrainingSet pairs = extract_closure_samples(z, drift, dt);
  ClosureModel cm{sinkhorn_fit(pairs, KernelSpec::fixed(pairs, eps)), drift, dt};

  SurrogateOptions so;
  so.n_outer = n_outer;
  so.n_inner = n_inner;
  Rng rng = Rng::stream(opts.seed, "surrogate");
  const SurrogateResult sr = surrogate_simulate(cm, z.col(0), so, rng);

  write_csv(opts, "slow-series.csv", z, {"t", "z"}, dt);
  write_csv(opts, "closure-pairs.csv", pairs.data(), {"z_prev", "psi"});
  write_csv(opts, "surrogate.csv", sr.z, {"t", "z"}, dt);

  const Vector psi = pairs.data().row(1).transpose();
  const Vector z_full = z.row(0).transpose();
  const Vector z_sur = sr.z.row(0).transpose();
  // Bumps of a few counts in the rarely visited barrier region are not modes.
  const double mode_floor = 0.05;
  auto modes_of = [&](const Vector& v, double floor) {
    const Histogram h = histogram(v, n_bins);
    json centers = json::array();
    for (auto b : find_modes(h, 3, floor)) centers.push_back(h.center(b));
    return centers;
  };

  json s = base_summary(additive ? "subgrid-additive" : "subgrid-multiplicative", opts);
  s["parameters"] = {{"coupling", additive ? "additive" : "multiplicative"},
                     {"m", m},
                     {"eps_sep", mo.eps_sep},
                     {"dt", dt},
                     {"epsilon", eps},
                     {"n_inner", n_inner},
                     {"n_outer", n_outer},
                     {"ode_rtol", mo.tol.rel},
                     {"ode_atol", mo.tol.abs},
                     {"mode_floor", mode_floor},
                     {"histogram_bins", n_bins}};
  s["sinkhorn"] = sinkhorn_summary(cm.bridge);
  s["closure"] = {{"psi_mean", psi.mean()},
                  {"psi_std", sample_std(psi)},
                  {"psi_standard_error", sample_std(psi) / std::sqrt(static_cast<double>(psi.size()))}};
  auto slow_stats = [&](const Vector& v) {
    return json{{"z_mean", v.mean()},
                {"z_std", sample_std(v)},
                {"modes", modes_of(v, mode_floor)},
                {"raw_modes", modes_of(v, 0.0)}};
  };
  s["full_system"] = slow_stats(z_full);
  s["surrogate"] = slow_stats(z_sur);
  return s;
}

json l63_generate(const ExperimentOptions& opts) {
  const std::size_t m = 10'000, n_steps = 2'000, n_inner = 20;
  const double dt = 0.1, eps = 0.05;
  const Matrix series = lorenz63_series(m + 1, dt, derive_seed(opts.seed, "dataset"));
  Matrix pairs(6, static_cast<Eigen::Index>(m));
  pairs.topRows(3) = series.leftCols(static_cast<Eigen::Index>(m));
  pairs.bottomRows(3) = series.rightCols(static_cast<Eigen::Index>(m));
  const TrainingSet ts(pairs);
  const BridgeModel model = sinkhorn_fit(ts, KernelSpec::fixed(ts, eps));

  Rng init_rng = Rng::stream(opts.seed, "init");
  const Vector start = ts.sample(init_rng.index(m));
  const Vector y0 = start.head(3), y1 = start.tail(3);

  TrajectoryOptions to;
  to.n_steps = n_steps;
  to.n_inner = n_inner;
  Rng rng = Rng::stream(opts.seed, "trajectory");
  const Matrix traj = trajectory_generate(model, y0, y1, to, rng);
  to.n_inner = 1;
  Rng rng1 = Rng::stream(opts.seed, "trajectory-single");
  const Matrix traj1 = trajectory_generate(model, y0, y1, to, rng1);
  to.n_inner = n_inner;
  to.reset_inner = false;
  Rng rng_carry = Rng::stream(opts.seed, "trajectory-carry");
  const Matrix carry = trajectory_generate(model, y0, y1, to, rng_carry);
  std::size_t carry_stuck = 0;
  for (Eigen::Index k = 1; k < carry.cols(); ++k) carry_stuck += (carry.col(k) == carry.col(k - 1));

  const Matrix second = pairs.bottomRows(3);
  const Vector lo = second.rowwise().minCoeff(), hi = second.rowwise().maxCoeff();
  std::size_t inside = 0;
  for (Eigen::Index k = 0; k < traj.cols(); ++k)
    inside += ((traj.col(k).array() >= lo.array()).all() && (traj.col(k).array() <= hi.array()).all());

  auto lag1 = [](const Matrix& y) {
    json out = json::array();
    const Matrix inc = y.rightCols(y.cols() - 1) - y.leftCols(y.cols() - 1);
    for (Eigen::Index r = 0; r < inc.rows(); ++r) out.push_back(autocorrelation(inc.row(r).transpose(), 1)[1]);
    return out;
  };

  // Occupancy of y3 on a common 50-bin grid, compared as probability masses.
  const Vector t3 = series.row(2).transpose(), g3 = traj.row(2).transpose();
  const double lo3 = std::min(t3.minCoeff(), g3.minCoeff()), hi3 = std::max(t3.maxCoeff(), g3.maxCoeff());
  const Histogram ht = histogram(t3, 50, lo3, hi3), hg = histogram(g3, 50, lo3, hi3);
  double l1 = 0.0;
  for (std::size_t b = 0; b < 50; ++b)
    l1 += std::abs(static_cast<double>(ht.counts[b]) / static_cast<double>(ht.total()) -
                   static_cast<double>(hg.counts[b]) / static_cast<double>(hg.total()));

  write_csv(opts, "training.csv", series, {"t", "y1", "y2", "y3"}, dt);
  write_csv(opts, "generated.csv", traj, {"t", "y1", "y2", "y3"}, dt);

  json s = base_summary("l63-generate", opts);
  s["parameters"] = {{"m", m}, {"dt", dt}, {"epsilon", eps}, {"n_steps", n_steps}, {"n_inner", n_inner}};
  s["sinkhorn"] = sinkhorn_summary(model);
  s["training"] = row_stats(series);
  s["generated"] = row_stats(traj);
  s["generated"]["in_box_fraction"] = static_cast<double>(inside) / static_cast<double>(traj.cols());
  s["y3_histogram_l1"] = l1;
  s["generated_carry_inner"] = row_stats(carry);
  s["generated_carry_inner"]["repeated_steps"] = carry_stuck;
  s["increment_lag1_autocorrelation"] = {{"n_inner_20", lag1(traj)}, {"n_inner_1", lag1(traj1)}};
  return s;
}

using Preset = std::function<json(const ExperimentOptions&)>;

const std::vector<std::pair<std::string, Preset>>& presets() {
  static const std::vector<std::pair<std::string, Preset>> table{
      {"example-2d", example_2d},
      {"ring", ring},
      {"semisphere-3", [](const ExperimentOptions& o) { return semisphere(3, o); }},
      {"semisphere-4", [](const ExperimentOptions& o) { return semisphere(4, o); }},
      {"semisphere-9", [](const ExperimentOptions& o) { return semisphere(9, o); }},
      {"subgrid-additive", [](const ExperimentOptions& o) { return subgrid(CouplingMode::Additive, o); }},
      {"subgrid-multiplicative",
       [](const ExperimentOptions& o) { return subgrid(CouplingMode::Multiplicative, o); }},
      {"l63-generate", l63_generate},
  };
  return table;
}

}  // namespace

std::vector<std::string> experiment_names() {
  std::vector<std::string> names;
  for (const auto& p : presets()) names.push_back(p.first);
  return names;
}

void prepare_experiment_data(const std::string& name, const ExperimentOptions& options) {
  if (options.cache_dir.empty()) return;
  if (name == "subgrid-additive") cached_multiscale(subgrid_series(CouplingMode::Additive, options), options);
  if (name == "subgrid-multiplicative")
    cached_multiscale(subgrid_series(CouplingMode::Multiplicative, options), options);
}

std::string summary_text(const json& summary) { return summary.dump(2) + "\n"; }

json run_experiment(const std::string& name, const ExperimentOptions& options) {
  for (const auto& [key, fn] : presets()) {
    if (key != name) continue;
    json summary = fn(options);
    if (!options.out_dir.empty()) {
      fs::create_directories(options.out_dir);
      std::ofstream out(options.out_dir / "summary.json", std::ios::binary);
      out << summary_text(summary);
      if (!out) throw Error("cannot write " + (options.out_dir / "summary.json").string());
    }
    return summary;
  }
  std::string list;
  for (const auto& n : experiment_names()) list += (list.empty() ? "" : ", ") + n;
  throw InvalidArgument("unknown experiment '" + name + "'; available presets: " + list);
}

}  // namespace sbridge
