#include "sbridge/bridge.hpp"
#include "sbridge/conditional.hpp"
#include "sbridge/csv.hpp"
#include "sbridge/datasets.hpp"
#include "sbridge/evaluation.hpp"
#include "sbridge/experiments.hpp"
#include "sbridge/random.hpp"
#include "sbridge/sampler.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace sbridge;
using json = nlohmann::ordered_json;

namespace {

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::optional<Vector> optional_vector(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return to_vector(v);
}

void write_json(const std::string& path, const json& j) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write " + path);
}

void write_matrix(const std::string& path, const Matrix& m, const csv::WriteOptions& options) {
  if (path.empty() || path == "-")
    csv::write_columns(std::cout, m, options);
  else
    csv::write_columns(std::filesystem::path(path), m, options);
}

std::vector<std::string> names(const std::string& prefix, Eigen::Index n) {
  std::vector<std::string> out;
  for (Eigen::Index k = 1; k <= n; ++k) out.push_back(prefix + std::to_string(k));
  return out;
}

NoiseMode parse_noise(const std::string& s) {
  if (s == "unaware") return NoiseMode::Unaware;
  if (s == "aware") return NoiseMode::Aware;
  throw InvalidArgument("unknown noise mode '" + s + "' (expected unaware or aware)");
}

struct DatasetArgs {
  std::string kind;
  std::size_t m = 1000;
  std::uint64_t seed = 0;
  std::string out;
  bool header = false;
  double nu = 1e-4;
  double sigma_r = 0.06, sigma_theta = 0.6;
  std::size_t d = 3;
  double alpha = 5.0, radial_noise = 0.01;
  bool full_sphere = false;
  double dt = 0.1;
  std::string coupling = "additive";
  double eps_sep = 0.01;
  double rtol = 1e-6;
  std::string closure_out;
};

void cmd_dataset(const DatasetArgs& a) {
  const std::uint64_t seed = derive_seed(a.seed, "dataset");
  csv::WriteOptions w;
  Matrix data;
  if (a.kind == "gaussian2d") {
    data = singular_gaussian_2d(a.m, a.nu, seed).data();
  } else if (a.kind == "ring") {
    data = gaussian_ring(a.m, a.sigma_r, a.sigma_theta, seed).data();
  } else if (a.kind == "semisphere") {
    data = hyper_semisphere(a.m, a.d, a.alpha, a.radial_noise, seed, a.full_sphere).data();
  } else if (a.kind == "lorenz63") {
    data = lorenz63_series(a.m, a.dt, seed);
  } else if (a.kind == "multiscale") {
    MultiscaleOptions mo;
    if (a.coupling == "additive")
      mo.mode = CouplingMode::Additive;
    else if (a.coupling == "multiplicative")
      mo.mode = CouplingMode::Multiplicative;
    else
      throw InvalidArgument("unknown coupling '" + a.coupling + "'");
    mo.n_points = a.m;
    mo.dt_out = a.dt;
    mo.eps_sep = a.eps_sep;
    mo.tol = {a.rtol, a.rtol * 1e-3};
    mo.seed = seed;
    data = multiscale_l63(mo);
    if (!a.closure_out.empty()) {
      const VectorField drift = [](const Vector& x) { return Vector::Constant(1, double_well_drift(x[0])); };
      csv::WriteOptions cw;
      if (a.header) cw.columns = {"z_prev", "psi"};
      write_matrix(a.closure_out, extract_closure_samples(data, drift, a.dt).data(), cw);
    }
  } else {
    throw InvalidArgument("unknown dataset '" + a.kind +
                          "' (expected gaussian2d, ring, semisphere, lorenz63, multiscale)");
  }
  if (a.header) w.columns = names("x", data.rows());
  write_matrix(a.out, data, w);
}

struct FitArgs {
  std::string data, out;
  bool header = false;
  double epsilon = 0.0;
  std::string mode = "fixed", metric = "identity";
  double beta = 0.0;
  SinkhornOptions sinkhorn;
};

void cmd_fit(const FitArgs& a) {
  const TrainingSet ts = TrainingSet::load(a.data, a.header);
  Metric metric;
  if (a.metric == "identity")
    metric = Metric::Identity;
  else if (a.metric == "covariance")
    metric = Metric::EmpiricalCovariance;
  else
    throw InvalidArgument("unknown metric '" + a.metric + "' (expected identity or covariance)");
  KernelSpec spec;
  if (a.mode == "fixed")
    spec = KernelSpec::fixed(ts, a.epsilon, metric);
  else if (a.mode == "variable")
    spec = KernelSpec::variable(ts, a.epsilon, a.beta, metric);
  else
    throw InvalidArgument("unknown bandwidth mode '" + a.mode + "' (expected fixed or variable)");
  const BridgeModel model = sinkhorn_fit(ts, spec, a.sinkhorn);
  model.save(a.out, a.sinkhorn);
  write_json("-", {{"model", a.out},
                   {"dim", model.dim()},
                   {"count", model.count()},
                   {"epsilon", model.epsilon()},
                   {"residual", model.residual()},
                   {"iterations", model.iterations_used()}});
}

struct ChainArgs {
  std::string model, out, half_out, diagnostics_out;
  std::string scheme = "aware-split";
  std::size_t steps = 10'000;
  std::optional<std::size_t> burn;
  std::size_t thin = 20;
  std::optional<double> delta_tau;
  std::uint64_t seed = 0;
  std::vector<double> init;
  bool header = false;

  SamplerConfig config() const {
    SamplerConfig cfg = SamplerConfig::with_defaults(parse_scheme(scheme), steps, derive_seed(seed, "sample"));
    if (burn) cfg.burn_in = *burn;
    cfg.thin = thin;
    cfg.delta_tau = delta_tau;
    cfg.init = optional_vector(init);
    cfg.record_half_steps = !half_out.empty();
    return cfg;
  }
};

void write_chain(const ChainArgs& a, const ChainOutput& out) {
  csv::WriteOptions w;
  if (a.header) w.columns = names("x", out.samples.rows());
  write_matrix(a.out, out.samples, w);
  if (!a.half_out.empty()) write_matrix(a.half_out, out.half_steps, w);
  if (!a.diagnostics_out.empty()) {
    // One JSON object per step.
    std::ofstream f(a.diagnostics_out);
    if (!f) throw InvalidArgument("cannot write " + a.diagnostics_out);
    for (std::size_t n = 0; n < out.diagnostics.size(); ++n) {
      const auto& d = out.diagnostics[n];
      f << json{{"step", n + 1}, {"max_weight", d.max_weight}, {"entropy", d.entropy}, {"in_box", d.in_box}}.dump()
        << "\n";
    }
  }
}

void cmd_sample(const ChainArgs& a) {
  const BridgeModel model = BridgeModel::load(a.model);
  write_chain(a, run_chain(model, a.config()));
}

struct ConditionalArgs {
  ChainArgs chain;
  std::vector<std::size_t> y_indices;
  std::vector<double> y_star;
  std::size_t n_inner = 1;
  std::string noise = "unaware";
  bool reset_inner = false;
  std::vector<double> center;
  double curvature = 0.0;
};

void cmd_conditional(const ConditionalArgs& a) {
  const BridgeModel model = BridgeModel::load(a.chain.model);
  SamplerConfig cfg = a.chain.config();
  if (!a.center.empty()) {
    if (!a.y_indices.empty()) throw InvalidArgument("--center and --y-indices are mutually exclusive");
    PotentialSpec pot = PotentialSpec::quadratic(to_vector(a.center), a.curvature);
    write_chain(a.chain, bayesian_chain(model, pot, cfg));
    return;
  }
  ConditionalSpec spec =
      ConditionalSpec::clamp(model.dim(), a.y_indices, to_vector(a.y_star), a.n_inner, parse_noise(a.noise));
  spec.reset_inner = a.reset_inner;
  cfg.record_half_steps = false;
  write_chain(a.chain, conditional_chain(model, spec, cfg));
}

struct SurrogateArgs {
  std::string model, out, drift = "double-well";
  double dt = 0.1;
  std::vector<double> z0;
  SurrogateOptions options;
  std::string noise = "unaware";
  std::uint64_t seed = 0;
};

void cmd_surrogate(SurrogateArgs a) {
  VectorField drift;
  if (a.drift == "double-well")
    drift = [](const Vector& x) {
      Vector f(x.size());
      for (Eigen::Index k = 0; k < x.size(); ++k) f[k] = double_well_drift(x[k]);
      return f;
    };
  else if (a.drift == "zero")
    drift = [](const Vector& x) { return Vector(Vector::Zero(x.size())); };
  else
    throw InvalidArgument("unknown drift '" + a.drift + "' (expected double-well or zero)");
  a.options.noise_mode = parse_noise(a.noise);
  ClosureModel cm{BridgeModel::load(a.model), drift, a.dt};
  cm.validate();
  Rng rng = Rng::stream(a.seed, "surrogate");
  const Vector z0 = a.z0.empty() ? Vector(cm.bridge.training().sample(0).head(
                                       static_cast<Eigen::Index>(cm.slow_dim())))
                                 : to_vector(a.z0);
  const SurrogateResult r = surrogate_simulate(cm, z0, a.options, rng);
  csv::WriteOptions w;
  w.columns = names("z", r.z.rows());
  w.columns.insert(w.columns.begin(), "t");
  w.time_step = a.dt;
  w.time_origin = a.dt;
  write_matrix(a.out, r.z, w);
}

struct TrajectoryArgs {
  std::string model, out;
  std::vector<double> y0, y1;
  TrajectoryOptions options;
  double dt = 0.1;
  std::uint64_t seed = 0;
};

void cmd_trajectory(const TrajectoryArgs& a) {
  const BridgeModel model = BridgeModel::load(a.model);
  const auto dy = static_cast<Eigen::Index>(model.dim() / 2);
  Vector y0, y1;
  if (a.y0.empty() != a.y1.empty()) throw InvalidArgument("--y0 and --y1 must be given together");
  if (a.y0.empty()) {
    Rng init = Rng::stream(a.seed, "init");
    const Vector start = model.training().sample(init.index(model.count()));
    y0 = start.head(dy);
    y1 = start.tail(dy);
  } else {
    y0 = to_vector(a.y0);
    y1 = to_vector(a.y1);
  }
  Rng rng = Rng::stream(a.seed, "trajectory");
  const Matrix traj = trajectory_generate(model, y0, y1, a.options, rng);
  csv::WriteOptions w;
  w.columns = names("y", dy);
  w.columns.insert(w.columns.begin(), "t");
  w.time_step = a.dt;
  write_matrix(a.out, traj, w);
}

struct EvaluateArgs {
  std::string generated, reference, out;
  bool header = false;
  std::optional<double> penalty, lambda;
  std::optional<std::size_t> coordinate;
  std::size_t bins = 50;
  int max_iter = 50'000;
  double tol = 1e-9;
};

void cmd_evaluate(const EvaluateArgs& a) {
  const TrainingSet gen = TrainingSet::load(a.generated, a.header);
  const TrainingSet ref = TrainingSet::load(a.reference, a.header);
  if (gen.dim() != ref.dim()) throw InvalidArgument("generated and reference sets differ in dimension");
  if (a.penalty && a.lambda) throw InvalidArgument("--penalty and --lambda are mutually exclusive");
  OtConfig cfg = a.lambda ? OtConfig::from_lambda(*a.lambda) : OtConfig{};
  if (a.penalty) cfg.penalty = *a.penalty;
  cfg.max_iter = a.max_iter;
  cfg.tol = a.tol;
  const std::size_t c = a.coordinate.value_or(gen.dim() - 1);
  if (c >= gen.dim()) throw IndexError("coordinate out of range");

  const OtResult full = entropic_ot(gen.data(), ref.data(), cfg);
  const Vector g = gen.data().row(static_cast<Eigen::Index>(c)).transpose();
  const Vector r = ref.data().row(static_cast<Eigen::Index>(c)).transpose();
  const OtResult marginal = marginal_ot_1d(g, r, cfg);
  const double lo = std::min(g.minCoeff(), r.minCoeff());
  double hi = std::max(g.maxCoeff(), r.maxCoeff());
  if (!(hi > lo)) hi = lo + 1.0;
  const Histogram hg = histogram(g, a.bins, lo, hi), hr = histogram(r, a.bins, lo, hi);

  write_json(a.out, {{"ot_distance", full.distance},
                     {"transport_cost", full.transport_cost},
                     {"entropy", full.entropy},
                     {"penalty", cfg.penalty},
                     {"marginals_residual", full.plan_residual},
                     {"iterations", full.iterations},
                     {"coordinate", c},
                     {"marginal_ot_distance", marginal.distance},
                     {"marginal_transport_cost", marginal.transport_cost},
                     {"ks", ks_statistic(g, r)},
                     {"histogram",
                      {{"lower", lo}, {"upper", hi}, {"generated", hg.counts}, {"reference", hr.counts}}}});
}

struct ExperimentArgs {
  std::string name, out, cache;
  ExperimentOptions options;
  std::optional<std::size_t> reference_size;
};

void cmd_experiment(ExperimentArgs a) {
  a.options.out_dir = a.out.empty() ? std::filesystem::path("results") / a.name : std::filesystem::path(a.out);
  if (!a.cache.empty()) a.options.cache_dir = a.cache;
  a.options.reference_size = a.reference_size;
  const json summary = run_experiment(a.name, a.options);
  std::cout << summary_text(summary);
}

void add_chain_options(CLI::App* cmd, ChainArgs& a) {
  cmd->add_option("--model", a.model, "model file written by fit")->required();
  cmd->add_option("--out", a.out, "samples CSV (stdout when omitted)");
  cmd->add_option("--half-steps-out", a.half_out, "CSV of noisy pre-projection states");
  cmd->add_option("--diagnostics-out", a.diagnostics_out, "per-step diagnostics as JSON lines");
  cmd->add_option("--scheme", a.scheme, "unaware-direct, aware-direct, unaware-split, aware-split");
  cmd->add_option("--steps", a.steps, "total steps");
  cmd->add_option("--burn", a.burn, "burn-in steps (default 60% of steps)");
  cmd->add_option("--thin", a.thin, "keep every n-th step after burn-in");
  cmd->add_option("--delta-tau", a.delta_tau, "virtual time step of the direct schemes");
  cmd->add_option("--init", a.init, "initial state, comma separated")->delimiter(',');
  cmd->add_flag("--header", a.header, "write a header line");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Schrodinger-bridge Langevin sampler"};
  app.set_config("--config", "", "TOML-like key = value file; flags override it");
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "root seed, split into named streams");

  DatasetArgs ds;
  auto* dataset = app.add_subcommand("dataset", "generate a synthetic dataset as CSV");
  dataset->add_option("kind", ds.kind, "gaussian2d, ring, semisphere, lorenz63, multiscale")->required();
  dataset->add_option("--m", ds.m, "number of samples / time points");
  dataset->add_option("--seed", seed, "root seed");
  dataset->add_option("--out", ds.out, "output CSV (stdout when omitted)");
  dataset->add_flag("--header", ds.header, "write a header line");
  dataset->add_option("--nu", ds.nu, "variance of the thin direction (gaussian2d)");
  dataset->add_option("--sigma-r", ds.sigma_r, "radial std (ring)");
  dataset->add_option("--sigma-theta", ds.sigma_theta, "angular std (ring)");
  dataset->add_option("--d", ds.d, "dimension (semisphere)");
  dataset->add_option("--alpha", ds.alpha, "stretch of the last axis (semisphere)");
  dataset->add_option("--radial-noise", ds.radial_noise, "width of the uniform radial perturbation");
  dataset->add_flag("--full-sphere", ds.full_sphere, "keep both hemispheres");
  dataset->add_option("--dt", ds.dt, "sampling interval (lorenz63, multiscale)");
  dataset->add_option("--coupling", ds.coupling, "additive or multiplicative (multiscale)");
  dataset->add_option("--eps-sep", ds.eps_sep, "time-scale separation (multiscale)");
  dataset->add_option("--rtol", ds.rtol, "relative ODE tolerance (multiscale)");
  dataset->add_option("--closure-out", ds.closure_out, "also write (z_prev, psi) pairs (multiscale)");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "fit the Sinkhorn scaling and write a model file");
  fit->add_option("--data", fa.data, "training CSV or SBTS file")->required();
  fit->add_option("--out", fa.out, "model file (.sbmd)")->required();
  fit->add_flag("--header", fa.header, "CSV has a header line");
  fit->add_option("--epsilon", fa.epsilon, "bandwidth")->required();
  fit->add_option("--mode", fa.mode, "fixed or variable");
  fit->add_option("--beta", fa.beta, "variable bandwidth exponent (<= 0)");
  fit->add_option("--metric", fa.metric, "identity or covariance");
  fit->add_option("--tol", fa.sinkhorn.tol, "Sinkhorn residual tolerance");
  fit->add_option("--max-iter", fa.sinkhorn.max_iter, "Sinkhorn iteration cap");
  fit->add_option("--dense-limit", fa.sinkhorn.dense_limit, "largest M using a dense kernel matrix");

  ChainArgs sa;
  auto* sample = app.add_subcommand("sample", "run a Langevin chain");
  add_chain_options(sample, sa);
  sample->add_option("--seed", seed, "root seed");

  ConditionalArgs ca;
  auto* conditional = app.add_subcommand("conditional", "clamped or potential-tilted sampling");
  add_chain_options(conditional, ca.chain);
  conditional->add_option("--seed", seed, "root seed");
  conditional->add_option("--y-indices", ca.y_indices, "clamped coordinates (0-based)")->delimiter(',');
  conditional->add_option("--y-star", ca.y_star, "clamped values")->delimiter(',');
  conditional->add_option("--n-inner", ca.n_inner, "clamped steps per kept state");
  conditional->add_option("--noise", ca.noise, "unaware or aware");
  conditional->add_flag("--reset-inner", ca.reset_inner, "restart the inner chain every outer step");
  conditional->add_option("--center", ca.center, "center of a quadratic potential")->delimiter(',');
  conditional->add_option("--curvature", ca.curvature, "curvature of the quadratic potential");

  SurrogateArgs ua;
  auto* surrogate = app.add_subcommand("surrogate", "simulate the slow surrogate with sampled closure terms");
  surrogate->add_option("--model", ua.model, "bridge over (z_prev, psi) pairs")->required();
  surrogate->add_option("--out", ua.out, "output CSV (stdout when omitted)");
  surrogate->add_option("--seed", seed, "root seed");
  surrogate->add_option("--drift", ua.drift, "double-well or zero");
  surrogate->add_option("--dt", ua.dt, "sampling interval");
  surrogate->add_option("--z0", ua.z0, "initial slow state")->delimiter(',');
  surrogate->add_option("--n-outer", ua.options.n_outer, "surrogate steps");
  surrogate->add_option("--n-inner", ua.options.n_inner, "Langevin steps per closure draw");
  surrogate->add_flag("--reset-inner", ua.options.reset_inner, "restart the inner chain every outer step");
  surrogate->add_option("--noise", ua.noise, "unaware or aware");

  TrajectoryArgs ta;
  auto* trajectory = app.add_subcommand("trajectory", "generate a trajectory from a bridge over consecutive pairs");
  trajectory->add_option("--model", ta.model, "bridge over (y_prev, y_next) pairs")->required();
  trajectory->add_option("--out", ta.out, "output CSV (stdout when omitted)");
  trajectory->add_option("--seed", seed, "root seed");
  trajectory->add_option("--y0", ta.y0, "first state")->delimiter(',');
  trajectory->add_option("--y1", ta.y1, "second state")->delimiter(',');
  trajectory->add_option("--steps", ta.options.n_steps, "trajectory length");
  trajectory->add_option("--n-inner", ta.options.n_inner, "Langevin steps per generated state");
  trajectory->add_flag("!--carry-inner,--reset-inner", ta.options.reset_inner,
                       "carry the inner chain across steps instead of restarting it");
  trajectory->add_option("--dt", ta.dt, "time column spacing");

  EvaluateArgs ea;
  auto* evaluate = app.add_subcommand("evaluate", "compare generated samples against a reference set");
  evaluate->add_option("--generated", ea.generated, "generated samples CSV")->required();
  evaluate->add_option("--reference", ea.reference, "reference samples CSV")->required();
  evaluate->add_option("--out", ea.out, "JSON report (stdout when omitted)");
  evaluate->add_flag("--header", ea.header, "CSV files have a header line");
  evaluate->add_option("--penalty", ea.penalty, "entropy coefficient 1/lambda (default 0.01)");
  evaluate->add_option("--lambda", ea.lambda, "lambda; sets the entropy coefficient to 1/lambda");
  evaluate->add_option("--coordinate", ea.coordinate, "coordinate for marginal statistics (default last)");
  evaluate->add_option("--bins", ea.bins, "histogram bins");
  evaluate->add_option("--max-iter", ea.max_iter, "OT iteration cap");
  evaluate->add_option("--tol", ea.tol, "OT marginal tolerance");

  ExperimentArgs xa;
  auto* experiment = app.add_subcommand("experiment", "run a preset end to end");
  std::string preset_list;
  for (const auto& n : experiment_names()) preset_list += (preset_list.empty() ? "" : ", ") + n;
  experiment->add_option("name", xa.name, "one of: " + preset_list)->required();
  experiment->add_option("--seed", seed, "root seed");
  experiment->add_option("--out", xa.out, "report directory (default results/<name>)");
  experiment->add_option("--cache", xa.cache, "cache directory for generated ODE series");
  experiment->add_flag("--full", xa.options.full_scale, "use the original training/reference sizes");
  experiment->add_option("--reference-size", xa.reference_size, "reference set size for OT");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*dataset) {
      ds.seed = seed;
      cmd_dataset(ds);
    } else if (*fit) {
      cmd_fit(fa);
    } else if (*sample) {
      sa.seed = seed;
      cmd_sample(sa);
    } else if (*conditional) {
      ca.chain.seed = seed;
      cmd_conditional(ca);
    } else if (*surrogate) {
      ua.seed = seed;
      cmd_surrogate(ua);
    } else if (*trajectory) {
      ta.seed = seed;
      cmd_trajectory(ta);
    } else if (*evaluate) {
      cmd_evaluate(ea);
    } else if (*experiment) {
      xa.options.seed = seed;
      cmd_experiment(xa);
    }
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DegenerateDataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
