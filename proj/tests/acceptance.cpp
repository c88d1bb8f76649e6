// Acceptance checks. `acceptance N` runs criterion N, `acceptance all` runs
// every criterion in order. Artifacts go to the working directory (or --work).

#include "oracles.hpp"

#include "sbridge/bridge.hpp"
#include "sbridge/datasets.hpp"
#include "sbridge/evaluation.hpp"
#include "sbridge/experiments.hpp"
#include "sbridge/kernel.hpp"
#include "sbridge/sampler.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>

using namespace sbridge;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

fs::path g_work = ".";
const std::uint64_t kSeed = 0;

struct Verdict {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

ExperimentOptions preset_options(const fs::path& out) {
  ExperimentOptions o;
  o.seed = kSeed;
  o.out_dir = out;
  o.cache_dir = g_work / "cache";
  return o;
}

// Runs a preset into work/<name>; criterion 10 compares against these files.
json preset(const std::string& name) { return run_experiment(name, preset_options(g_work / name)); }

Verdict sinkhorn_correctness() {
  Stopwatch sw;
  std::mt19937_64 gen(20240101);
  std::uniform_int_distribution<int> dim(1, 5), small(1, 8), large(9, 200);
  std::uniform_real_distribution<double> log_eps(std::log(1e-3), 0.0);
  double worst_res = 0.0, worst_row = 0.0, worst_oracle = 0.0;
  int n_oracle = 0;
  for (int k = 0; k < 50; ++k) {
    const int d = dim(gen);
    const int m = k < 20 ? small(gen) : large(gen);
    const double eps = std::exp(log_eps(gen));
    const TrainingSet ts(oracle::random_matrix(d, m, gen, 0.3));
    SinkhornOptions so;
    so.tol = 1e-10;
    const BridgeModel model = sinkhorn_fit(ts, KernelSpec::fixed(ts, eps), so);
    const Matrix t = oracle::kernel(ts.data(), eps);
    const Vector& v = model.weights();
    worst_res = std::max(worst_res, (v.array() * (t * v).array() - 1.0).abs().maxCoeff());
    const Matrix p = v.asDiagonal() * t * v.asDiagonal();
    worst_row = std::max(worst_row, (p.rowwise().sum().array() - 1.0).abs().maxCoeff());
    if (m <= 8) {
      ++n_oracle;
      worst_oracle = std::max(worst_oracle, (v - oracle::sinkhorn_newton(t)).cwiseAbs().maxCoeff());
    }
  }
  const double secs = sw.seconds();
  const bool pass = worst_res <= 1e-10 && worst_row <= 1e-8 && worst_oracle <= 1e-8 && secs < 60.0;
  return {pass, fmt("max residual %.2e, max |P1-1| %.2e, max |v-v_newton| %.2e over %d small sets, %.1f s",
                    worst_res, worst_row, worst_oracle, n_oracle, secs)};
}

Verdict split_stability() {
  Stopwatch sw;
  const TrainingSet ts = gaussian_ring(2000, 0.06, 0.6, derive_seed(kSeed, "stability"));
  const BoundingBox box = BoundingBox::of(ts);
  std::size_t bad_values = 0, outside = 0, total = 0;
  std::string per_eps;
  for (double eps : {1e-4, 1e-2, 1.0, 100.0}) {
    const BridgeModel model = sinkhorn_fit(ts, KernelSpec::fixed(ts, eps));
    for (Scheme scheme : {Scheme::UnawareSplit, Scheme::AwareSplit}) {
      SamplerConfig cfg;
      cfg.scheme = scheme;
      cfg.n_steps = 100'000;
      cfg.burn_in = 0;
      cfg.thin = 1;
      cfg.seed = derive_seed(kSeed, std::string("stability-") + std::string(scheme_name(scheme)));
      const ChainOutput out = run_chain(model, cfg);
      for (Eigen::Index i = 0; i < out.samples.cols(); ++i) {
        const Vector x = out.samples.col(i);
        if (!x.allFinite()) ++bad_values;
        if (!box.contains(x)) ++outside;
        ++total;
      }
    }
    per_eps += fmt(" %g", eps);
  }
  const double secs = sw.seconds();
  const bool pass = bad_values == 0 && outside == 0 && secs < 300.0;
  return {pass, fmt("%zu kept samples over eps {%s} x 2 schemes: %zu non-finite, %zu outside box, %.1f s", total,
                    per_eps.c_str() + 1, bad_values, outside, secs)};
}

Verdict score_identity() {
  std::mt19937_64 gen(777);
  std::uniform_real_distribution<double> eps_dist(0.05, 1.0);
  double worst = 0.0;
  for (int set = 0; set < 5; ++set) {
    const int d = 1 + set % 3;
    const TrainingSet ts(oracle::random_matrix(d, 150, gen));
    const double eps = eps_dist(gen);
    const BridgeModel model = sinkhorn_fit(ts, KernelSpec::fixed(ts, eps));
    for (int q = 0; q < 100; ++q) {
      const Vector x = oracle::random_matrix(d, 1, gen, 1.2);
      Vector fd(d);
      for (int k = 0; k < d; ++k) {
        const double h = 1e-4;
        Vector xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        fd[k] = (model.log_density_proxy(xp) - model.log_density_proxy(xm)) / (2.0 * h);
      }
      const Vector s = (model.conditional_mean(x) - x) / eps;
      worst = std::max(worst, (s - fd).norm() / std::max(s.norm(), 1e-300));
    }
  }
  return {worst <= 1e-5, fmt("max relative error %.2e over 500 points on 5 datasets", worst)};
}

Verdict denoising() {
  Stopwatch sw;
  const json s = preset("example-2d");
  const double s1 = s["generated"]["std"][0], s2 = s["generated"]["std"][1];
  const double secs = sw.seconds();
  const bool pass = s1 >= 0.9 && s1 <= 1.1 && s2 < 0.01 && secs < 120.0;
  return {pass, fmt("x1 std %.4f (target [0.9, 1.1]), x2 std %.2e (target < 0.01), %.1f s", s1, s2, secs)};
}

Verdict ring() {
  Stopwatch sw;
  const json s = preset("ring");
  const auto& runs = s["runs"];
  const double aware = runs["aware-split"]["half_steps"]["radius_std"];
  const double unaware = runs["unaware-split"]["half_steps"]["radius_std"];
  const double aware_kept = runs["aware-split"]["radius_std"];
  const double unaware_kept = runs["unaware-split"]["radius_std"];
  const double secs = sw.seconds();
  const bool pass = std::abs(aware - 0.06) <= 0.3 * 0.06 && unaware > aware && secs < 300.0;
  return {pass, fmt("radial std of noisy half steps: aware %.4f (target 0.06 +-30%%), unaware %.4f; "
                    "projected samples: aware %.4f, unaware %.4f; %.1f s",
                    aware, unaware, aware_kept, unaware_kept, secs)};
}

Verdict variable_bandwidth() {
  Stopwatch sw;
  const json s = preset("semisphere-3");
  const double fixed = s["fixed_ot_distance"];
  const double best = s["best_variable"]["ot_distance"], beta = s["best_variable"]["beta"];
  const double secs = sw.seconds();
  const bool pass = s["variable_not_worse"].get<bool>() && secs < 900.0;
  return {pass, fmt("OT at beta=0 %.5f, best beta<0 is %g with OT %.5f, %.1f s", fixed, beta, best, secs)};
}

std::string modes_text(const json& modes) {
  std::string out;
  for (const auto& m : modes) out += fmt("%s%.3f", out.empty() ? "" : " ", m.get<double>());
  return "[" + out + "]";
}

Verdict subgrid() {
  // The cached series is generated first so the preset timing excludes it.
  Stopwatch data_sw;
  for (const char* name : {"subgrid-additive", "subgrid-multiplicative"})
    prepare_experiment_data(name, preset_options(g_work / name));
  const double data_secs = data_sw.seconds();

  Stopwatch sa;
  const json add = preset("subgrid-additive");
  const double add_secs = sa.seconds();
  Stopwatch sm;
  const json mul = preset("subgrid-multiplicative");
  const double mul_secs = sm.seconds();

  const auto& am = add["surrogate"]["modes"];
  bool bimodal = am.size() == 2;
  if (bimodal) {
    const double a = am[0], b = am[1];
    bimodal = a < 0.0 && b > 0.0 && std::abs(a) >= 0.7 && std::abs(a) <= 1.2 && std::abs(b) >= 0.7 &&
              std::abs(b) <= 1.2;
  }
  const bool unimodal = mul["surrogate"]["modes"].size() == 1;
  const double psi_mean = add["closure"]["psi_mean"], psi_se = add["closure"]["psi_standard_error"];
  const bool psi_ok = std::abs(psi_mean) <= 3.0 * psi_se;
  const bool pass = bimodal && unimodal && psi_ok && add_secs < 1200.0 && mul_secs < 1200.0;
  return {pass, fmt("additive surrogate modes %s (raw %s), multiplicative surrogate modes %s (raw %s); "
                    "full-system modes %s / %s; closure psi mean %.2e (3 s.e. %.2e), multiplicative %.2e; "
                    "data generation %.0f s, surrogate runs %.0f s / %.0f s",
                    modes_text(am).c_str(), modes_text(add["surrogate"]["raw_modes"]).c_str(),
                    modes_text(mul["surrogate"]["modes"]).c_str(),
                    modes_text(mul["surrogate"]["raw_modes"]).c_str(),
                    modes_text(add["full_system"]["modes"]).c_str(),
                    modes_text(mul["full_system"]["modes"]).c_str(), psi_mean, 3.0 * psi_se,
                    mul["closure"]["psi_mean"].get<double>(), data_secs,
                    add_secs, mul_secs)};
}

Verdict trajectory() {
  Stopwatch sw;
  const json s = preset("l63-generate");
  bool ok = true;
  std::string detail;
  for (int k = 0; k < 3; ++k) {
    const double tm = s["training"]["mean"][k], ts = s["training"]["std"][k];
    const double gm = s["generated"]["mean"][k], gs = s["generated"]["std"][k];
    // Mean tolerance relative to the spread: y1 and y2 have means near zero.
    const double mean_tol = 0.15 * std::max(std::abs(tm), ts);
    ok = ok && std::abs(gm - tm) <= mean_tol && std::abs(gs - ts) <= 0.15 * ts;
    detail += fmt("y%d mean %.3f vs %.3f, std %.3f vs %.3f; ", k + 1, gm, tm, gs, ts);
  }
  const double in_box = s["generated"]["in_box_fraction"];
  const double secs = sw.seconds();
  const bool pass = ok && in_box == 1.0 && secs < 600.0;
  return {pass, detail + fmt("in-box fraction %.4f, y3 histogram L1 %.3f, %.1f s", in_box,
                             s["y3_histogram_l1"].get<double>(), secs)};
}

Verdict ergodicity() {
  const TrainingSet ts = singular_gaussian_2d(1000, 1e-4, derive_seed(kSeed, "ergodicity"));
  const BridgeModel model = sinkhorn_fit(ts, KernelSpec::fixed(ts, 0.1));
  Eigen::Index lo = 0, hi = 0;
  ts.data().row(0).minCoeff(&lo);
  ts.data().row(0).maxCoeff(&hi);
  Vector x1[2];
  int c = 0;
  for (Eigen::Index start : {lo, hi}) {
    SamplerConfig cfg;
    cfg.scheme = Scheme::UnawareSplit;
    cfg.n_steps = 101'000;
    cfg.burn_in = 1'000;
    cfg.thin = 1;
    cfg.seed = derive_seed(kSeed, "ergodicity-chain-" + std::to_string(c));
    cfg.init = ts.sample(static_cast<std::size_t>(start));
    x1[c++] = run_chain(model, cfg).samples.row(0).transpose();
  }
  const double ks = ks_statistic(x1[0], x1[1]);
  return {ks <= 0.05, fmt("chains from x1 = %.3f and x1 = %.3f: KS distance %.4f (target <= 0.05)",
                          ts.data()(0, lo), ts.data()(0, hi), ks)};
}

Verdict determinism() {
  std::size_t same = 0;
  std::string mismatched;
  for (const auto& name : experiment_names()) {
    const fs::path first = g_work / name / "summary.json";
    if (!fs::exists(first)) run_experiment(name, preset_options(g_work / name));
    const fs::path again = g_work / "rerun" / name;
    run_experiment(name, preset_options(again));
    const std::string a = slurp(first), b = slurp(again / "summary.json");
    if (!a.empty() && a == b)
      ++same;
    else
      mismatched += " " + name;
  }
  const std::size_t n = experiment_names().size();
  return {same == n, fmt("%zu of %zu preset summaries bytewise identical on rerun%s%s", same, n,
                         mismatched.empty() ? "" : "; differing:", mismatched.c_str())};
}

const std::vector<std::pair<int, std::function<Verdict()>>> kCriteria{
    {1, sinkhorn_correctness}, {2, split_stability}, {3, score_identity}, {4, denoising},
    {5, ring},                 {6, variable_bandwidth}, {7, subgrid},    {8, trajectory},
    {9, ergodicity},           {10, determinism}};

bool run_one(int id, const std::function<Verdict()>& fn) {
  Verdict v;
  try {
    v = fn();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  std::cout << "criterion " << id << (v.pass ? " PASS: " : " FAIL: ") << v.detail << std::endl;
  return v.pass;
}

}  // namespace

int main(int argc, char** argv) {
  std::string which = "all";
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--work") == 0 && i + 1 < argc)
      g_work = argv[++i];
    else
      which = argv[i];
  }
  fs::create_directories(g_work);
  bool ok = true;
  bool found = false;
  for (const auto& [id, fn] : kCriteria) {
    if (which != "all" && which != std::to_string(id)) continue;
    found = true;
    ok = run_one(id, fn) && ok;
  }
  if (!found) {
    std::cerr << "usage: acceptance [1-10|all] [--work DIR]\n";
    return 2;
  }
  return ok ? 0 : 1;
}
