// SBMD layout (little endian):
//   char[4] "SBMD" | u16 version | u16 mode | u32 d | u64 M | f64 epsilon |
//   f64 beta | f64 Z | f64 kde bandwidth | u32 metric | u32 reserved |
//   f64 v[M] | f64 data[d*M] (column-major) | f64 rho[M]
#include "sbridge/bridge.hpp"

#include "binary_io.hpp"

#include <json.hpp>

#include <fstream>

namespace sbridge {

namespace {

constexpr std::uint16_t kModelVersion = 1;

const char* mode_name(BandwidthMode mode) {
  return mode == BandwidthMode::Fixed ? "fixed" : "variable";
}

}  // namespace

void BridgeModel::save(const std::filesystem::path& path, const SinkhornOptions& options) const {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    out.write("SBMD", 4);
    detail::put<std::uint16_t>(out, kModelVersion);
    detail::put<std::uint16_t>(out, spec_.mode == BandwidthMode::Fixed ? 0 : 1);
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(dim()));
    detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(count()));
    detail::put<double>(out, spec_.epsilon);
    detail::put<double>(out, spec_.beta);
    detail::put<double>(out, spec_.z_norm);
    detail::put<double>(out, spec_.density ? spec_.density->bandwidth() : 0.0);
    detail::put<std::uint32_t>(out, spec_.metric == Metric::Identity ? 0 : 1);
    detail::put<std::uint32_t>(out, 0);
    detail::put_doubles(out, v_.data(), count());
    detail::put_doubles(out, training_.data().data(), dim() * count());
    detail::put_doubles(out, spec_.rho.data(), count());
    if (!out) throw InvalidArgument("failed writing " + path.string());
  }
  nlohmann::ordered_json meta;
  meta["format"] = "SBMD";
  meta["version"] = kModelVersion;
  meta["dim"] = dim();
  meta["count"] = count();
  meta["epsilon"] = spec_.epsilon;
  meta["mode"] = mode_name(spec_.mode);
  meta["beta"] = spec_.beta;
  meta["z_norm"] = spec_.z_norm;
  meta["metric"] = spec_.metric == Metric::Identity ? "identity" : "empirical_covariance";
  meta["residual"] = residual_;
  meta["iterations"] = iterations_;
  meta["tolerance"] = options.tol;
  meta["max_iter"] = options.max_iter;
  std::ofstream side(path.string() + ".json");
  side << meta.dump(2) << '\n';
}

BridgeModel BridgeModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "SBMD")
    throw InvalidArgument(path.string() + ": not an SBMD model file");
  const auto version = detail::get<std::uint16_t>(in, "version");
  if (version != kModelVersion)
    throw InvalidArgument(path.string() + ": unsupported model version " + std::to_string(version));
  const auto mode = detail::get<std::uint16_t>(in, "mode");
  const auto d = detail::get<std::uint32_t>(in, "dimension");
  const auto m = detail::get<std::uint64_t>(in, "count");
  KernelSpec spec;
  spec.epsilon = detail::get<double>(in, "epsilon");
  spec.beta = detail::get<double>(in, "beta");
  spec.z_norm = detail::get<double>(in, "z_norm");
  const double kde_bandwidth = detail::get<double>(in, "kde bandwidth");
  const auto metric = detail::get<std::uint32_t>(in, "metric");
  detail::get<std::uint32_t>(in, "reserved");
  if (mode > 1 || metric > 1 || d == 0 || m == 0)
    throw InvalidArgument(path.string() + ": corrupt model header");

  Vector v(static_cast<Eigen::Index>(m));
  detail::get_doubles(in, v.data(), m, "weights");
  Matrix data(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(m));
  detail::get_doubles(in, data.data(), d * m, "training data");
  spec.rho.resize(static_cast<Eigen::Index>(m));
  detail::get_doubles(in, spec.rho.data(), m, "bandwidth profile");

  TrainingSet ts(std::move(data));
  spec.mode = mode == 0 ? BandwidthMode::Fixed : BandwidthMode::Variable;
  if (spec.mode == BandwidthMode::Variable)
    spec.density = std::make_shared<const DensityEstimate>(ts.data(), kde_bandwidth);
  spec.metric = metric == 0 ? Metric::Identity : Metric::EmpiricalCovariance;
  if (spec.metric == Metric::EmpiricalCovariance) spec.metric_matrix = empirical_covariance(ts);

  double residual = 0.0;
  int iterations = 0;
  std::ifstream side(path.string() + ".json");
  if (side) {
    const auto meta = nlohmann::json::parse(side, nullptr, false);
    if (!meta.is_discarded()) {
      residual = meta.value("residual", 0.0);
      iterations = meta.value("iterations", 0);
    }
  }
  return BridgeModel(std::move(ts), std::move(spec), std::move(v), residual, iterations);
}

}  // namespace sbridge
