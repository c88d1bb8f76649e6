#pragma once

#include "sbridge/common.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sbridge {

struct ExperimentOptions {
  std::uint64_t seed = 0;
  // Artifacts and summary.json go here; nothing is written when empty.
  std::filesystem::path out_dir;
  // Reuses generated multiscale series across runs; disabled when empty.
  std::filesystem::path cache_dir;
  // Training and reference sizes used in the original study instead of the desk-scale defaults.
  bool full_scale = false;
  std::optional<std::size_t> reference_size;
};

std::vector<std::string> experiment_names();

// Runs a preset end to end and returns its summary. The summary holds no
// timings or paths, so equal seeds give identical bytes.
nlohmann::ordered_json run_experiment(const std::string& name, const ExperimentOptions& options);

// Fills cache_dir with the preset's generated series, if it has any.
void prepare_experiment_data(const std::string& name, const ExperimentOptions& options);

// Serialized form written to summary.json.
std::string summary_text(const nlohmann::ordered_json& summary);

}  // namespace sbridge
