#pragma once

#include "sbridge/common.hpp"

#include <filesystem>

namespace sbridge {

// d x M matrix of training samples; column i is sample x^(i).
class TrainingSet {
 public:
  explicit TrainingSet(Matrix data);

  std::size_t dim() const { return static_cast<std::size_t>(data_.rows()); }
  std::size_t count() const { return static_cast<std::size_t>(data_.cols()); }
  const Matrix& data() const { return data_; }
  auto sample(std::size_t i) const { return data_.col(static_cast<Eigen::Index>(i)); }

  // Per-coordinate bounding box of the samples.
  Vector lower() const { return data_.rowwise().minCoeff(); }
  Vector upper() const { return data_.rowwise().maxCoeff(); }

  // One sample per row, d columns. `header` skips the first line.
  static TrainingSet from_csv(const std::filesystem::path& path, bool header = false);
  void to_csv(const std::filesystem::path& path) const;

  // "SBTS" magic, u16 d, u16 reserved, then column-major float64 LE payload.
  static TrainingSet from_binary(const std::filesystem::path& path);
  void to_binary(const std::filesystem::path& path) const;

  // Dispatches on the leading magic bytes.
  static TrainingSet load(const std::filesystem::path& path, bool header = false);

 private:
  Matrix data_;
};

}  // namespace sbridge
