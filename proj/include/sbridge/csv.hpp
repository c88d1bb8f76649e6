#pragma once

#include "sbridge/common.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sbridge::csv {

// Shortest decimal string that round-trips to the same double.
std::string format_double(double value);

// Parses rows of comma-separated reals. Returns an N x k matrix (row = record).
Matrix read_rows(std::istream& in, bool header = false);
Matrix read_rows(const std::filesystem::path& path, bool header = false);

struct WriteOptions {
  std::vector<std::string> columns;  // header line; omitted when empty
  std::optional<double> time_step;   // prepend a t = k * time_step column
  double time_origin = 0.0;
};

// Writes `samples` (k x N, column = record) as N rows of k fields.
void write_columns(std::ostream& out, const Matrix& samples, const WriteOptions& options = {});
void write_columns(const std::filesystem::path& path, const Matrix& samples,
                   const WriteOptions& options = {});

}  // namespace sbridge::csv
