#include "sbridge/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace sbridge::csv {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

double parse_field(std::string_view field, std::size_t line_no) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw InvalidArgument("csv: line " + std::to_string(line_no) + ": cannot parse '" +
                          std::string(field) + "' as a real number");
  }
  return value;
}

}  // namespace

Matrix read_rows(std::istream& in, bool header) {
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (header && line_no == 1) continue;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    std::size_t fields = 0;
    while (true) {
      const auto comma = view.find(',');
      values.push_back(parse_field(view.substr(0, comma), line_no));
      ++fields;
      if (comma == std::string_view::npos) break;
      view.remove_prefix(comma + 1);
    }
    if (rows == 0) {
      cols = fields;
    } else if (fields != cols) {
      throw InvalidArgument("csv: line " + std::to_string(line_no) + " has " +
                            std::to_string(fields) + " fields, expected " + std::to_string(cols));
    }
    ++rows;
  }
  Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r * cols + c];
  return out;
}

Matrix read_rows(const std::filesystem::path& path, bool header) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("csv: cannot open " + path.string());
  return read_rows(in, header);
}

void write_columns(std::ostream& out, const Matrix& samples, const WriteOptions& options) {
  if (!options.columns.empty()) {
    for (std::size_t i = 0; i < options.columns.size(); ++i) {
      if (i) out << ',';
      out << options.columns[i];
    }
    out << '\n';
  }
  std::string row;
  for (Eigen::Index n = 0; n < samples.cols(); ++n) {
    row.clear();
    if (options.time_step) {
      row += format_double(options.time_origin + static_cast<double>(n) * *options.time_step);
      row += ',';
    }
    for (Eigen::Index k = 0; k < samples.rows(); ++k) {
      if (k) row += ',';
      row += format_double(samples(k, n));
    }
    row += '\n';
    out << row;
  }
}

void write_columns(const std::filesystem::path& path, const Matrix& samples,
                   const WriteOptions& options) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("csv: cannot write " + path.string());
  write_columns(out, samples, options);
}

}  // namespace sbridge::csv
