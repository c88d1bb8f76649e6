#include "sbridge/training_set.hpp"

#include "binary_io.hpp"
#include "sbridge/csv.hpp"

#include <fstream>

namespace sbridge {

TrainingSet::TrainingSet(Matrix data) : data_(std::move(data)) {
  if (data_.rows() < 1 || data_.cols() < 1)
    throw InvalidArgument("training set needs d >= 1 and M >= 1");
  if (!data_.allFinite()) throw InvalidArgument("training set contains non-finite entries");
}

TrainingSet TrainingSet::from_csv(const std::filesystem::path& path, bool header) {
  return TrainingSet(csv::read_rows(path, header).transpose());
}

void TrainingSet::to_csv(const std::filesystem::path& path) const { csv::write_columns(path, data_); }

TrainingSet TrainingSet::from_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "SBTS")
    throw InvalidArgument(path.string() + ": not an SBTS training set");
  const auto d = detail::get<std::uint16_t>(in, "dimension");
  detail::get<std::uint16_t>(in, "reserved");
  if (d == 0) throw InvalidArgument(path.string() + ": zero dimension");
  in.seekg(0, std::ios::end);
  const auto payload = static_cast<std::size_t>(in.tellg()) - 8;
  if (payload % (sizeof(double) * d) != 0)
    throw InvalidArgument(path.string() + ": payload is not a whole number of samples");
  const std::size_t m = payload / (sizeof(double) * d);
  in.seekg(8);
  Matrix data(d, static_cast<Eigen::Index>(m));
  detail::get_doubles(in, data.data(), data.size(), "samples");
  return TrainingSet(std::move(data));
}

void TrainingSet::to_binary(const std::filesystem::path& path) const {
  if (dim() > 0xFFFF) throw InvalidArgument("SBTS supports at most 65535 dimensions");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out.write("SBTS", 4);
  detail::put<std::uint16_t>(out, static_cast<std::uint16_t>(dim()));
  detail::put<std::uint16_t>(out, 0);
  detail::put_doubles(out, data_.data(), static_cast<std::size_t>(data_.size()));
}

TrainingSet TrainingSet::load(const std::filesystem::path& path, bool header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() == 4 && std::string(magic, 4) == "SBTS") return from_binary(path);
  return from_csv(path, header);
}

}  // namespace sbridge
