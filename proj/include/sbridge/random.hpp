#pragma once

#include "sbridge/common.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>

namespace sbridge {

// Seeded generator with Box-Muller normals (no rejection), so draws are
// reproducible across runs and platforms for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent stream named `name` under a root seed.
  static Rng stream(std::uint64_t root_seed, std::string_view name);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1).
  double uniform();
  double normal();
  Vector normal_vector(std::size_t n);
  // Uniform index in [0, n).
  std::size_t index(std::size_t n);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

std::uint64_t derive_seed(std::uint64_t root_seed, std::string_view name);

}  // namespace sbridge
