#pragma once

// Little-endian scalar I/O shared by the SBTS and SBMD formats.

#include "sbridge/common.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

namespace sbridge::detail {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.write(buf, sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& what) {
  char buf[sizeof(T)];
  if (!in.read(buf, sizeof(T))) throw InvalidArgument("truncated file while reading " + what);
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

inline void put_doubles(std::ostream& out, const double* data, std::size_t n) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
}

inline void get_doubles(std::istream& in, double* data, std::size_t n, const std::string& what) {
  if (!in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(double))))
    throw InvalidArgument("truncated file while reading " + what);
}

}  // namespace sbridge::detail
