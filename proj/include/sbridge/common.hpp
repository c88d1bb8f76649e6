#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sbridge {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Base for every error raised by the library. The CLI maps subclasses to
// exit codes: InvalidArgument/ConvergenceError -> 2, anything else -> 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class IndexError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual, int iterations)
      : Error(what), residual_(residual), iterations_(iterations) {}

  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

class InternalError : public Error {
 public:
  using Error::Error;
};

// Worker count for parallel loops; honours SB_THREADS when set.
int thread_count();

}  // namespace sbridge
