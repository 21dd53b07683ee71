#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace mlvr {

using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Vector = VectorX<double>;

// All randomness in a run flows through engines of this type so that a seed
// fully determines the run.
using Rng = std::mt19937_64;

/// Subset draws (hierarchies, Hessian samples) and per-step index draws use
/// separate engines derived from the run seed, so methods that share one kind
/// of randomness stay in lockstep.
inline Rng sampling_rng(std::uint64_t seed) { return Rng(seed); }
inline Rng step_rng(std::uint64_t seed) { return Rng(seed ^ 0x9e3779b97f4a7c15ULL); }

inline Index uniform_index(Rng& rng, Index n) {
  std::uniform_int_distribution<Index> dist(0, n - 1);
  return dist(rng);
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Raised by conjugate gradient when <p, Ap> <= 0.
class BreakdownError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NotDescentError : public Error {
 public:
  using Error::Error;
};

class LineSearchError : public Error {
 public:
  LineSearchError(const std::string& what, double last_step)
      : Error(what), last_step_(last_step) {}
  /// Smallest step tried before giving up.
  double last_step() const { return last_step_; }

 private:
  double last_step_;
};

inline void check_dim(Index got, Index want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(want) +
                         ", got " + std::to_string(got));
  }
}

}  // namespace mlvr
