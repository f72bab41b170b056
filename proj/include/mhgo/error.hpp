#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mhgo {

enum class ErrorKind {
  invalid_dimension,
  invalid_parameter,
  invalid_input,
  no_solution,
  conditioning,
  numerical,
  divergence,
  degenerate_simplex,
  empty_interval,
  undefined,
  invalid_comparison,
  parse,
  validation,
  io,
};

constexpr std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_dimension: return "invalid-dimension";
    case ErrorKind::invalid_parameter: return "invalid-parameter";
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::no_solution: return "no-solution";
    case ErrorKind::conditioning: return "conditioning";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::degenerate_simplex: return "degenerate-simplex";
    case ErrorKind::empty_interval: return "empty-interval";
    case ErrorKind::undefined: return "undefined";
    case ErrorKind::invalid_comparison: return "invalid-comparison";
    case ErrorKind::parse: return "parse";
    case ErrorKind::validation: return "validation";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised when an integrated state stops being finite.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(double t)
      : Error(ErrorKind::divergence, "non-finite state at t=" + std::to_string(t)), time_(t) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace mhgo
