#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mide {

/// Bad input data or configuration (maps to CLI exit code 1).
class input_error : public std::runtime_error {
 public:
  explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure inside an algorithm.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Thrown when an optimizer run produces a non-finite objective.
/// Carries the objective trace up to the failure point.
class fit_error : public numeric_error {
 public:
  fit_error(const std::string& msg, std::vector<double> trace)
      : numeric_error(msg), objective_trace(std::move(trace)) {}
  std::vector<double> objective_trace;
};

}  // namespace mide
