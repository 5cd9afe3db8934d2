#pragma once

#include <stdexcept>
#include <string>

namespace fraktur {

// Nonlinear solve did not reach its tolerance; carries the last residual.
class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, double residual)
      : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_ = 0.0;
};

// Line search in the outer optimization loop stalled.
class LineSearchFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A requested construction does not apply to the given solution
// (e.g. counterexamples on a state without crack growth).
class Inapplicable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed configuration input; line < 0 when not line-specific.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = -1)
      : std::runtime_error(line >= 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_ = -1;
};

}  // namespace fraktur
