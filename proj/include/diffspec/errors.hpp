#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace diffspec {

// Raised when a config file fails validation. Collects every issue so the
// CLI can report them all at once (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> issues)
      : std::runtime_error(join(issues)), issues_(std::move(issues)) {}
  explicit ConfigError(const std::string& issue)
      : ConfigError(std::vector<std::string>{issue}) {}
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s = "config error";
    for (const auto& e : v) {
      s += "\n  - ";
      s += e;
    }
    return s;
  }
  std::vector<std::string> issues_;
};

// Non-finite values or other numeric breakdown (exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Backward integration hit a non-finite score; carries the step index.
class IntegrationError : public NumericalError {
 public:
  IntegrationError(std::size_t step, const std::string& what)
      : NumericalError(what + " (step " + std::to_string(step) + ")"),
        step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

// Root bracketing failures (exit code 4).
class BracketingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A component pair with no transition to solve for.
class DegeneratePairError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Iterative scheme did not converge; carries the diagnostic metric.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(double metric, const std::string& what)
      : std::runtime_error(what + " (metric " + std::to_string(metric) + ")"),
        metric_(metric) {}
  double metric() const { return metric_; }

 private:
  double metric_;
};

}  // namespace diffspec
