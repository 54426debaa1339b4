#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace abjm {

// Raised when a functional evaluation sees a linear-combination exponent
// beyond the overflow guard (|v_i| > 700); the iterate is unusable.
class DivergedIterateError : public std::runtime_error {
 public:
  explicit DivergedIterateError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a minimizer exhausts its iteration budget. Carries the
// residual history and, for periodic solves, the per-iteration species
// means of v (the quantity that drifts when the problem sits at the
// existence threshold).
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what,
                      std::vector<double> residual_history,
                      std::vector<std::vector<double>> mean_trajectory = {})
      : std::runtime_error(what),
        residual_history(std::move(residual_history)),
        mean_trajectory(std::move(mean_trajectory)) {}

  std::vector<double> residual_history;
  std::vector<std::vector<double>> mean_trajectory;
};

// Cholesky pivot guard; cannot trigger for matrices of the R(a, m) family.
class NotPositiveDefiniteError : public std::runtime_error {
 public:
  explicit NotPositiveDefiniteError(const std::string& what) : std::runtime_error(what) {}
};

// Total magnetic flux is only finite over a periodic cell.
class FluxDivergenceError : public std::logic_error {
 public:
  explicit FluxDivergenceError(const std::string& what) : std::logic_error(what) {}
};

// Malformed or inconsistent run configuration; the message names the field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace abjm
