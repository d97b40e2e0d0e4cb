#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace anderson {

struct EmptyLattice : std::runtime_error {
  explicit EmptyLattice(const std::string& msg) : std::runtime_error(msg) {}
};

struct UnsupportedDomain : std::runtime_error {
  explicit UnsupportedDomain(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyWindow : std::runtime_error {
  explicit EmptyWindow(const std::string& msg) : std::runtime_error(msg) {}
};

struct NoConvergence : std::runtime_error {
  NoConvergence(const std::string& msg, std::vector<double> residuals)
      : std::runtime_error(msg), best_residuals(std::move(residuals)) {}
  std::vector<double> best_residuals;
};

struct DegenerateEigenvalue : std::runtime_error {
  explicit DegenerateEigenvalue(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegeneracyOnPath : std::runtime_error {
  explicit DegeneracyOnPath(const std::string& msg) : std::runtime_error(msg) {}
};

struct TooLarge : std::runtime_error {
  explicit TooLarge(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace anderson
