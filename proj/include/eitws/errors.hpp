#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace eitws {

// Base error carrying the pipeline stage that raised it.
class Error : public std::runtime_error {
 public:
  Error(std::string stage, const std::string& message)
      : std::runtime_error(stage + ": " + message), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

// Violated precondition or invalid input data.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Iterative solver failed to converge or hit a singular system.
class SolverError : public Error {
 public:
  SolverError(std::string stage, const std::string& message, std::vector<double> residual_history = {})
      : Error(std::move(stage), message), residual_history_(std::move(residual_history)) {}

  const std::vector<double>& residual_history() const noexcept { return residual_history_; }

 private:
  std::vector<double> residual_history_;
};

// Reconstruction-stage failure (degenerate frame, failed fit, non-SPD result).
class ReconstructError : public Error {
 public:
  using Error::Error;
};

}  // namespace eitws
