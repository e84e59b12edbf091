#pragma once

#include <stdexcept>
#include <string>

namespace cmdp {

// Exceptions carry a stable machine-readable code alongside the human message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

// Malformed or inconsistent model description.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Bad user-supplied parameter (probabilities, counts, flag values).
class InputError : public Error {
 public:
  using Error::Error;
};

// A table or kernel was used against a model of a different shape.
class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& message)
      : Error("DimensionMismatch", message) {}
};

// No feasible action exists at the designated start state and budget.
class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(const std::string& message)
      : Error("Infeasible", message) {}
};

// A rollout reached a (state, budget) cell the policy does not cover.
class PolicyUndefinedError : public Error {
 public:
  explicit PolicyUndefinedError(const std::string& message)
      : Error("PolicyUndefined", message) {}
};

}  // namespace cmdp
