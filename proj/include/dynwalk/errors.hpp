#pragma once

#include <stdexcept>
#include <string>

namespace dynwalk {

enum class ErrorKind {
  InvalidConfig,
  ParseError,
  InfeasibleDegree,
  RangeError,
  GenerationTimeout,
  BudgetExceeded,
  CapExceeded,
  SupportMismatch,
  HypothesisViolated,
  PreconditionViolated,
  NotAcyclic,
  InsufficientRecords,
  DomainError,
};

const char* error_kind_name(ErrorKind kind);

/// Base of every error thrown by the library. The kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Exit code contract of the runner: 1 invalid config, 2 infeasible, 3 budget.
int exit_code_for(ErrorKind kind);

}  // namespace dynwalk
