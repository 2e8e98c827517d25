#include "dynwalk/errors.hpp"

namespace dynwalk {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::InfeasibleDegree: return "InfeasibleDegree";
    case ErrorKind::RangeError: return "RangeError";
    case ErrorKind::GenerationTimeout: return "GenerationTimeout";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::CapExceeded: return "CapExceeded";
    case ErrorKind::SupportMismatch: return "SupportMismatch";
    case ErrorKind::HypothesisViolated: return "HypothesisViolated";
    case ErrorKind::PreconditionViolated: return "PreconditionViolated";
    case ErrorKind::NotAcyclic: return "NotAcyclic";
    case ErrorKind::InsufficientRecords: return "InsufficientRecords";
    case ErrorKind::DomainError: return "DomainError";
  }
  return "Error";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidConfig:
    case ErrorKind::ParseError:
      return 1;
    case ErrorKind::InfeasibleDegree:
    case ErrorKind::RangeError:
    case ErrorKind::DomainError:
    case ErrorKind::HypothesisViolated:
    case ErrorKind::PreconditionViolated:
    case ErrorKind::NotAcyclic:
      return 2;
    case ErrorKind::GenerationTimeout:
    case ErrorKind::BudgetExceeded:
    case ErrorKind::CapExceeded:
      return 3;
    case ErrorKind::SupportMismatch:
    case ErrorKind::InsufficientRecords:
      return 2;
  }
  return 1;
}

}  // namespace dynwalk
