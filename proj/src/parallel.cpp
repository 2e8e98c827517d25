#include "dynwalk/parallel.hpp"

#include <cstdlib>
#include <string>

#include "dynwalk/errors.hpp"

namespace dynwalk {

namespace {

std::chrono::steady_clock::time_point& started() {
  static std::chrono::steady_clock::time_point t = std::chrono::steady_clock::now();
  return t;
}

}  // namespace

void RunBudget::start() { started() = std::chrono::steady_clock::now(); }

std::optional<double> RunBudget::limit_seconds() {
  const char* raw = std::getenv("DYNWALK_BUDGET_SECONDS");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(raw, &end);
  if (end == raw || *end != '\0' || !(v > 0)) {
    throw Error(ErrorKind::InvalidConfig, std::string("DYNWALK_BUDGET_SECONDS must be a positive number, got '") +
                                              raw + "'");
  }
  return v;
}

void RunBudget::check() {
  const auto limit = limit_seconds();
  if (!limit) return;
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started()).count();
  if (elapsed > *limit) {
    throw Error(ErrorKind::BudgetExceeded,
                "run exceeded DYNWALK_BUDGET_SECONDS=" + std::to_string(*limit) + " after " + std::to_string(elapsed) +
                    " s");
  }
}

}  // namespace dynwalk
