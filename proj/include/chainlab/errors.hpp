#pragma once

#include <stdexcept>
#include <string>

namespace chainlab {

// Invalid user-supplied parameters (bad support bounds, negative step, ...).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A constructed object violates a stated invariant (e.g. initial data whose
// energy maximum is not at the origin).
struct ValidationError : std::runtime_error {
  ValidationError(const std::string& what, long site)
      : std::runtime_error(what), site(site) {}
  long site;
};

struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Energy drift beyond tolerance during time stepping.
struct IntegrationFailure : std::runtime_error {
  IntegrationFailure(const std::string& what, double drift, double suggested_step)
      : std::runtime_error(what), drift(drift), suggested_step(suggested_step) {}
  double drift;
  double suggested_step;
};

// A recorded observable broke one of its guaranteed relations.
struct InvariantViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A monomial of the kernel set S carries a non-negligible coefficient, so the
// homological equation has no solution.
struct KernelObstruction : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Combinatorial enumeration would exceed the configured budget.
struct BudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace chainlab
