#pragma once

// Shared generators for the unit and acceptance suites.

#include <algorithm>
#include <cmath>

#include "chainlab/generators.hpp"

namespace chainlab::testing {

using namespace chainlab::gen;

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace chainlab::testing
