#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "chainlab/lattice.hpp"
#include "chainlab/polynomial.hpp"

namespace chainlab {

// Net sign counts r_y at offsets y relative to the base site, sorted by y and
// with zeros removed; Delta = sum_y r_y omega_{x+y}.
struct NetPattern {
  std::vector<std::pair<int, int>> r;
  bool operator==(const NetPattern&) const = default;
  template <typename H>
  friend H AbslHashValue(H h, const NetPattern& p) {
    return H::combine(std::move(h), p.r);
  }
  double delta(long x, const DisorderRealization& d) const;
};

// Contracted monomials reachable at orders 1..n for the current at site 0:
// level 1 is every degree-4 monomial on {-1, 0} outside S; level i+1 contracts
// one leg of a level-i monomial with a leg of a bond term of H_an (all sites
// of the bond term within one bond) and drops results in S. Coefficients play
// no role, so this is the set indexed by the contractible tuples of X_i(x).
struct ContractibleSet {
  int n = 0;
  // Levels at or below exact_levels are complete; higher levels are sampled.
  int exact_levels = 0;
  std::vector<std::vector<Monomial>> levels;
  // Distinct net patterns over all levels.
  std::vector<NetPattern> patterns;
  // Hull of the offsets over all levels.
  Interval support;

  bool exact() const { return exact_levels >= n; }
};

inline constexpr int kExactContractibleLevels = 3;
inline constexpr int kMaxContractibleOrder = 5;

// Cached per n. n > kMaxContractibleOrder throws BudgetExceeded.
const ContractibleSet& contractible_set(int n);

// Builds the set without the cache; levels above exact_levels are sampled
// with `samples` random contraction paths seeded by `seed`.
ContractibleSet build_contractible_set(int n, int exact_levels, long samples, std::uint64_t seed);

// Shifts a relative monomial to site x.
Monomial shifted(const Monomial& m, long x);

// min |Delta| over all patterns of the set, at site x.
double min_abs_delta(long x, const ContractibleSet& set, const DisorderRealization& d);

}  // namespace chainlab
