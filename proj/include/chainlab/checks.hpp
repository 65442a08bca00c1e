#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "chainlab/lattice.hpp"
#include "chainlab/polynomial.hpp"
#include "json.hpp"

namespace chainlab {

// The invariant suite behind `chainlab verify` and the acceptance binary. Each
// check runs at pinned seeds and returns its observed worst case next to the
// tolerance it was held to.

struct CheckVerdict {
  std::string name;
  bool passed = false;
  double observed = 0.0;
  double tolerance = 0.0;
  nlohmann::json detail = nlohmann::json::object();
};
nlohmann::json to_json(const CheckVerdict& v);

using BracketFn = std::function<Polynomial(const Polynomial&, const Polynomial&)>;
// poisson_bracket without pruning.
BracketFn default_bracket();
// Flips the sign of every output coefficient whose lowest site is odd. Keeps
// antisymmetry, breaks Jacobi and Leibniz.
BracketFn corrupted_bracket();

// Antisymmetry, Leibniz and Jacobi on `triples` random degree <= 4 triples;
// worst residual relative to the product of the input coefficient scales.
std::vector<CheckVerdict> check_bracket_calculus(const BracketFn& bracket, int triples,
                                                 std::uint64_t seed);
// Symbolic bracket vs central differences in (q, p), step 1e-5.
CheckVerdict check_bracket_fd(const BracketFn& bracket, int states, std::uint64_t seed);
// {H_har, m} = i Delta(m) m, zero on S.
CheckVerdict check_spectral(const BracketFn& bracket, int monomials, std::uint64_t seed);
// Real-coefficient polynomials, H_an and j_x evaluate to reals at KG points.
CheckVerdict check_reality(int states, std::uint64_t seed);
// m in S iff Delta(m) = 0, one disorder draw per monomial.
CheckVerdict check_s_equivalence(int draws, std::uint64_t seed);
// current(x) against the evaluated bracket {H_{x-1}, H_x}, both models.
CheckVerdict check_current_oracle(int states, std::uint64_t seed);

// j + {H, u} - g on KG for every (x, n, seed), relative to max|j|. `detail`
// carries the worst residual per x and per n.
CheckVerdict check_decomposition(const std::vector<long>& xs, const std::vector<int>& ns,
                                 const std::vector<std::uint64_t>& seeds, double g, int workers);
// {H_har, u^(i)} = -f^(i) and {H_an, u^(i)} = f^(i+1), relative to max|f^(i)|.
CheckVerdict check_scheme_identities(const std::vector<std::uint64_t>& seeds, int n);
// Degree 2(i+1), f^(i) P-skew, u^(i) P-sym, support inside [x-i, x+i-1].
CheckVerdict check_ladder(const std::vector<long>& xs, int n,
                          const std::vector<std::uint64_t>& seeds);
// Explicit contraction sum vs recursion for f^(2), f^(3), relative per order.
CheckVerdict check_explicit(const std::vector<long>& xs, const std::vector<std::uint64_t>& seeds,
                            int workers);
// Fitted C in count_i <= exp(C i ln(i+1)); passes when finite and positive.
CheckVerdict check_term_counts(std::uint64_t seed, int n);

// Relative energy drift max over E0 values, one run per E0 on the default
// scheme for the model; DNLS also yields a norm verdict.
std::vector<CheckVerdict> check_conservation(ModelKind kind, const std::vector<double>& E0s,
                                             double T, double energy_tol, double norm_tol,
                                             std::uint64_t seed, int workers);
// Verlet drift at h over drift at h/2; passes within 4 +- 20%.
CheckVerdict check_verlet_order(double h, double T, std::uint64_t seed);
// Continuity residual / (h^2 scale) over probes split evenly across both models.
CheckVerdict check_continuity(int probes, std::uint64_t seed);
// Sandwich inequality and the current bound at every sample of short runs.
CheckVerdict check_trajectory_invariants(const std::vector<std::uint64_t>& seeds, double T);

// Locality, monotonicity in delta and n, and agreement with the expansion.
std::vector<CheckVerdict> check_resonance_properties(const std::vector<std::uint64_t>& seeds);

// Ratio spread allowed across the delta grid, beyond the confidence bounds.
inline constexpr double kDivisorRatioSpread = 2.0;
// P(|Delta| <= delta)/delta for each pattern: passes when the largest lower
// confidence bound of the ratio is within kDivisorRatioSpread of the smallest upper
// one. The second verdict compares the (0,1;+,-) ratio at the smallest delta
// with 2 * density of omega_0 - omega_1 at 0.
std::vector<CheckVerdict> check_divisor_density(const std::vector<Monomial>& patterns,
                                       const std::vector<double>& grid, long samples,
                                       std::uint64_t seed, int workers);
// R^2 of the log-tail fit over all lengths (a length with no hits fails).
CheckVerdict check_interval_tail(int n, double delta, const std::vector<long>& lengths,
                                 long samples, std::uint64_t seed, double min_r2, int workers);

// Levels E0 2^{-k/4}, k = 1..kStoppingLevels; t_eps is taken with eps' = 2 eps.
inline constexpr int kStoppingLevels = 40;
std::vector<double> stopping_levels(double E0);
// min over crossed levels of t_eps * eps; +inf when no level is crossed.
double stopping_constant(const std::vector<double>& t, const std::vector<double>& M, double E0);
// min over samples with t >= 1 of M(t) / eps(t).
double threshold_margin(const std::vector<double>& t, const std::vector<double>& M);

// Minimum over seeds of the stopping constant must be at least this fraction of
// the median.
inline constexpr double kStoppingSeedSpread = 0.1;
// Light cone growth T -> 2T, stopping constant min_eps t_eps eps per seed, and
// the threshold margin min M(t)/eps(t) over t >= 1.
std::vector<CheckVerdict> check_desk_monitors(const std::vector<std::uint64_t>& seeds, double g,
                                              double E0, double T, int workers);

CheckVerdict check_schedule_arithmetic();

struct VerifyOptions {
  BracketFn bracket = default_bracket();
  int workers = 0;
};
// The whole suite at verification sizes; every entry is named.
std::vector<CheckVerdict> run_verify_suite(const VerifyOptions& opts);

}  // namespace chainlab
