#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "chainlab/dynamics.hpp"
#include "chainlab/lattice.hpp"
#include "chainlab/polynomial.hpp"
#include "json.hpp"

namespace chainlab {

// Relative threshold below which an S-coefficient of the source is treated as
// roundoff and projected out rather than reported as an obstruction.
inline constexpr double kHomologicalGuard = 1e-12;

struct HomologicalStats {
  double min_abs_delta = 0.0;  // over the monomials actually divided
  size_t divided = 0;
  size_t projected = 0;  // S-terms dropped under the guard
};

// U with {H_har, U} = -F, i.e. U(m) = i F(m) / Delta(m). Throws
// KernelObstruction if F has an S-component above the guard.
Polynomial solve_homological(const Polynomial& f, const DisorderRealization& d,
                             HomologicalStats* stats = nullptr);

// Order-n local decomposition j_x = -{H, u} + g.
struct ExpansionResult {
  long x = 0;
  int n = 0;
  std::vector<Polynomial> u_terms;  // u^(1..n)
  std::vector<Polynomial> f_terms;  // f^(1..n+1); f^(1) = j_x
  Polynomial u;
  Polynomial g;
  // Structural min |Delta| over contractible monomials of orders 1..n; the
  // same quantity the resonance scan uses.
  double min_abs_delta = 0.0;
  bool min_abs_delta_exact = true;
  // min |Delta| over the monomials the recursion divided by.
  double divided_min_abs_delta = 0.0;
  size_t projected_terms = 0;
  Interval support;  // of u
  Interval g_support;
};

// Recursive route: f^(i+1) = {H_an, u^(i)}, u^(i) solving {H_har, u^(i)} = -f^(i).
// Works for both models; the DNLS current has degree 4 and 6 parts, so its
// f^(i) are not homogeneous and the structural min |Delta| is KG-only.
ExpansionResult build_recursive(long x, int n, const DisorderRealization& d, const ModelSpec& m);

// {H_har + H_an, u} from the bracket kernel on a window covering u; used to
// check j + {H, u} - g = 0 independently of the recursion.
Polynomial h_bracket(const ExpansionResult& r, const DisorderRealization& d, const ModelSpec& m);

// Coefficient max-norm of j + {H, u} - g. Storing u^(i) = i F / Delta in
// double leaves a floor near 1e-16 max|f^(i)|, so both scales are reported.
struct IdentityResidual {
  double max_abs = 0.0;
  double j_scale = 0.0;     // max |coefficient| of j
  double term_scale = 0.0;  // max |coefficient| over f^(1..n+1)
  double relative_to_j() const { return max_abs / j_scale; }
  double relative_to_terms() const { return max_abs / term_scale; }
};
IdentityResidual identity_residual(const ExpansionResult& r, const DisorderRealization& d,
                                   const ModelSpec& m);

// A contraction: for blocks j = 2..i, the leg l(j) of block j is paired with
// the leg l'(j) of the earlier block k(j). Legs are 1-based as in the formula.
struct ContractionStep {
  int l = 0;
  int k = 0;
  int lp = 0;
  bool operator==(const ContractionStep&) const = default;
};
using Contraction = std::vector<ContractionStep>;

// All contractions of i blocks with pairwise distinct contracted legs.
std::vector<Contraction> enumerate_contractions(int i);

// Which leg sign multiplies a step of the explicit sum. NewLeg uses the sign
// of the contracted leg of the new block, PartnerLeg that of the earlier
// block's leg (always its negative), Literal the sign of leg number k(j) of
// block j.
enum class SignConvention { NewLeg, PartnerLeg, Literal };

inline constexpr int kExplicitMaxOrder = 3;

struct ExplicitTerms {
  Polynomial f;  // f^(i)
  Polynomial u;  // u^(i)
  size_t prefixes = 0;  // partial contracted tuples visited
};

// Explicit route: the sum over tuples in X_i(x) and contractions of
// J * prod V * prod sign / prod Delta, written out without the bracket kernel.
// i > kExplicitMaxOrder throws BudgetExceeded.
ExplicitTerms build_explicit(long x, int i, const DisorderRealization& d, const ModelSpec& m,
                             SignConvention conv = SignConvention::NewLeg);

struct DecompositionValues {
  double j = 0.0;
  double h_bracket_u = 0.0;
  double g = 0.0;
  double residual = 0.0;  // j + {H, u} - g
};

DecompositionValues evaluate_decomposition(const ExpansionResult& r, const Polynomial& h_bracket_u,
                                           const PhasePoint& a);

// u(t1) - u(t0) + int (j - g) dt along a sampled trajectory (Simpson's rule;
// needs an even number of intervals of width h).
struct IntegratedCheck {
  double du = 0.0;
  double int_j = 0.0;
  double int_g = 0.0;
  double residual = 0.0;
  double scale = 0.0;  // |u(t0)| + |u(t1)| + int |j| + int |g|
};

IntegratedCheck time_integrated_check(const std::vector<ChainState>& samples, double h,
                                      const ExpansionResult& r, const DisorderRealization& d);

// Term counts per order with C_i = ln(count_i) / (i ln(i + 1)); fitted C is the max.
struct TermCountFit {
  std::vector<size_t> counts;
  std::vector<double> c_i;
  double c = 0.0;
};
TermCountFit term_count_fit(const ExpansionResult& r);

nlohmann::json to_json(const ExpansionResult& r);

}  // namespace chainlab
