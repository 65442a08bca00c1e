#pragma once

#include <absl/container/flat_hash_map.h>

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chainlab/lattice.hpp"
#include "json.hpp"

namespace chainlab {

inline constexpr int kMaxDegree = 16;
inline constexpr long kMaxAbsSite = 16000;

// One factor a_x^sigma of a monomial.
struct Factor {
  long site = 0;
  int sign = 1;
  bool operator==(const Factor&) const = default;
};

// Product a_{x_1}^{s_1} ... a_{x_d}^{s_d}, stored as a sorted list of factor
// codes 2*site + (sign > 0). Sorting by code is the lexicographic
// (site, sign) order with - before +, and repeated factors are kept.
class Monomial {
 public:
  using Code = std::int16_t;

  Monomial() = default;
  Monomial(std::initializer_list<Factor> factors);
  explicit Monomial(std::span<const Factor> factors);

  static Code encode(long site, int sign);
  static Factor decode(Code c) {
    return {static_cast<long>(c >> 1), (c & 1) ? 1 : -1};
  }
  static Code flip(Code c) { return static_cast<Code>(c ^ 1); }
  // Builds from arbitrary-order codes.
  static Monomial from_codes(std::span<const Code> codes);

  int degree() const { return degree_; }
  Factor factor(int k) const { return decode(codes_[k]); }
  std::span<const Code> codes() const { return {codes_.data(), static_cast<size_t>(degree_)}; }
  long min_site() const { return decode(codes_[0]).site; }
  long max_site() const { return decode(codes_[degree_ - 1]).site; }
  std::vector<Factor> factors() const;

  Monomial operator*(const Monomial& o) const;
  // Drops the factor at position k.
  Monomial without(int k) const;
  // All signs reversed (the P operation on a single monomial).
  Monomial flipped() const;

  bool operator==(const Monomial& o) const {
    return degree_ == o.degree_ && codes_ == o.codes_;
  }
  // Canonical order: degree first, then codes lexicographically.
  bool operator<(const Monomial& o) const;

  template <typename H>
  friend H AbslHashValue(H h, const Monomial& m) {
    return H::combine_contiguous(std::move(h), m.codes_.data(), m.degree_);
  }

  std::string to_string() const;

  // Merge of a with one occurrence of a.codes()[skip_a] removed and b with
  // one occurrence of b.codes()[skip_b] removed; used by the bracket kernel.
  static Monomial contract(const Monomial& a, int skip_a, const Monomial& b, int skip_b);

 private:
  std::array<Code, kMaxDegree> codes_{};
  std::uint8_t degree_ = 0;
};

// Sparse polynomial in the normal coordinates with complex coefficients, one
// entry per canonical monomial.
class Polynomial {
 public:
  using Map = absl::flat_hash_map<Monomial, cplx>;
  using Term = std::pair<Monomial, cplx>;

  Polynomial() = default;
  static Polynomial monomial(const Monomial& m, cplx c = 1.0);
  // Constant-free linear form sum_k c_k a_{x_k}^{s_k}.
  static Polynomial linear(std::initializer_list<std::pair<Factor, cplx>> terms);

  void add(const Monomial& m, cplx c);
  cplx coeff(const Monomial& m) const;
  bool empty() const { return terms_.empty(); }
  size_t size() const { return terms_.size(); }
  const Map& terms() const { return terms_; }
  void reserve(size_t n) { terms_.reserve(n); }

  // Terms in canonical order.
  std::vector<Term> sorted_terms() const;

  double max_abs_coeff() const;
  // Drops coefficients with |c| < rel * max|c|. Returns the number dropped.
  size_t prune(double rel = 1e-14);
  // Drops coefficients with |c| < abs_threshold.
  size_t prune_absolute(double abs_threshold);

  int min_degree() const;
  int max_degree() const;
  bool is_homogeneous() const { return empty() || min_degree() == max_degree(); }
  // Hull of all sites appearing in the polynomial; empty for 0.
  Interval support() const;
  // Part of homogeneous degree d.
  Polynomial homogeneous_part(int d) const;

  Polynomial& operator+=(const Polynomial& o);
  Polynomial& operator-=(const Polynomial& o);
  Polynomial& operator*=(cplx c);
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, cplx c) { return a *= c; }
  friend Polynomial operator*(cplx c, Polynomial a) { return a *= c; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  Polynomial pow(int k) const;

 private:
  Map terms_;
};

// max |F(m) - G(m)| over the union of both supports.
double max_coeff_difference(const Polynomial& f, const Polynomial& g);

// Elementary bracket {a_x^s, a_x'^s'} = -i s delta(s + s') delta(x - x'),
// extended to polynomials by bilinearity and the Leibniz rule. Coefficients
// below prune_rel * max|coeff| are dropped from the result.
Polynomial poisson_bracket(const Polynomial& f, const Polynomial& g, double prune_rel = 1e-14);

// Delta(m) = sum_k s_k omega_{x_k}.
double delta(const Monomial& m, const DisorderRealization& d);
// Net sign count per site, r_y = #(y,+) - #(y,-); Delta = sum_y r_y omega_y.
std::vector<std::pair<long, int>> net_signs(const Monomial& m);
// True iff the factors pair into same-site opposite-sign couples.
bool in_S(const Monomial& m);
Polynomial p_operator(const Polynomial& f);

// Complex coordinates a_x^- and a_x^+ on a window. For points coming from real
// KG states a^+ is the complex conjugate of a^-; for DNLS a^- = psi.
struct PhasePoint {
  long offset = 0;
  Eigen::VectorXcd minus;
  Eigen::VectorXcd plus;

  Interval window() const { return {offset, offset + minus.size() - 1}; }
  cplx value(long site, int sign) const {
    const long k = site - offset;
    if (k < 0 || k >= minus.size()) return {};
    return sign > 0 ? plus[k] : minus[k];
  }
  PhasePoint scaled(double lambda) const;
};

PhasePoint to_normal(const ChainState& s, const DisorderRealization& d);
ChainState from_normal(const PhasePoint& a, const DisorderRealization& d, ModelKind kind);

cplx evaluate(const Polynomial& f, const PhasePoint& a);
cplx evaluate(const Monomial& m, const PhasePoint& a);

// Degree-one polynomials for q_x and p_x in terms of a_x^{+-} (KG).
Polynomial q_polynomial(long x, const DisorderRealization& d);
Polynomial p_polynomial(long x, const DisorderRealization& d);

// H_har = sum_x omega_x a_x^+ a_x^- over the window.
Polynomial expand_h_har(const Interval& window, const DisorderRealization& d);
// Anharmonic energy of one bond (y-1, y).
Polynomial expand_bond(long y, const ModelSpec& m, const DisorderRealization& d);
// H_an restricted to the bonds (y-1, y) with both ends in the window.
Polynomial expand_h_an(const Interval& window, const ModelSpec& m, const DisorderRealization& d);
// H_x as a polynomial (on-site term plus the bond (x, x+1)).
Polynomial expand_local_energy(long x, const ModelSpec& m, const DisorderRealization& d);
// j_x: g p_x (q_{x-1} - q_x)^3 for KG, {H_{x-1}, H_x} for DNLS.
Polynomial expand_current(long x, const ModelSpec& m, const DisorderRealization& d);

nlohmann::json to_json(const Polynomial& f);
Polynomial polynomial_from_json(const nlohmann::json& j);

}  // namespace chainlab
