#include "chainlab/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "chainlab/errors.hpp"

namespace chainlab {

namespace {

constexpr cplx kI{0.0, 1.0};

void check_degree(int d) {
  if (d > kMaxDegree) {
    throw BudgetExceeded("monomial degree " + std::to_string(d) + " exceeds the storage cap " +
                         std::to_string(kMaxDegree));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Monomial

Monomial::Code Monomial::encode(long site, int sign) {
  if (site > kMaxAbsSite || site < -kMaxAbsSite)
    throw ArgumentError("site " + std::to_string(site) + " outside the monomial site range");
  if (sign != 1 && sign != -1) throw ArgumentError("sign must be +1 or -1");
  return static_cast<Code>(2 * site + (sign > 0 ? 1 : 0));
}

Monomial::Monomial(std::initializer_list<Factor> factors)
    : Monomial(std::span<const Factor>(factors.begin(), factors.size())) {}

Monomial::Monomial(std::span<const Factor> factors) {
  check_degree(static_cast<int>(factors.size()));
  degree_ = static_cast<std::uint8_t>(factors.size());
  for (size_t k = 0; k < factors.size(); ++k) codes_[k] = encode(factors[k].site, factors[k].sign);
  std::sort(codes_.begin(), codes_.begin() + degree_);
}

Monomial Monomial::from_codes(std::span<const Code> codes) {
  check_degree(static_cast<int>(codes.size()));
  Monomial m;
  m.degree_ = static_cast<std::uint8_t>(codes.size());
  std::copy(codes.begin(), codes.end(), m.codes_.begin());
  std::sort(m.codes_.begin(), m.codes_.begin() + m.degree_);
  return m;
}

std::vector<Factor> Monomial::factors() const {
  std::vector<Factor> out;
  out.reserve(degree_);
  for (int k = 0; k < degree_; ++k) out.push_back(factor(k));
  return out;
}

Monomial Monomial::operator*(const Monomial& o) const {
  check_degree(degree_ + o.degree_);
  Monomial m;
  m.degree_ = static_cast<std::uint8_t>(degree_ + o.degree_);
  std::merge(codes_.begin(), codes_.begin() + degree_, o.codes_.begin(),
             o.codes_.begin() + o.degree_, m.codes_.begin());
  return m;
}

Monomial Monomial::without(int k) const {
  Monomial m;
  m.degree_ = static_cast<std::uint8_t>(degree_ - 1);
  int j = 0;
  for (int i = 0; i < degree_; ++i)
    if (i != k) m.codes_[j++] = codes_[i];
  return m;
}

Monomial Monomial::flipped() const {
  Monomial m;
  m.degree_ = degree_;
  for (int i = 0; i < degree_; ++i) m.codes_[i] = flip(codes_[i]);
  std::sort(m.codes_.begin(), m.codes_.begin() + degree_);
  return m;
}

bool Monomial::operator<(const Monomial& o) const {
  if (degree_ != o.degree_) return degree_ < o.degree_;
  return std::lexicographical_compare(codes_.begin(), codes_.begin() + degree_, o.codes_.begin(),
                                      o.codes_.begin() + o.degree_);
}

std::string Monomial::to_string() const {
  std::ostringstream os;
  for (int k = 0; k < degree_; ++k) {
    const Factor f = factor(k);
    os << "(" << f.site << "," << (f.sign > 0 ? '+' : '-') << ")";
  }
  if (degree_ == 0) os << "1";
  return os.str();
}

Monomial Monomial::contract(const Monomial& a, int skip_a, const Monomial& b, int skip_b) {
  const int d = a.degree_ + b.degree_ - 2;
  check_degree(d);
  Monomial m;
  m.degree_ = static_cast<std::uint8_t>(d);
  int i = 0, j = 0, k = 0;
  const int na = a.degree_, nb = b.degree_;
  for (;;) {
    if (i == skip_a) ++i;
    if (j == skip_b) ++j;
    if (i >= na || j >= nb) break;
    if (a.codes_[i] <= b.codes_[j]) {
      m.codes_[k++] = a.codes_[i++];
    } else {
      m.codes_[k++] = b.codes_[j++];
    }
  }
  for (; i < na; ++i)
    if (i != skip_a) m.codes_[k++] = a.codes_[i];
  for (; j < nb; ++j)
    if (j != skip_b) m.codes_[k++] = b.codes_[j];
  return m;
}

// ---------------------------------------------------------------------------
// Polynomial

Polynomial Polynomial::monomial(const Monomial& m, cplx c) {
  Polynomial p;
  p.add(m, c);
  return p;
}

Polynomial Polynomial::linear(std::initializer_list<std::pair<Factor, cplx>> terms) {
  Polynomial p;
  for (const auto& [f, c] : terms) p.add(Monomial{f}, c);
  return p;
}

void Polynomial::add(const Monomial& m, cplx c) {
  if (c == cplx{}) return;
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == cplx{}) terms_.erase(it);
  }
}

cplx Polynomial::coeff(const Monomial& m) const {
  const auto it = terms_.find(m);
  return it == terms_.end() ? cplx{} : it->second;
}

std::vector<Polynomial::Term> Polynomial::sorted_terms() const {
  std::vector<Term> out(terms_.begin(), terms_.end());
  std::sort(out.begin(), out.end(), [](const Term& a, const Term& b) { return a.first < b.first; });
  return out;
}

double Polynomial::max_abs_coeff() const {
  double m = 0.0;
  for (const auto& [mono, c] : terms_) m = std::max(m, std::abs(c));
  return m;
}

size_t Polynomial::prune(double rel) { return prune_absolute(rel * max_abs_coeff()); }

size_t Polynomial::prune_absolute(double abs_threshold) {
  size_t dropped = 0;
  absl::erase_if(terms_, [&](const auto& kv) {
    const bool drop = std::abs(kv.second) < abs_threshold;
    dropped += drop;
    return drop;
  });
  return dropped;
}

int Polynomial::min_degree() const {
  int d = kMaxDegree + 1;
  for (const auto& [m, c] : terms_) d = std::min(d, m.degree());
  return empty() ? 0 : d;
}

int Polynomial::max_degree() const {
  int d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
  return d;
}

Interval Polynomial::support() const {
  Interval s;
  for (const auto& [m, c] : terms_) {
    if (m.degree() == 0) continue;
    s = s.hull(Interval{m.min_site(), m.max_site()});
  }
  return s;
}

Polynomial Polynomial::homogeneous_part(int d) const {
  Polynomial out;
  for (const auto& [m, c] : terms_)
    if (m.degree() == d) out.terms_.emplace(m, c);
  return out;
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
  for (const auto& [m, c] : o.terms_) add(m, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o) {
  for (const auto& [m, c] : o.terms_) add(m, -c);
  return *this;
}

Polynomial& Polynomial::operator*=(cplx c) {
  if (c == cplx{}) {
    terms_.clear();
    return *this;
  }
  for (auto& kv : terms_) kv.second *= c;
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  Polynomial out;
  out.reserve(a.size() * b.size());
  // Canonical order keeps the rounding of each sum independent of hashing.
  const auto sb = b.sorted_terms();
  for (const auto& [ma, ca] : a.sorted_terms())
    for (const auto& [mb, cb] : sb) out.add(ma * mb, ca * cb);
  return out;
}

Polynomial Polynomial::pow(int k) const {
  Polynomial out = Polynomial::monomial(Monomial{}, 1.0);
  for (int i = 0; i < k; ++i) out = out * *this;
  return out;
}

double max_coeff_difference(const Polynomial& f, const Polynomial& g) {
  double m = 0.0;
  for (const auto& [mono, c] : f.terms()) m = std::max(m, std::abs(c - g.coeff(mono)));
  for (const auto& [mono, c] : g.terms())
    if (!f.terms().contains(mono)) m = std::max(m, std::abs(c));
  return m;
}

// ---------------------------------------------------------------------------
// Bracket

namespace {

// Running sum kept as an unevaluated pair hi + lo.
struct WideSum {
  double hi = 0.0;
  double lo = 0.0;

  void add(double x) {
    const double t = hi + x;
    const double b = t - hi;
    lo += (hi - (t - b)) + (x - b);
    hi = t;
  }
  // Adds a * b * m with both products split exactly.
  void add_product(double a, double b, double m) {
    const double p = a * b;
    const double pe = std::fma(a, b, -p);
    const double q = p * m;
    const double qe = std::fma(p, m, -q);
    add(q);
    lo += qe + pe * m;
  }
  double value() const { return hi + lo; }
};

struct IndexEntry {
  std::uint32_t term;
  std::uint8_t position;  // first position of the code inside the monomial
  std::uint8_t multiplicity;
};

using TermVec = std::vector<Polynomial::Term>;
using CodeIndex = absl::flat_hash_map<Monomial::Code, std::vector<IndexEntry>>;

CodeIndex build_index(const TermVec& terms) {
  CodeIndex index;
  for (std::uint32_t t = 0; t < terms.size(); ++t) {
    const auto codes = terms[t].first.codes();
    for (size_t k = 0; k < codes.size();) {
      size_t e = k;
      while (e < codes.size() && codes[e] == codes[k]) ++e;
      index[codes[k]].push_back(
          {t, static_cast<std::uint8_t>(k), static_cast<std::uint8_t>(e - k)});
      k = e;
    }
  }
  return index;
}

}  // namespace

Polynomial poisson_bracket(const Polynomial& f, const Polynomial& g, double prune_rel) {
  Polynomial out;
  if (f.empty() || g.empty()) return out;

  // Walk the larger operand and index the smaller one by factor code.
  const bool walk_f = f.size() >= g.size();
  const TermVec walked = (walk_f ? f : g).sorted_terms();
  const TermVec indexed = (walk_f ? g : f).sorted_terms();
  const CodeIndex index = build_index(indexed);

  // Sums are carried to about twice double precision with exact products and
  // rounded once; walking in canonical order makes the last bit reproducible.
  absl::flat_hash_map<Monomial, std::array<WideSum, 2>> acc;
  acc.reserve(walked.size() * 4);
  for (const auto& [mw, cw] : walked) {
    const auto codes = mw.codes();
    for (size_t k = 0; k < codes.size();) {
      size_t e = k;
      while (e < codes.size() && codes[e] == codes[k]) ++e;
      const auto it = index.find(Monomial::flip(codes[k]));
      if (it != index.end()) {
        // {a_c, a_{flip c}} = -i sigma_c when a_c belongs to f; the unit is i*u.
        const double sigma = (codes[k] & 1) ? 1.0 : -1.0;
        const double u = walk_f ? -sigma : sigma;
        const double mult_w = static_cast<double>(e - k);
        for (const IndexEntry& entry : it->second) {
          const auto& [mi, ci] = indexed[entry.term];
          const Monomial m = Monomial::contract(mw, static_cast<int>(k), mi, entry.position);
          const double s = u * mult_w * entry.multiplicity;
          auto& [re, im] = acc[m];
          re.add_product(cw.real(), ci.imag(), -s);
          re.add_product(cw.imag(), ci.real(), -s);
          im.add_product(cw.real(), ci.real(), s);
          im.add_product(cw.imag(), ci.imag(), -s);
        }
      }
      k = e;
    }
  }

  out.reserve(acc.size());
  for (auto& [m, c] : acc) out.add(m, cplx(c[0].value(), c[1].value()));
  if (prune_rel > 0.0) out.prune(prune_rel);
  return out;
}

// ---------------------------------------------------------------------------
// Denominators, S and P

double delta(const Monomial& m, const DisorderRealization& d) {
  double s = 0.0;
  for (const auto& [site, r] : net_signs(m)) s += r * d.omega(site);
  return s;
}

std::vector<std::pair<long, int>> net_signs(const Monomial& m) {
  std::vector<std::pair<long, int>> out;
  const auto codes = m.codes();
  for (size_t k = 0; k < codes.size(); ++k) {
    const Factor f = Monomial::decode(codes[k]);
    if (out.empty() || out.back().first != f.site) out.emplace_back(f.site, 0);
    out.back().second += f.sign;
  }
  std::erase_if(out, [](const auto& p) { return p.second == 0; });
  return out;
}

bool in_S(const Monomial& m) {
  if (m.degree() % 2 != 0) return false;
  return net_signs(m).empty();
}

Polynomial p_operator(const Polynomial& f) {
  Polynomial out;
  out.reserve(f.size());
  for (const auto& [m, c] : f.terms()) out.add(m.flipped(), c);
  return out;
}

// ---------------------------------------------------------------------------
// Coordinates

PhasePoint PhasePoint::scaled(double lambda) const {
  return {offset, minus * lambda, plus * lambda};
}

PhasePoint to_normal(const ChainState& s, const DisorderRealization& d) {
  PhasePoint a;
  a.offset = s.offset;
  const long n = s.size();
  a.minus.resize(n);
  a.plus.resize(n);
  for (long k = 0; k < n; ++k) {
    if (s.kind == ModelKind::KG) {
      const double w = d.omega(s.offset + k);
      const double c = std::sqrt(0.5 * w);
      a.minus[k] = c * cplx{s.q[k], s.p[k] / w};
    } else {
      a.minus[k] = s.psi[k];
    }
    a.plus[k] = std::conj(a.minus[k]);
  }
  return a;
}

ChainState from_normal(const PhasePoint& a, const DisorderRealization& d, ModelKind kind) {
  ChainState s = ChainState::zeros(kind, a.window());
  for (long k = 0; k < a.minus.size(); ++k) {
    if (kind == ModelKind::KG) {
      const double w = d.omega(a.offset + k);
      s.q[k] = std::real(a.plus[k] + a.minus[k]) / std::sqrt(2.0 * w);
      s.p[k] = std::real(kI * std::sqrt(0.5 * w) * (a.plus[k] - a.minus[k]));
    } else {
      s.psi[k] = a.minus[k];
    }
  }
  return s;
}

cplx evaluate(const Monomial& m, const PhasePoint& a) {
  cplx v = 1.0;
  for (const auto c : m.codes()) {
    const Factor f = Monomial::decode(c);
    v *= a.value(f.site, f.sign);
  }
  return v;
}

cplx evaluate(const Polynomial& f, const PhasePoint& a) {
  cplx s{};
  for (const auto& [m, c] : f.sorted_terms()) s += c * evaluate(m, a);
  return s;
}

// ---------------------------------------------------------------------------
// Expansions of the model observables

Polynomial q_polynomial(long x, const DisorderRealization& d) {
  const double c = 1.0 / std::sqrt(2.0 * d.omega(x));
  return Polynomial::linear({{{x, 1}, c}, {{x, -1}, c}});
}

Polynomial p_polynomial(long x, const DisorderRealization& d) {
  const cplx c = kI * std::sqrt(0.5 * d.omega(x));
  return Polynomial::linear({{{x, 1}, c}, {{x, -1}, -c}});
}

Polynomial expand_h_har(const Interval& window, const DisorderRealization& d) {
  Polynomial h;
  for (long x = window.left; x <= window.right; ++x) h.add(Monomial{{x, 1}, {x, -1}}, d.omega(x));
  return h;
}

Polynomial expand_bond(long y, const ModelSpec& m, const DisorderRealization& d) {
  if (m.g == 0.0) return {};
  if (m.kind == ModelKind::KG) {
    const Polynomial r = q_polynomial(y - 1, d) - q_polynomial(y, d);
    return r.pow(4) * cplx{0.25 * m.g};
  }
  const Polynomial dm = Polynomial::linear({{{y - 1, -1}, 1.0}, {{y, -1}, -1.0}});
  const Polynomial dp = Polynomial::linear({{{y - 1, 1}, 1.0}, {{y, 1}, -1.0}});
  return (dm * dp).pow(2) * cplx{0.25 * m.g};
}

Polynomial expand_h_an(const Interval& window, const ModelSpec& m, const DisorderRealization& d) {
  Polynomial h;
  for (long y = window.left + 1; y <= window.right; ++y) h += expand_bond(y, m, d);
  return h;
}

Polynomial expand_local_energy(long x, const ModelSpec& m, const DisorderRealization& d) {
  Polynomial h;
  if (m.kind == ModelKind::KG) {
    const Polynomial q = q_polynomial(x, d);
    const Polynomial p = p_polynomial(x, d);
    h = p * p * cplx{0.5} + q * q * cplx{0.5 * d.omega_sq(x)};
    h.prune(1e-15);
  } else {
    h.add(Monomial{{x, 1}, {x, -1}}, d.omega(x));
  }
  h += expand_bond(x + 1, m, d);
  return h;
}

Polynomial expand_current(long x, const ModelSpec& m, const DisorderRealization& d) {
  if (m.g == 0.0) return {};
  if (m.kind == ModelKind::KG) {
    const Polynomial r = q_polynomial(x - 1, d) - q_polynomial(x, d);
    Polynomial j = p_polynomial(x, d) * r.pow(3) * cplx{m.g};
    j.prune(1e-15);
    return j;
  }
  return poisson_bracket(expand_local_energy(x - 1, m, d), expand_local_energy(x, m, d));
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json to_json(const Polynomial& f) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [m, c] : f.sorted_terms()) {
    nlohmann::json sites = nlohmann::json::array();
    nlohmann::json signs = nlohmann::json::array();
    for (int k = 0; k < m.degree(); ++k) {
      sites.push_back(m.factor(k).site);
      signs.push_back(m.factor(k).sign);
    }
    out.push_back({{"sites", sites}, {"signs", signs}, {"re", c.real()}, {"im", c.imag()}});
  }
  return out;
}

Polynomial polynomial_from_json(const nlohmann::json& j) {
  Polynomial f;
  for (const auto& t : j) {
    const auto sites = t.at("sites").get<std::vector<long>>();
    const auto signs = t.at("signs").get<std::vector<int>>();
    if (sites.size() != signs.size()) throw ArgumentError("sites/signs length mismatch");
    std::vector<Factor> factors;
    for (size_t k = 0; k < sites.size(); ++k) factors.push_back({sites[k], signs[k]});
    f.add(Monomial(std::span<const Factor>(factors)),
          cplx{t.at("re").get<double>(), t.at("im").get<double>()});
  }
  return f;
}

}  // namespace chainlab
