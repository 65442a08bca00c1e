#include "chainlab/expansion.hpp"

#include <absl/container/flat_hash_map.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "chainlab/contractible.hpp"
#include "chainlab/errors.hpp"

namespace chainlab {

namespace {

using Code = Monomial::Code;
constexpr cplx kI{0.0, 1.0};

Interval widen(const Interval& w, long by) { return {w.left - by, w.right + by}; }

}  // namespace

Polynomial solve_homological(const Polynomial& f, const DisorderRealization& d,
                             HomologicalStats* stats) {
  const double scale = f.max_abs_coeff();
  HomologicalStats st;
  st.min_abs_delta = std::numeric_limits<double>::infinity();
  Polynomial u;
  u.reserve(f.size());
  for (const auto& [m, c] : f.terms()) {
    if (in_S(m)) {
      if (std::abs(c) > kHomologicalGuard * scale) {
        std::ostringstream os;
        os << "source has a kernel component " << std::abs(c) << " on " << m.to_string();
        throw KernelObstruction(os.str());
      }
      ++st.projected;
      continue;
    }
    const double dl = delta(m, d);
    st.min_abs_delta = std::min(st.min_abs_delta, std::abs(dl));
    ++st.divided;
    u.add(m, kI * c / dl);
  }
  if (stats) *stats = st;
  return u;
}

ExpansionResult build_recursive(long x, int n, const DisorderRealization& d, const ModelSpec& m) {
  if (n < 1) throw ArgumentError("expansion order n must be >= 1");
  ExpansionResult r;
  r.x = x;
  r.n = n;
  r.divided_min_abs_delta = std::numeric_limits<double>::infinity();
  r.f_terms.push_back(expand_current(x, m, d));
  for (int i = 1; i <= n; ++i) {
    HomologicalStats st;
    Polynomial ui = solve_homological(r.f_terms.back(), d, &st);
    r.divided_min_abs_delta = std::min(r.divided_min_abs_delta, st.min_abs_delta);
    r.projected_terms += st.projected;
    // Only bonds touching supp(u^(i)) contribute to {H_an, u^(i)}.
    const Polynomial h_an = expand_h_an(widen(ui.support(), 1), m, d);
    r.f_terms.push_back(poisson_bracket(h_an, ui));
    r.u += ui;
    r.u_terms.push_back(std::move(ui));
  }
  r.g = r.f_terms.back();
  r.support = r.u.support();
  r.g_support = r.g.support();

  if (m.kind == ModelKind::KG && n <= kMaxContractibleOrder) {
    const ContractibleSet& cs = contractible_set(n);
    r.min_abs_delta = min_abs_delta(x, cs, d);
    r.min_abs_delta_exact = cs.exact();
  } else {
    r.min_abs_delta = r.divided_min_abs_delta;
    r.min_abs_delta_exact = false;
  }
  return r;
}

Polynomial h_bracket(const ExpansionResult& r, const DisorderRealization& d, const ModelSpec& m) {
  const Interval w = r.u.support();
  Polynomial h = expand_h_har(w, d) + expand_h_an(widen(w, 1), m, d);
  return poisson_bracket(h, r.u);
}

IdentityResidual identity_residual(const ExpansionResult& r, const DisorderRealization& d,
                                   const ModelSpec& m) {
  const Polynomial& j = r.f_terms.front();
  IdentityResidual out;
  out.max_abs = (j + h_bracket(r, d, m) - r.g).max_abs_coeff();
  out.j_scale = j.max_abs_coeff();
  for (const auto& f : r.f_terms) out.term_scale = std::max(out.term_scale, f.max_abs_coeff());
  return out;
}

std::vector<Contraction> enumerate_contractions(int i) {
  if (i < 1) throw ArgumentError("contraction order must be >= 1");
  std::vector<Contraction> out;
  Contraction cur;
  // used[b][l]: leg l of block b is already contracted.
  std::vector<std::array<bool, 4>> used(i, {false, false, false, false});
  auto rec = [&](auto&& self, int j) -> void {
    if (j > i) {
      out.push_back(cur);
      return;
    }
    for (int l = 1; l <= 4; ++l) {
      for (int k = 1; k < j; ++k) {
        for (int lp = 1; lp <= 4; ++lp) {
          if (used[k - 1][lp - 1]) continue;
          used[j - 1][l - 1] = true;
          used[k - 1][lp - 1] = true;
          cur.push_back({l, k, lp});
          self(self, j + 1);
          cur.pop_back();
          used[k - 1][lp - 1] = false;
          used[j - 1][l - 1] = false;
        }
      }
    }
  };
  rec(rec, 2);
  return out;
}

namespace {

int orderings(std::span<const Code> sorted) {
  int denom = 1, run = 1;
  for (size_t k = 1; k <= sorted.size(); ++k) {
    if (k < sorted.size() && sorted[k] == sorted[k - 1]) {
      ++run;
      denom *= run;
    } else {
      run = 1;
    }
  }
  int n = 1;
  for (size_t k = 2; k <= sorted.size(); ++k) n *= static_cast<int>(k);
  return n / denom;
}

// Coefficient of one ordered tuple in the fully symmetrized form of p.
cplx ordered_coeff(const Polynomial& p, std::array<Code, 4> t) {
  std::sort(t.begin(), t.end());
  const cplx c = p.coeff(Monomial::from_codes(t));
  if (c == cplx{}) return c;
  return c / static_cast<double>(orderings(t));
}

// Ordered triples completing an H_an bond term around a leg at site s.
std::vector<std::array<Code, 3>> ordered_fills(long s) {
  std::vector<std::array<Code, 3>> out;
  for (long y : {s, s + 1}) {
    std::vector<Code> opts;
    for (long site : {y - 1, y})
      for (int sign : {-1, 1}) opts.push_back(Monomial::encode(site, sign));
    for (Code a : opts)
      for (Code b : opts)
        for (Code c : opts) {
          // The all-at-s triples belong to both bonds; count them once.
          if (y == s + 1 && Monomial::decode(a).site == s && Monomial::decode(b).site == s &&
              Monomial::decode(c).site == s)
            continue;
          out.push_back({a, b, c});
        }
  }
  return out;
}

// Legs of a partial tuple: code * 8 + (block index), kept sorted.
using LegKey = std::vector<std::int32_t>;

Code leg_code(std::int32_t leg) { return static_cast<Code>(leg >> 3); }
int leg_block(std::int32_t leg) { return leg & 7; }
std::int32_t make_leg(Code c, int block) { return static_cast<std::int32_t>(c) * 8 + block; }

Monomial legs_monomial(const LegKey& legs) {
  std::array<Code, kMaxDegree> codes{};
  for (size_t k = 0; k < legs.size(); ++k) codes[k] = leg_code(legs[k]);
  return Monomial::from_codes(std::span<const Code>(codes.data(), legs.size()));
}

double sign_factor(SignConvention conv, Code partner, const std::array<Code, 4>& t,
                   int partner_block) {
  switch (conv) {
    case SignConvention::NewLeg:
      return Monomial::decode(Monomial::flip(partner)).sign;
    case SignConvention::PartnerLeg:
      return Monomial::decode(partner).sign;
    case SignConvention::Literal:
      return Monomial::decode(t[partner_block]).sign;
  }
  return 0.0;
}

}  // namespace

ExplicitTerms build_explicit(long x, int i, const DisorderRealization& d, const ModelSpec& m,
                             SignConvention conv) {
  if (i < 1) throw ArgumentError("explicit order must be >= 1");
  if (i > kExplicitMaxOrder) {
    std::ostringstream os;
    os << "explicit expansion is capped at order " << kExplicitMaxOrder << ", got " << i;
    throw BudgetExceeded(os.str());
  }
  if (m.kind != ModelKind::KG) throw ArgumentError("explicit expansion needs the KG current");

  const Polynomial j = expand_current(x, m, d);
  const Polynomial h_an = expand_h_an({x - i - 2, x + i + 1}, m, d);
  ExplicitTerms out;

  // Ordered maps throughout so that sums are formed in a fixed order.
  // Level 1: ordered tuples of the current.
  std::map<LegKey, cplx> states;
  {
    std::vector<Code> opts;
    for (long site : {x - 1, x})
      for (int sign : {-1, 1}) opts.push_back(Monomial::encode(site, sign));
    for (Code a : opts)
      for (Code b : opts)
        for (Code c : opts)
          for (Code e : opts) {
            const std::array<Code, 4> t{a, b, c, e};
            const cplx jc = ordered_coeff(j, t);
            if (jc == cplx{}) continue;
            if (in_S(Monomial::from_codes(t))) continue;
            LegKey legs{make_leg(a, 0), make_leg(b, 0), make_leg(c, 0), make_leg(e, 0)};
            std::sort(legs.begin(), legs.end());
            states[legs] += jc;
          }
  }
  if (i == 1) {
    for (const auto& [legs, c] : states) out.f.add(legs_monomial(legs), c);
  }

  // (partner code, partner block) -> completed triples with summed weights.
  absl::flat_hash_map<std::pair<Code, int>, std::vector<std::pair<std::array<Code, 3>, cplx>>>
      tables;
  auto table = [&](Code partner, int partner_block) -> const auto& {
    auto [it, fresh] = tables.try_emplace({partner, partner_block});
    if (!fresh) return it->second;
    const Code need = Monomial::flip(partner);
    std::map<std::array<Code, 3>, cplx> acc;
    for (const auto& fill : ordered_fills(Monomial::decode(need).site)) {
      for (int l = 0; l < 4; ++l) {
        std::array<Code, 4> t{};
        for (int k = 0, f = 0; k < 4; ++k) t[k] = k == l ? need : fill[f++];
        const cplx v = ordered_coeff(h_an, t);
        if (v == cplx{}) continue;
        std::array<Code, 3> rest = fill;
        std::sort(rest.begin(), rest.end());
        acc[rest] += sign_factor(conv, partner, t, partner_block) * v;
      }
    }
    for (const auto& [rest, w] : acc)
      if (w != cplx{}) it->second.emplace_back(rest, w);
    return it->second;
  };

  for (int block = 1; block < i; ++block) {
    const bool last = block == i - 1;
    std::map<LegKey, cplx> next;
    for (const auto& [legs, c] : states) {
      ++out.prefixes;
      const double dl = delta(legs_monomial(legs), d);
      const cplx base = c / dl;
      for (size_t p = 0; p < legs.size(); ++p) {
        // Repeated legs are distinct positions of the ordered tuple and are
        // each visited.
        const Code partner = leg_code(legs[p]);
        const int pb = leg_block(legs[p]);
        LegKey rest;
        rest.reserve(legs.size() + 2);
        for (size_t k = 0; k < legs.size(); ++k)
          if (k != p) rest.push_back(legs[k]);
        for (const auto& [fill, w] : table(partner, pb)) {
          LegKey nl = rest;
          for (Code fc : fill) nl.push_back(make_leg(fc, block));
          std::sort(nl.begin(), nl.end());
          if (last) {
            out.f.add(legs_monomial(nl), base * w);
          } else {
            if (in_S(legs_monomial(nl))) continue;
            next[nl] += base * w;
          }
        }
      }
    }
    if (!last) states = std::move(next);
  }

  // Final monomials in S cancel in the exact sum; drop the roundoff.
  Polynomial f;
  for (const auto& [mono, c] : out.f.terms())
    if (!in_S(mono)) f.add(mono, c);
  out.f = std::move(f);
  for (const auto& [mono, c] : out.f.terms())
    out.u.add(mono, kI * c / delta(mono, d));
  return out;
}

DecompositionValues evaluate_decomposition(const ExpansionResult& r, const Polynomial& h_bracket_u,
                                           const PhasePoint& a) {
  DecompositionValues v;
  v.j = evaluate(r.f_terms.front(), a).real();
  v.h_bracket_u = evaluate(h_bracket_u, a).real();
  v.g = evaluate(r.g, a).real();
  v.residual = v.j + v.h_bracket_u - v.g;
  return v;
}

IntegratedCheck time_integrated_check(const std::vector<ChainState>& samples, double h,
                                      const ExpansionResult& r, const DisorderRealization& d) {
  const size_t n = samples.size();
  if (n < 3 || (n - 1) % 2 != 0)
    throw ArgumentError("Simpson's rule needs an even number of intervals");
  if (!(h > 0.0)) throw ArgumentError("sample spacing must be positive");
  std::vector<double> j(n), g(n);
  double u0 = 0.0, u1 = 0.0;
  for (size_t k = 0; k < n; ++k) {
    const PhasePoint a = to_normal(samples[k], d);
    j[k] = evaluate(r.f_terms.front(), a).real();
    g[k] = evaluate(r.g, a).real();
    if (k == 0) u0 = evaluate(r.u, a).real();
    if (k == n - 1) u1 = evaluate(r.u, a).real();
  }
  auto simpson = [&](const std::vector<double>& f, bool absolute) {
    double s = 0.0;
    for (size_t k = 0; k < n; ++k) {
      const double w = (k == 0 || k == n - 1) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      s += w * (absolute ? std::abs(f[k]) : f[k]);
    }
    return s * h / 3.0;
  };
  IntegratedCheck c;
  c.du = u1 - u0;
  c.int_j = simpson(j, false);
  c.int_g = simpson(g, false);
  c.residual = c.du + c.int_j - c.int_g;
  c.scale = std::abs(u0) + std::abs(u1) + simpson(j, true) + simpson(g, true);
  return c;
}

TermCountFit term_count_fit(const ExpansionResult& r) {
  TermCountFit fit;
  for (size_t k = 0; k < r.u_terms.size(); ++k) {
    const double i = static_cast<double>(k + 1);
    const size_t cnt = r.u_terms[k].size();
    fit.counts.push_back(cnt);
    const double ci = cnt > 1 ? std::log(static_cast<double>(cnt)) / (i * std::log(i + 1.0)) : 0.0;
    fit.c_i.push_back(ci);
    fit.c = std::max(fit.c, ci);
  }
  return fit;
}

nlohmann::json to_json(const ExpansionResult& r) {
  nlohmann::json j;
  j["x"] = r.x;
  j["n"] = r.n;
  j["min_abs_delta"] = r.min_abs_delta;
  j["min_abs_delta_exact"] = r.min_abs_delta_exact;
  j["divided_min_abs_delta"] = r.divided_min_abs_delta;
  j["projected_terms"] = r.projected_terms;
  j["support"] = {r.support.left, r.support.right};
  j["g_support"] = {r.g_support.left, r.g_support.right};
  const TermCountFit fit = term_count_fit(r);
  j["term_counts"] = fit.counts;
  j["term_count_c"] = fit.c;
  j["u_terms"] = nlohmann::json::array();
  for (const auto& p : r.u_terms) j["u_terms"].push_back(to_json(p));
  j["f_terms"] = nlohmann::json::array();
  for (const auto& p : r.f_terms) j["f_terms"].push_back(to_json(p));
  j["u"] = to_json(r.u);
  j["g"] = to_json(r.g);
  return j;
}

}  // namespace chainlab
