#include "doctest.h"

#include <cmath>
#include <random>
#include <set>

#include "chainlab/contractible.hpp"
#include "chainlab/errors.hpp"
#include "chainlab/expansion.hpp"
#include "support.hpp"

using namespace chainlab;

namespace {

const ModelSpec kKG{ModelKind::KG, 1.0, DisorderSpec{}};

DisorderRealization disorder(std::uint64_t seed) {
  return sample_disorder(DisorderSpec{.seed = seed}, {-30, 30});
}

// Brute force over every (l, k, l') choice for blocks 2..i, keeping those whose
// contracted legs are pairwise distinct.
size_t brute_contractions(int i) {
  size_t total = 1;
  for (int j = 2; j <= i; ++j) total *= 4 * 4 * (j - 1);
  size_t ok = 0;
  for (size_t code = 0; code < total; ++code) {
    size_t c = code;
    std::set<std::pair<int, int>> legs;
    bool distinct = true;
    for (int j = 2; j <= i && distinct; ++j) {
      const size_t base = 4 * 4 * (j - 1);
      const size_t v = c % base;
      c /= base;
      const int l = static_cast<int>(v % 4);
      const int k = static_cast<int>((v / 4) % (j - 1));
      const int lp = static_cast<int>(v / (4 * (j - 1)));
      distinct = legs.insert({j, l}).second && legs.insert({k + 1, lp}).second;
    }
    if (distinct) ++ok;
  }
  return ok;
}

}  // namespace

TEST_CASE("contraction counts against brute force") {
  CHECK(enumerate_contractions(1).size() == 1);
  CHECK(enumerate_contractions(2).size() == 16);
  CHECK(brute_contractions(2) == 16);
  CHECK(enumerate_contractions(3).size() == 384);
  CHECK(brute_contractions(3) == 384);
  CHECK(enumerate_contractions(4).size() == brute_contractions(4));
  for (const auto& c : enumerate_contractions(3)) {
    std::set<std::pair<int, int>> used;
    for (size_t s = 0; s < c.size(); ++s) {
      CHECK(used.insert({static_cast<int>(s) + 2, c[s].l}).second);
      CHECK(used.insert({c[s].k, c[s].lp}).second);
      CHECK(c[s].k < static_cast<int>(s) + 2);
    }
  }
}

TEST_CASE("homological equation") {
  std::mt19937_64 rng(31);
  const auto d = disorder(4);
  Polynomial f = testing::random_polynomial(rng, 40, 2, 6, -4, 4);
  Polynomial clean;
  for (const auto& [m, c] : f.terms())
    if (!in_S(m)) clean.add(m, c);
  HomologicalStats st;
  const Polynomial u = solve_homological(clean, d, &st);
  const Polynomial lhs = poisson_bracket(expand_h_har({-4, 4}, d), u);
  CHECK(max_coeff_difference(lhs, clean * -1.0) < 1e-12 * clean.max_abs_coeff() / st.min_abs_delta);
  CHECK(st.projected == 0);
  CHECK(st.divided == clean.size());

  Polynomial dirty = clean;
  dirty.add(Monomial{{0, 1}, {0, -1}}, 0.3);
  CHECK_THROWS_AS(solve_homological(dirty, d), KernelObstruction);
  Polynomial tiny = clean;
  tiny.add(Monomial{{0, 1}, {0, -1}}, 1e-15 * clean.max_abs_coeff());
  CHECK_NOTHROW(solve_homological(tiny, d, &st));
  CHECK(st.projected == 1);
}

TEST_CASE("local decomposition identity") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto d = disorder(seed);
    for (double g : {0.5, 1.0}) {
      const ModelSpec m{ModelKind::KG, g, DisorderSpec{}};
      for (int n = 1; n <= 3; ++n) {
        const ExpansionResult r = build_recursive(2, n, d, m);
        const IdentityResidual res = identity_residual(r, d, m);
        if (n <= 2) CHECK(res.relative_to_j() < 1e-10);
        CHECK(res.relative_to_terms() < 1e-14);
        CHECK(r.projected_terms == 0);
      }
    }
  }
}

TEST_CASE("DNLS decomposition identity") {
  const auto d = disorder(2);
  const ModelSpec m{ModelKind::DNLS, 1.0, DisorderSpec{}};
  for (int n = 1; n <= 2; ++n) {
    const ExpansionResult r = build_recursive(0, n, d, m);
    CHECK(identity_residual(r, d, m).relative_to_terms() < 1e-14);
    CHECK(r.g.min_degree() == 2 * n + 4);
    CHECK(r.g.max_degree() == 2 * n + 6);
    CHECK_FALSE(r.min_abs_delta_exact);
  }
}

TEST_CASE("degree ladder, support and reality") {
  const auto d = disorder(9);
  const ExpansionResult r = build_recursive(0, 3, d, kKG);
  for (int i = 1; i <= 3; ++i) {
    const Polynomial& f = r.f_terms[i - 1];
    const Polynomial& u = r.u_terms[i - 1];
    CHECK(f.is_homogeneous());
    CHECK(f.min_degree() == 2 * i + 2);
    CHECK(u.min_degree() == 2 * i + 2);
    CHECK(Interval{-i, i - 1}.contains(u.support()));
    // Real on real points: U(P m) = conj(U(m)).
    double worst = 0.0;
    for (const auto& [mono, c] : u.terms())
      worst = std::max(worst, std::abs(u.coeff(mono.flipped()) - std::conj(c)));
    CHECK(worst < 1e-12 * u.max_abs_coeff());
    for (const auto& [mono, c] : f.terms()) CHECK_FALSE(in_S(mono));
  }
  CHECK(r.g.min_degree() == 10);
  CHECK(Interval{-4, 3}.contains(r.g_support));
  CHECK(r.support == Interval{-3, 2});
}

TEST_CASE("explicit route matches the recursion") {
  for (std::uint64_t seed : {5, 6}) {
    const auto d = disorder(seed);
    const ExpansionResult r = build_recursive(1, 3, d, kKG);
    for (int i = 1; i <= 3; ++i) {
      const ExplicitTerms e = build_explicit(1, i, d, kKG);
      const double scale_f = r.f_terms[i - 1].max_abs_coeff();
      const double scale_u = r.u_terms[i - 1].max_abs_coeff();
      CHECK(max_coeff_difference(e.f, r.f_terms[i - 1]) < 1e-12 * scale_f);
      CHECK(max_coeff_difference(e.u, r.u_terms[i - 1]) < 1e-12 * scale_u);
    }
  }
}

TEST_CASE("frozen sign convention") {
  // Each step carries the sign of the contracted H_an leg. Using the earlier
  // block's leg flips every step and only agrees at odd i; reading the sign
  // from leg number k(j) of block j does not agree at all.
  const auto d = disorder(5);
  const ExpansionResult r = build_recursive(0, 3, d, kKG);
  const double f2 = r.f_terms[1].max_abs_coeff(), f3 = r.f_terms[2].max_abs_coeff();
  const auto diff = [&](int i, SignConvention c) {
    return max_coeff_difference(build_explicit(0, i, d, kKG, c).f, r.f_terms[i - 1]);
  };
  CHECK(diff(2, SignConvention::NewLeg) < 1e-12 * f2);
  CHECK(diff(2, SignConvention::PartnerLeg) > 0.5 * f2);
  CHECK(diff(3, SignConvention::PartnerLeg) < 1e-12 * f3);
  CHECK(diff(2, SignConvention::Literal) > 0.1 * f2);
  CHECK(diff(3, SignConvention::Literal) > 0.1 * f3);
}

TEST_CASE("explicit and contractible budgets") {
  const auto d = disorder(1);
  CHECK_THROWS_AS(build_explicit(0, 4, d, kKG), BudgetExceeded);
  CHECK_THROWS_AS(contractible_set(6), BudgetExceeded);
  CHECK_THROWS_AS(build_explicit(0, 2, d, ModelSpec{ModelKind::DNLS, 1.0, DisorderSpec{}}),
                  ArgumentError);
}

TEST_CASE("contractible set covers the divided monomials") {
  const auto d = disorder(12);
  const long x = 3;
  const ExpansionResult r = build_recursive(x, 3, d, kKG);
  const ContractibleSet& cs = contractible_set(3);
  CHECK(cs.exact());
  CHECK(cs.levels.size() == 3);
  CHECK(cs.levels[0].size() == 32);
  for (int i = 1; i <= 3; ++i) {
    const std::set<Monomial> level(cs.levels[i - 1].begin(), cs.levels[i - 1].end());
    size_t missing = 0;
    for (const auto& [m, c] : r.u_terms[i - 1].terms())
      if (!level.count(shifted(m, -x))) ++missing;
    CHECK(missing == 0);
  }
  CHECK(r.min_abs_delta_exact);
  CHECK(r.min_abs_delta <= r.divided_min_abs_delta);
  CHECK(r.min_abs_delta == min_abs_delta(x, cs, d));
  // Nested levels give nested minima.
  CHECK(min_abs_delta(x, contractible_set(1), d) >= min_abs_delta(x, contractible_set(2), d));
  CHECK(min_abs_delta(x, contractible_set(2), d) >= r.min_abs_delta);
  CHECK_FALSE(contractible_set(4).exact());
}

TEST_CASE("pointwise decomposition") {
  std::mt19937_64 rng(77);
  const auto d = disorder(2);
  const ExpansionResult r = build_recursive(0, 2, d, kKG);
  const Polynomial hb = h_bracket(r, d, kKG);
  for (int t = 0; t < 20; ++t) {
    const ChainState s = testing::random_kg_state(rng, {-6, 6}, 0.4);
    const auto v = evaluate_decomposition(r, hb, to_normal(s, d));
    CHECK(std::abs(v.j - current(s, d, kKG, 0)) < 1e-12 * (1 + std::abs(v.j)));
    CHECK(std::abs(v.residual) < 1e-10 * (std::abs(v.j) + std::abs(v.g) + std::abs(v.h_bracket_u)));
  }
}

TEST_CASE("time-integrated check along a trajectory") {
  std::mt19937_64 rng(3);
  const auto d = disorder(7);
  const ExpansionResult r = build_recursive(0, 2, d, kKG);
  ChainState s = testing::random_kg_state(rng, {-30, 30}, 0.0);
  for (long x = -2; x <= 2; ++x) {
    s.q[x + 30] = 0.3 * std::normal_distribution<>()(rng);
    s.p[x + 30] = 0.3 * std::normal_distribution<>()(rng);
  }
  IntegratorSpec spec;
  spec.scheme = Scheme::Yoshida4;
  spec.step = 0.002;
  Integrator integ(d, kKG, spec, total_energy(s, d, kKG));
  std::vector<ChainState> samples{s};
  for (int k = 0; k < 1000; ++k) {
    integ.step(s);
    samples.push_back(s);
  }
  const IntegratedCheck c = time_integrated_check(samples, spec.step, r, d);
  CHECK(std::abs(c.residual) < 1e-8 * c.scale);
  CHECK(std::abs(c.int_j) > 1e-4 * c.scale);
  samples.pop_back();
  CHECK_THROWS_AS(time_integrated_check(samples, spec.step, r, d), ArgumentError);
}

TEST_CASE("expansion JSON") {
  const auto d = disorder(2);
  const ExpansionResult r = build_recursive(0, 2, d, kKG);
  const auto j = to_json(r);
  CHECK(j["n"] == 2);
  CHECK(j["term_counts"].size() == 2);
  CHECK(j["u_terms"].size() == 2);
  CHECK(j["f_terms"].size() == 3);
  CHECK(max_coeff_difference(polynomial_from_json(j["g"]), r.g) == 0.0);
  const TermCountFit fit = term_count_fit(r);
  CHECK(fit.counts[0] == r.u_terms[0].size());
  CHECK(fit.c >= fit.c_i[1]);
}
