#include "chainlab/checks.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <random>

#include "chainlab/contractible.hpp"
#include "chainlab/dynamics.hpp"
#include "chainlab/errors.hpp"
#include "chainlab/expansion.hpp"
#include "chainlab/generators.hpp"
#include "chainlab/parallel.hpp"
#include "chainlab/resonance.hpp"
#include "chainlab/schedule.hpp"

namespace chainlab {

using nlohmann::json;

namespace {

constexpr cplx kI{0.0, 1.0};

CheckVerdict below(std::string name, double observed, double tol) {
  return {std::move(name), observed < tol, observed, tol, json::object()};
}

CheckVerdict at_least(std::string name, double observed, double tol) {
  return {std::move(name), observed >= tol, observed, tol, json::object()};
}

// NaN-safe: a nonfinite json number serializes as null.
json num(double v) { return std::isfinite(v) ? json(v) : json(); }

ModelSpec kg(double g = 1.0, std::uint64_t seed = 1) {
  return {ModelKind::KG, g, DisorderSpec{.seed = seed}};
}

ChainState kicked(const DisorderRealization& d, const ModelSpec& m, double E0) {
  InitialCondition ic;
  ic.E0 = E0;
  return build_initial(ic, d, m);
}

double rel(double a, double scale) { return scale > 0.0 ? a / scale : a; }

}  // namespace

json to_json(const CheckVerdict& v) {
  return {{"name", v.name},
          {"passed", v.passed},
          {"observed", num(v.observed)},
          {"tolerance", num(v.tolerance)},
          {"detail", v.detail}};
}

BracketFn default_bracket() {
  return [](const Polynomial& f, const Polynomial& g) { return poisson_bracket(f, g, 0.0); };
}

BracketFn corrupted_bracket() {
  return [](const Polynomial& f, const Polynomial& g) {
    Polynomial b = poisson_bracket(f, g, 0.0), out;
    for (const auto& [m, c] : b.terms()) out.add(m, (m.min_site() & 1) ? -c : c);
    return out;
  };
}

std::vector<CheckVerdict> check_bracket_calculus(const BracketFn& br, int triples,
                                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double anti = 0.0, leib = 0.0, jac = 0.0;
  for (int t = 0; t < triples; ++t) {
    const Polynomial f = gen::random_polynomial(rng, 6, 1, 4, 0, 3);
    const Polynomial g = gen::random_polynomial(rng, 6, 1, 4, 0, 3);
    const Polynomial h = gen::random_polynomial(rng, 6, 1, 4, 0, 3);
    const double sf = f.max_abs_coeff(), sg = g.max_abs_coeff(), sh = h.max_abs_coeff();
    anti = std::max(anti, rel((br(f, g) + br(g, f)).max_abs_coeff(), sf * sg));
    const Polynomial l = br(f, g * h) - (br(f, g) * h + g * br(f, h));
    leib = std::max(leib, rel(l.max_abs_coeff(), sf * sg * sh));
    const Polynomial j = br(f, br(g, h)) + br(g, br(h, f)) + br(h, br(f, g));
    jac = std::max(jac, rel(j.max_abs_coeff(), sf * sg * sh));
  }
  constexpr double tol = 1e-12;
  std::vector<CheckVerdict> out{below("bracket.antisymmetry", anti, tol),
                                below("bracket.leibniz", leib, tol),
                                below("bracket.jacobi", jac, tol)};
  for (auto& v : out) v.detail = {{"triples", triples}, {"seed", seed}};
  return out;
}

CheckVerdict check_bracket_fd(const BracketFn& br, int states, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Interval w{0, 3};
  const auto d = sample_disorder(DisorderSpec{.seed = seed}, w);
  constexpr double h = 1e-5;
  double worst = 0.0;
  for (int t = 0; t < states; ++t) {
    const Polynomial f = gen::random_polynomial(rng, 8, 1, 4, 0, 3);
    const Polynomial g = gen::random_polynomial(rng, 8, 1, 4, 0, 3);
    const ChainState s = gen::random_kg_state(rng, w, 0.7);
    const cplx symbolic = evaluate(br(f, g), to_normal(s, d));
    auto partial = [&](const Polynomial& poly, long k, bool wrt_p) {
      ChainState sp = s, sm = s;
      (wrt_p ? sp.p : sp.q)[k] += h;
      (wrt_p ? sm.p : sm.q)[k] -= h;
      return (evaluate(poly, to_normal(sp, d)) - evaluate(poly, to_normal(sm, d))) / (2.0 * h);
    };
    cplx numeric{};
    for (long k = 0; k < s.size(); ++k)
      numeric += partial(f, k, true) * partial(g, k, false) -
                 partial(f, k, false) * partial(g, k, true);
    worst = std::max(worst, std::abs(symbolic - numeric) / std::max(1.0, std::abs(symbolic)));
  }
  auto v = below("bracket.finite_difference", worst, 1e-6);
  v.detail = {{"states", states}, {"step", h}};
  return v;
}

CheckVerdict check_spectral(const BracketFn& br, int monomials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Interval w{-4, 4};
  const auto d = sample_disorder(DisorderSpec{.seed = seed}, w);
  const Polynomial hhar = expand_h_har(w, d);
  std::uniform_int_distribution<int> deg(1, 8);
  double worst = 0.0;
  long extra_terms = 0;
  for (int t = 0; t < monomials; ++t) {
    const Monomial m = gen::random_monomial(rng, deg(rng), -4, 4);
    const Polynomial b = br(hhar, Polynomial::monomial(m));
    const cplx expected = in_S(m) ? cplx{} : kI * delta(m, d);
    Polynomial diff = b - Polynomial::monomial(m, expected);
    worst = std::max(worst, diff.max_abs_coeff() / std::max(1.0, std::abs(expected)));
    for (const auto& [mono, c] : b.terms())
      if (!(mono == m) && c != cplx{}) ++extra_terms;
  }
  auto v = below("bracket.spectral", worst, 1e-14);
  v.detail = {{"monomials", monomials}, {"off_diagonal_terms", extra_terms}};
  return v;
}

CheckVerdict check_reality(int states, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Interval w{0, 4};
  const auto d = sample_disorder(DisorderSpec{.seed = seed}, w);
  const Polynomial f = gen::random_real_polynomial(rng, 10, 4, 0, 4);
  const Polynomial hhar = expand_h_har(w, d);
  const Polynomial han = expand_h_an(w, kg(), d);
  const Polynomial j = expand_current(2, kg(), d);
  double worst = 0.0;
  for (int t = 0; t < states; ++t) {
    const PhasePoint a = to_normal(gen::random_kg_state(rng, w), d);
    for (const Polynomial* p : {&f, &hhar, &han, &j}) {
      const cplx v = evaluate(*p, a);
      worst = std::max(worst, std::abs(v.imag()) / std::max(1.0, std::abs(v)));
    }
  }
  auto v = below("polynomial.reality", worst, 1e-12);
  v.detail = {{"states", states}};
  return v;
}

CheckVerdict check_s_equivalence(int draws, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> deg(1, 8);
  long mismatches = 0, in_s = 0;
  for (int k = 0; k < draws; ++k) {
    const auto d = sample_disorder(DisorderSpec{.seed = seed * 100000 + k}, {0, 3});
    const Monomial m = gen::random_monomial(rng, 2 * (deg(rng) / 2 + 1), 0, 3);
    const bool s = in_S(m);
    in_s += s;
    if (s != (std::abs(delta(m, d)) < 1e-13)) ++mismatches;
  }
  CheckVerdict v{"polynomial.s_iff_zero_delta", mismatches == 0, static_cast<double>(mismatches),
                 0.0, {{"draws", draws}, {"in_S", in_s}}};
  return v;
}

CheckVerdict check_current_oracle(int states, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Interval w{-3, 3};
  const auto d = sample_disorder(DisorderSpec{.seed = seed}, w);
  json per_model = json::object();
  double worst = 0.0;
  for (const ModelKind kind : {ModelKind::KG, ModelKind::DNLS}) {
    const ModelSpec m{kind, 0.9, DisorderSpec{.seed = seed}};
    const Polynomial jb =
        poisson_bracket(expand_local_energy(-1, m, d), expand_local_energy(0, m, d));
    double w_model = 0.0;
    for (int t = 0; t < states; ++t) {
      const ChainState s = kind == ModelKind::KG ? gen::random_kg_state(rng, w)
                                                 : gen::random_dnls_state(rng, w);
      const double direct = current(s, d, m, 0);
      const cplx sym = evaluate(jb, to_normal(s, d));
      w_model = std::max(w_model, std::abs(sym - direct) / std::max(1.0, std::abs(direct)));
    }
    per_model[to_string(kind)] = w_model;
    worst = std::max(worst, w_model);
  }
  auto v = below("lattice.current_oracle", worst, 1e-10);
  v.detail = {{"states_per_model", states}, {"per_model", per_model}};
  return v;
}

CheckVerdict check_decomposition(const std::vector<long>& xs, const std::vector<int>& ns,
                                 const std::vector<std::uint64_t>& seeds, double g, int workers) {
  struct Task {
    std::uint64_t seed;
    long x;
    int n;
  };
  std::vector<Task> tasks;
  for (auto s : seeds)
    for (long x : xs)
      for (int n : ns) tasks.push_back({s, x, n});
  std::vector<IdentityResidual> res(tasks.size());
  parallel_for(tasks.size(), workers, [&](size_t k) {
    const Task& t = tasks[k];
    const ModelSpec m = kg(g, t.seed);
    const auto d = sample_disorder(m.disorder, {t.x - t.n - 3, t.x + t.n + 3});
    res[k] = identity_residual(build_recursive(t.x, t.n, d, m), d, m);
  });
  double worst = 0.0;
  std::map<long, double> per_x;
  std::map<int, double> per_n;
  json worst_case;
  for (size_t k = 0; k < tasks.size(); ++k) {
    const double r = res[k].relative_to_j();
    per_x[tasks[k].x] = std::max(per_x[tasks[k].x], r);
    per_n[tasks[k].n] = std::max(per_n[tasks[k].n], r);
    if (r >= worst) {
      worst = r;
      worst_case = {{"seed", tasks[k].seed}, {"x", tasks[k].x}, {"n", tasks[k].n},
                    {"relative_to_terms", res[k].relative_to_terms()}};
    }
  }
  auto v = below("expansion.decomposition_identity", worst, 1e-10);
  json px = json::array(), pn = json::array();
  for (const auto& [x, r] : per_x) px.push_back({{"x", x}, {"max_relative_residual", r}});
  for (const auto& [n, r] : per_n) pn.push_back({{"n", n}, {"max_relative_residual", r}});
  v.detail = {{"g", g}, {"cases", tasks.size()}, {"per_x", px}, {"per_n", pn},
              {"worst", worst_case}};
  return v;
}

CheckVerdict check_scheme_identities(const std::vector<std::uint64_t>& seeds, int n) {
  double worst_har = 0.0, worst_an = 0.0;
  for (auto seed : seeds) {
    const ModelSpec m = kg(1.0, seed);
    const auto d = sample_disorder(m.disorder, {-n - 3, n + 3});
    const ExpansionResult r = build_recursive(0, n, d, m);
    for (int i = 1; i <= n; ++i) {
      const Polynomial& u = r.u_terms[i - 1];
      const Interval s = u.support();
      const Polynomial hh = poisson_bracket(expand_h_har(s, d), u, 0.0);
      const Polynomial ha =
          poisson_bracket(expand_h_an({s.left - 1, s.right + 1}, m, d), u, 0.0);
      const Polynomial& f = r.f_terms[i - 1];
      const Polynomial& f1 = r.f_terms[i];
      worst_har = std::max(worst_har, max_coeff_difference(hh, f * cplx{-1.0}) / f.max_abs_coeff());
      worst_an = std::max(worst_an, max_coeff_difference(ha, f1) / f1.max_abs_coeff());
    }
  }
  auto v = below("expansion.scheme_identities", std::max(worst_har, worst_an), 1e-12);
  v.detail = {{"h_har", worst_har}, {"h_an", worst_an}, {"n", n}};
  return v;
}

CheckVerdict check_ladder(const std::vector<long>& xs, int n,
                          const std::vector<std::uint64_t>& seeds) {
  double parity = 0.0;
  long degree_bad = 0, support_bad = 0;
  for (auto seed : seeds) {
    const ModelSpec m = kg(1.0, seed);
    const auto d = sample_disorder(m.disorder, {-n - 6, n + 6});
    for (long x : xs) {
      const ExpansionResult r = build_recursive(x, n, d, m);
      for (int i = 1; i <= n; ++i) {
        const Polynomial& f = r.f_terms[i - 1];
        const Polynomial& u = r.u_terms[i - 1];
        if (f.min_degree() != 2 * (i + 1) || f.max_degree() != 2 * (i + 1)) ++degree_bad;
        if (u.min_degree() != 2 * (i + 1) || u.max_degree() != 2 * (i + 1)) ++degree_bad;
        const Interval allowed{x - i, x + i - 1};
        if (!allowed.contains(f.support()) || !allowed.contains(u.support())) ++support_bad;
        parity = std::max(parity, (p_operator(f) + f).max_abs_coeff() / f.max_abs_coeff());
        parity = std::max(parity, (p_operator(u) - u).max_abs_coeff() / u.max_abs_coeff());
      }
    }
  }
  CheckVerdict v = below("expansion.degree_parity_ladder", parity, 1e-12);
  v.passed = v.passed && degree_bad == 0 && support_bad == 0;
  v.detail = {{"degree_violations", degree_bad}, {"support_violations", support_bad}, {"n", n}};
  return v;
}

CheckVerdict check_explicit(const std::vector<long>& xs, const std::vector<std::uint64_t>& seeds,
                            int workers) {
  std::vector<std::pair<std::uint64_t, long>> tasks;
  for (auto s : seeds)
    for (long x : xs) tasks.push_back({s, x});
  std::vector<double> worst(tasks.size(), 0.0);
  parallel_for(tasks.size(), workers, [&](size_t k) {
    const ModelSpec m = kg(1.0, tasks[k].first);
    const long x = tasks[k].second;
    const auto d = sample_disorder(m.disorder, {x - 6, x + 6});
    const ExpansionResult r = build_recursive(x, 3, d, m);
    for (int i = 2; i <= 3; ++i) {
      const ExplicitTerms e = build_explicit(x, i, d, m);
      const Polynomial& f = r.f_terms[i - 1];
      worst[k] = std::max(worst[k], max_coeff_difference(e.f, f) / f.max_abs_coeff());
    }
  });
  auto v = below("expansion.explicit_vs_recursive", *std::max_element(worst.begin(), worst.end()),
                 1e-11);
  v.detail = {{"cases", tasks.size()}, {"orders", {2, 3}}};
  return v;
}

CheckVerdict check_term_counts(std::uint64_t seed, int n) {
  const ModelSpec m = kg(1.0, seed);
  const auto d = sample_disorder(m.disorder, {-n - 3, n + 3});
  const TermCountFit fit = term_count_fit(build_recursive(0, n, d, m));
  CheckVerdict v{"expansion.term_count_growth", std::isfinite(fit.c) && fit.c > 0.0, fit.c, 0.0,
                 {{"counts", fit.counts}, {"c_i", fit.c_i}}};
  return v;
}

std::vector<CheckVerdict> check_conservation(ModelKind kind, const std::vector<double>& E0s,
                                             double T, double energy_tol, double norm_tol,
                                             std::uint64_t seed, int workers) {
  const ModelSpec m{kind, 1.0, DisorderSpec{.seed = seed}};
  IntegratorSpec spec = IntegratorSpec::defaults(kind);
  spec.energy_drift_tol = 1.0;  // measure, do not abort
  const SamplingGrid grid{SamplingGrid::Kind::Uniform, T / 1000.0};
  std::vector<double> drift(E0s.size()), norm(E0s.size(), 0.0);
  parallel_for(E0s.size(), workers, [&](size_t k) {
    const auto d = sample_disorder(m.disorder, {-64, 64});
    const TrajectoryRecord r = run(kicked(d, m, E0s[k]), d, m, spec, T, grid);
    drift[k] = r.max_energy_drift;
    for (double v : r.norm) norm[k] = std::max(norm[k], std::abs(v - r.norm[0]) / r.norm[0]);
  });
  const std::string tag = kind == ModelKind::KG ? "kg" : "dnls";
  json per = json::array();
  for (size_t k = 0; k < E0s.size(); ++k)
    per.push_back({{"E0", E0s[k]}, {"energy_drift", drift[k]},
                   {"norm_drift", kind == ModelKind::DNLS ? json(norm[k]) : json()}});
  const json detail = {{"scheme", to_string(spec.scheme)}, {"step", spec.step}, {"T", T},
                       {"per_E0", per}};
  std::vector<CheckVerdict> out{
      below("dynamics.conservation." + tag + ".energy",
            *std::max_element(drift.begin(), drift.end()), energy_tol)};
  if (kind == ModelKind::DNLS)
    out.push_back(below("dynamics.conservation.dnls.norm",
                        *std::max_element(norm.begin(), norm.end()), norm_tol));
  for (auto& v : out) v.detail = detail;
  return out;
}

CheckVerdict check_verlet_order(double h, double T, std::uint64_t seed) {
  const ModelSpec m = kg(1.0, seed);
  const auto d = sample_disorder(m.disorder, {-64, 64});
  auto drift = [&](double step) {
    IntegratorSpec spec;
    spec.step = step;
    spec.energy_drift_tol = 1.0;
    return run(kicked(d, m, 1.0), d, m, spec, T, SamplingGrid{SamplingGrid::Kind::Uniform, 0.5})
        .max_energy_drift;
  };
  const double a = drift(h), b = drift(0.5 * h);
  const double ratio = a / b;
  CheckVerdict v{"dynamics.verlet_order", std::abs(ratio / 4.0 - 1.0) <= 0.2, ratio, 4.0,
                 {{"drift_h", a}, {"drift_half_h", b}, {"h", h}, {"T", T}, {"band", 0.2}}};
  return v;
}

CheckVerdict check_continuity(int probes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  json per_model = json::object();
  for (const ModelKind kind : {ModelKind::KG, ModelKind::DNLS}) {
    const ModelSpec m{kind, 1.0, DisorderSpec{.seed = seed}};
    const auto d = sample_disorder(m.disorder, {-64, 64});
    const IntegratorSpec spec = IntegratorSpec::defaults(kind);
    const double h2 = spec.step * spec.step;
    ChainState s = kicked(d, m, 1.0);
    Integrator integ(d, m, spec, 1.0);
    std::uniform_real_distribution<double> gap(0.1, 2.0);
    std::uniform_int_distribution<long> site(-4, 4);
    double w_model = 0.0;
    for (int k = 0; k < probes / 2; ++k) {
      integ.advance_to(s, s.time + gap(rng));
      const ContinuityProbe p = continuity_probe(s, d, m, spec, site(rng));
      w_model = std::max(w_model, p.residual() / (h2 * p.scale));
    }
    per_model[to_string(kind)] = w_model;
    worst = std::max(worst, w_model);
  }
  auto v = below("dynamics.continuity", worst, 10.0);
  v.detail = {{"probes", probes}, {"per_model", per_model},
              {"observed_is", "max residual / (h^2 local scale)"}};
  return v;
}

CheckVerdict check_trajectory_invariants(const std::vector<std::uint64_t>& seeds, double T) {
  double worst = 0.0;
  std::string error;
  for (const ModelKind kind : {ModelKind::KG, ModelKind::DNLS})
    for (auto seed : seeds) {
      const ModelSpec m{kind, 1.0, DisorderSpec{.seed = seed}};
      const auto d = sample_disorder(m.disorder, {-64, 64});
      try {
        const TrajectoryRecord r = run(kicked(d, m, 1.0), d, m, IntegratorSpec::defaults(kind), T,
                                       SamplingGrid{SamplingGrid::Kind::Uniform, 0.25});
        for (double b : r.current_bound_ratio) worst = std::max(worst, b);
      } catch (const InvariantViolation& e) {
        error = e.what();
      }
    }
  CheckVerdict v = below("dynamics.sandwich_and_current_bound", worst, 1.0 + 1e-12);
  v.passed = v.passed && error.empty();
  v.detail = {{"observed_is", "max |j_x| / bound"}, {"T", T}};
  if (!error.empty()) v.detail["invariant_violation"] = error;
  return v;
}

std::vector<CheckVerdict> check_resonance_properties(const std::vector<std::uint64_t>& seeds) {
  long local_bad = 0, mono_bad = 0;
  double agree = 0.0;
  for (auto seed : seeds) {
    const auto d = sample_disorder(DisorderSpec{.seed = seed}, {-30, 30});
    const long x = 4;
    for (int n = 1; n <= 3; ++n) {
      Eigen::VectorXd w2 = d.omega_sq_values();
      for (long y = -30; y <= 30; ++y)
        if (y < x - n || y > x + n - 1) w2[y + 30] = 0.5 + std::fmod(0.37 * (y + 100), 1.0);
      const auto e = DisorderRealization::from_values(d.spec(), -30, w2);
      const ContractibleSet& cs = contractible_set(n);
      if (min_abs_delta(x, cs, d) != min_abs_delta(x, cs, e)) ++local_bad;
    }
    const Interval w{-20, 20};
    for (int n = 1; n <= 3; ++n) {
      const auto a = scan_resonances(w, n, 0.02, d);
      const auto b = scan_resonances(w, n, 0.08, d);
      for (size_t k = 0; k < a.resonant.size(); ++k) mono_bad += a.resonant[k] && !b.resonant[k];
      if (n < 3) {
        const auto c = scan_resonances(w, n + 1, 0.02, d);
        for (size_t k = 0; k < a.resonant.size(); ++k) mono_bad += a.resonant[k] && !c.resonant[k];
      }
      a.check_invariants();
    }
    const ModelSpec m = kg(1.0, seed);
    for (int n = 1; n <= 3; ++n) {
      const auto rep = scan_resonances({-2, 2}, n, 0.05, d);
      for (long y = -2; y <= 2; ++y)
        agree = std::max(agree, std::abs(rep.min_delta[y + 2] -
                                         build_recursive(y, n, d, m).min_abs_delta));
    }
  }
  return {CheckVerdict{"resonance.locality", local_bad == 0, static_cast<double>(local_bad), 0.0,
                       json::object()},
          CheckVerdict{"resonance.monotone", mono_bad == 0, static_cast<double>(mono_bad), 0.0,
                       json::object()},
          below("resonance.agrees_with_expansion", agree, 1e-12 + 1e-300)};
}

std::vector<CheckVerdict> check_divisor_density(const std::vector<Monomial>& patterns,
                                       const std::vector<double>& grid, long samples,
                                       std::uint64_t seed, int workers) {
  const DisorderSpec spec{.seed = seed};
  double worst = 0.0;
  json per = json::array();
  for (const Monomial& p : patterns) {
    const auto r = mc_small_denominator(p, grid, samples, spec, workers);
    double max_low = 0.0, min_high = kInfinity;
    json ratios = json::array();
    for (const auto& pt : r.points) {
      max_low = std::max(max_low, pt.p.ci_low / pt.delta);
      min_high = std::min(min_high, pt.p.ci_high / pt.delta);
      ratios.push_back(pt.ratio);
    }
    const double spread = max_low / min_high;
    worst = std::max(worst, spread);
    per.push_back({{"pattern", p.to_string()}, {"ratios", ratios}, {"spread", spread}});
  }
  CheckVerdict bounded{"resonance.divisor_ratio_bounded", worst <= kDivisorRatioSpread, worst,
                       kDivisorRatioSpread,
                       {{"samples", samples}, {"grid", grid}, {"patterns", per}}};

  const Monomial diff{{0, 1}, {1, -1}};
  const auto r = mc_small_denominator(diff, grid, samples, spec, workers);
  const double oracle = 2.0 * difference_density_at_zero(spec);
  const auto& first = *std::min_element(r.points.begin(), r.points.end(),
                                        [](auto& a, auto& b) { return a.delta < b.delta; });
  const double z = std::abs(first.ratio - oracle) / first.ratio_se;
  CheckVerdict oracle_v{"resonance.divisor_density_oracle", z <= 3.0, z, 3.0,
                        {{"delta", first.delta}, {"ratio", first.ratio}, {"oracle", oracle},
                         {"standard_error", first.ratio_se}}};
  return {bounded, oracle_v};
}

CheckVerdict check_interval_tail(int n, double delta, const std::vector<long>& lengths,
                                 long samples, std::uint64_t seed, double min_r2, int workers) {
  const auto r = mc_interval_tail(n, delta, lengths, samples, DisorderSpec{.seed = seed}, workers);
  bool all_hit = true;
  json pts = json::array();
  for (const auto& p : r.points) {
    all_hit = all_hit && p.p.hits > 0;
    pts.push_back({{"length", p.length}, {"estimate", p.p.estimate}, {"hits", p.p.hits}});
  }
  CheckVerdict v{"resonance.interval_tail_log_linear", all_hit && r.fit_r2 > min_r2, r.fit_r2,
                 min_r2,
                 {{"n", n}, {"delta", delta}, {"samples", samples}, {"points", pts},
                  {"fitted_base", r.fitted_base}, {"bound_base", r.bound_base},
                  {"exact", r.exact}}};
  return v;
}

std::vector<double> stopping_levels(double E0) {
  std::vector<double> out;
  for (int k = 1; k <= kStoppingLevels; ++k) out.push_back(E0 * std::exp2(-0.25 * k));
  return out;
}

double stopping_constant(const std::vector<double>& t, const std::vector<double>& M, double E0) {
  double c = kInfinity;
  for (double eps : stopping_levels(E0)) {
    const StoppingTimes st = stopping_times(t, M, eps, 2.0 * eps);
    if (std::isfinite(st.t_eps)) c = std::min(c, st.t_eps * eps);
  }
  return c;
}

double threshold_margin(const std::vector<double>& t, const std::vector<double>& M) {
  double margin = kInfinity;
  for (size_t k = 0; k < t.size(); ++k)
    if (t[k] >= 1.0) margin = std::min(margin, M[k] / threshold_eps_of_t(t[k]));
  return margin;
}

std::vector<CheckVerdict> check_desk_monitors(const std::vector<std::uint64_t>& seeds, double g,
                                              double E0, double T, int workers) {
  struct PerSeed {
    double growth = 0.0, sup_T = 0.0, sup_2T = 0.0, stopping = kInfinity, margin = kInfinity;
    double last_crossing = 0.0;
  };
  std::vector<PerSeed> out(seeds.size());
  parallel_for(seeds.size(), workers, [&](size_t k) {
    const ModelSpec m = kg(g, seeds[k]);
    const auto d = sample_disorder(m.disorder, {-64, 64});
    const TrajectoryRecord r =
        run(kicked(d, m, E0), d, m, IntegratorSpec::defaults(ModelKind::KG), 2.0 * T,
            SamplingGrid{SamplingGrid::Kind::Geometric, 1.0, 1.01});
    const LightConeCheck lc = light_cone_check(r, T);
    std::vector<double> t, M;
    for (size_t i = 0; i < r.size() && r.t[i] <= T; ++i) {
      t.push_back(r.t[i]);
      M.push_back(r.M[i]);
    }
    double last = 0.0;
    for (size_t i = 0; i < t.size(); ++i)
      if (t[i] >= 1.0 && M[i] <= threshold_eps_of_t(t[i])) last = t[i];
    out[k] = {lc.growth, lc.at_T.sup, lc.at_2T.sup, stopping_constant(t, M, E0),
              threshold_margin(t, M), last};
  });

  double growth = 0.0, margin = kInfinity;
  std::vector<double> crossed;
  json per = json::array();
  for (size_t k = 0; k < seeds.size(); ++k) {
    growth = std::max(growth, out[k].growth);
    margin = std::min(margin, out[k].margin);
    if (std::isfinite(out[k].stopping)) crossed.push_back(out[k].stopping);
    per.push_back({{"seed", seeds[k]}, {"light_cone_sup_T", out[k].sup_T},
                   {"light_cone_sup_2T", out[k].sup_2T}, {"light_cone_growth", out[k].growth},
                   {"stopping_constant", num(out[k].stopping)},
                   {"threshold_margin", num(out[k].margin)},
                   {"last_threshold_crossing", out[k].last_crossing}});
  }
  double spread = 1.0;
  if (!crossed.empty()) {
    std::vector<double> s = crossed;
    std::sort(s.begin(), s.end());
    const double median = s.size() % 2 ? s[s.size() / 2]
                                       : 0.5 * (s[s.size() / 2 - 1] + s[s.size() / 2]);
    spread = s.front() > 0.0 ? s.front() / median : 0.0;
  }
  const json common = {{"g", g}, {"E0", E0}, {"T", T}, {"per_seed", per}};
  CheckVerdict lc = below("dynamics.light_cone_growth", growth, 2.0);
  CheckVerdict l2 = at_least("dynamics.stopping_constant_seed_stable", spread, kStoppingSeedSpread);
  CheckVerdict th{"dynamics.threshold_overlay", margin > 1.0, margin, 1.0, json::object()};
  for (CheckVerdict* v : {&lc, &l2, &th}) v->detail = common;
  l2.detail["seeds_with_crossings"] = crossed.size();
  l2.detail["levels"] = stopping_levels(E0);
  return {lc, l2, th};
}

CheckVerdict check_schedule_arithmetic() {
  const ScheduleParams p = schedule(std::exp(-8.0));
  auto r = [](double a, double b) { return std::abs(a - b) / std::abs(b); };
  const double worst = std::max({r(p.delta, std::exp(-0.8)), r(p.eps_prime, std::exp(-7.2)),
                                 r(p.phi, std::exp(8.0)),
                                 r(threshold_eps_of_t(std::exp(16.0)), std::exp(-16.0))});
  CheckVerdict v = below("schedule.arithmetic", worst, 1e-12);
  v.passed = v.passed && p.n == 2;
  v.detail = to_json(p);
  return v;
}

std::vector<CheckVerdict> run_verify_suite(const VerifyOptions& o) {
  std::vector<CheckVerdict> out;
  auto add = [&](std::vector<CheckVerdict> v) { out.insert(out.end(), v.begin(), v.end()); };
  add(check_bracket_calculus(o.bracket, 200, 11));
  out.push_back(check_bracket_fd(o.bracket, 100, 17));
  out.push_back(check_spectral(o.bracket, 10000, 23));
  out.push_back(check_reality(100, 37));
  out.push_back(check_s_equivalence(1000, 41));
  out.push_back(check_current_oracle(100, 31));

  out.push_back(check_decomposition({-2, -1, 0, 1, 2}, {1, 2, 3}, {1, 2, 3, 4}, 1.0, o.workers));
  out.push_back(check_decomposition({0}, {4}, {1, 2}, 1.0, o.workers));
  out.back().name += ".n4";
  out.push_back(check_scheme_identities({1, 2}, 3));
  out.push_back(check_ladder({-1, 0, 1}, 3, {1, 2}));
  out.push_back(check_explicit({0, 1}, {5, 6}, o.workers));
  out.push_back(check_term_counts(1, 4));

  const IntegratorSpec declared;
  add(check_conservation(ModelKind::KG, {0.5, 1.0, 4.0}, 200.0, declared.energy_drift_tol, 1e-12,
                         3, o.workers));
  add(check_conservation(ModelKind::DNLS, {0.5, 1.0, 4.0}, 200.0, declared.energy_drift_tol,
                         1e-12, 3, o.workers));
  out.push_back(check_verlet_order(0.01, 200.0, 4));
  out.push_back(check_continuity(200, 21));
  out.push_back(check_trajectory_invariants({1, 2}, 100.0));

  add(check_resonance_properties({2, 9}));
  add(check_divisor_density({Monomial{{0, 1}, {0, 1}, {1, -1}, {1, -1}},
                    Monomial{{0, 1}, {0, 1}, {1, -1}, {2, -1}},
                    Monomial{{0, 1}, {1, -1}, {2, 1}, {3, -1}}},
                   {1e-3, 3e-3, 1e-2, 3e-2, 1e-1}, 100000, 99, o.workers));
  out.push_back(check_interval_tail(1, 0.05, {1, 2, 3, 4, 5, 6}, 100000, 4, 0.95, o.workers));
  add(check_desk_monitors({1, 2, 3, 4}, 1.0, 1.0, 200.0, o.workers));
  out.push_back(check_schedule_arithmetic());
  return out;
}

}  // namespace chainlab
