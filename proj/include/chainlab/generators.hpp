#pragma once

// Seeded random polynomials, monomials and states shared by the verification
// suite and the tests.

#include <random>

#include "chainlab/lattice.hpp"
#include "chainlab/polynomial.hpp"

namespace chainlab::gen {

inline Monomial random_monomial(std::mt19937_64& rng, int degree, long lo, long hi) {
  std::uniform_int_distribution<long> site(lo, hi);
  std::bernoulli_distribution coin(0.5);
  std::vector<Factor> f;
  for (int k = 0; k < degree; ++k) f.push_back({site(rng), coin(rng) ? 1 : -1});
  return Monomial(std::span<const Factor>(f));
}

inline Polynomial random_polynomial(std::mt19937_64& rng, int terms, int min_degree,
                                    int max_degree, long lo, long hi) {
  std::uniform_int_distribution<int> deg(min_degree, max_degree);
  std::normal_distribution<double> gauss;
  Polynomial f;
  for (int t = 0; t < terms; ++t)
    f.add(random_monomial(rng, deg(rng), lo, hi), cplx{gauss(rng), gauss(rng)});
  return f;
}

// Polynomial whose coefficients satisfy conj(F(x, s)) = F(x, -s).
inline Polynomial random_real_polynomial(std::mt19937_64& rng, int terms, int degree, long lo,
                                         long hi) {
  std::normal_distribution<double> gauss;
  Polynomial f;
  for (int t = 0; t < terms; ++t) {
    const Monomial m = random_monomial(rng, degree, lo, hi);
    const cplx c{gauss(rng), gauss(rng)};
    f.add(m, c);
    f.add(m.flipped(), std::conj(c));
  }
  return f;
}

inline ChainState random_kg_state(std::mt19937_64& rng, Interval window, double scale = 1.0) {
  ChainState s = ChainState::zeros(ModelKind::KG, window);
  std::normal_distribution<double> gauss(0.0, scale);
  for (long k = 0; k < s.size(); ++k) {
    s.q[k] = gauss(rng);
    s.p[k] = gauss(rng);
  }
  return s;
}

inline ChainState random_dnls_state(std::mt19937_64& rng, Interval window, double scale = 1.0) {
  ChainState s = ChainState::zeros(ModelKind::DNLS, window);
  std::normal_distribution<double> gauss(0.0, scale);
  for (long k = 0; k < s.size(); ++k) s.psi[k] = cplx{gauss(rng), gauss(rng)};
  return s;
}

}  // namespace chainlab::gen
