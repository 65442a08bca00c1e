#include "doctest.h"

#include <cmath>
#include <random>

#include "chainlab/errors.hpp"
#include "chainlab/lattice.hpp"
#include "support.hpp"

using namespace chainlab;

namespace {

ChainState kg_state(long left, std::initializer_list<double> q, std::initializer_list<double> p) {
  ChainState s = ChainState::zeros(ModelKind::KG, {left, left + static_cast<long>(q.size()) - 1});
  long k = 0;
  for (double v : q) s.q[k++] = v;
  k = 0;
  for (double v : p) s.p[k++] = v;
  return s;
}

DisorderRealization constant_disorder(Interval w, double omega_sq) {
  return DisorderRealization::from_values(DisorderSpec{}, w.left,
                                          Eigen::VectorXd::Constant(w.size(), omega_sq));
}

}  // namespace

TEST_CASE("disorder support, determinism and mean") {
  DisorderSpec spec;
  spec.seed = 77;
  const auto a = sample_disorder(spec, {0, 9});
  const auto b = sample_disorder(spec, {0, 19});
  for (long x = 0; x <= 9; ++x) CHECK(a.omega_sq(x) == b.omega_sq(x));
  for (long x = 0; x <= 19; ++x) {
    CHECK(b.omega_sq(x) >= 0.5);
    CHECK(b.omega_sq(x) <= 1.5);
  }
  // Sites beyond the stored window come from the same keyed sampler.
  CHECK(a.omega_sq(15) == b.omega_sq(15));
  CHECK(a.covering({-5, 30}).omega_sq(3) == a.omega_sq(3));

  const auto big = sample_disorder(spec, {0, 999999});
  CHECK(big.omega_sq_values().mean() == doctest::Approx(1.0).epsilon(0.005));
  CHECK(big.omega_sq_values().minCoeff() >= 0.5);
  CHECK(big.omega_sq_values().maxCoeff() <= 1.5);

  CHECK_THROWS_AS(sample_disorder(DisorderSpec{.omega_min_sq = 1.5, .omega_max_sq = 0.5}, {0, 3}),
                  ConfigError);
  CHECK_THROWS_AS(sample_disorder(DisorderSpec{.omega_min_sq = 0.0}, {0, 3}), ConfigError);
  CHECK_THROWS_AS(sample_disorder(spec, {3, 2}), ConfigError);
}

TEST_CASE("smooth-bump density is normalized and sampled inside the support") {
  DisorderSpec spec{.density = DensityKind::SmoothBump, .seed = 3};
  // Independent normalization check with Simpson's rule on a fine grid.
  const int n = 20000;
  const double a = spec.omega_min_sq, b = spec.omega_max_sq, h = (b - a) / n;
  double s = omega_sq_density(spec, a) + omega_sq_density(spec, b);
  for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * omega_sq_density(spec, a + k * h);
  CHECK(std::abs(s * h / 3.0 - 1.0) < 1e-10);

  const auto d = sample_disorder(spec, {0, 99999});
  CHECK(d.omega_sq_values().minCoeff() > 0.5);
  CHECK(d.omega_sq_values().maxCoeff() < 1.5);
  CHECK(d.omega_sq_values().mean() == doctest::Approx(1.0).epsilon(0.003));
}

TEST_CASE("local energy examples") {
  const ModelSpec kg{ModelKind::KG, 1.0, DisorderSpec{}};
  const auto d1 = constant_disorder({0, 1}, 1.0);
  CHECK(local_energy(kg_state(0, {0.0, 0.0}, {2.0, 0.0}), d1, kg, 0) == 2.0);
  const auto d2 = constant_disorder({0, 1}, 2.0);
  CHECK(local_energy(kg_state(0, {1.0, 1.0}, {0.0, 0.0}), d2, kg, 0) == 1.0);
  CHECK(local_energy(kg_state(0, {1.0, 1.0}, {0.0, 0.0}), d2, kg, 7) == 0.0);

  const ModelSpec dnls{ModelKind::DNLS, 4.0, DisorderSpec{}};
  ChainState s = ChainState::zeros(ModelKind::DNLS, {0, 1});
  s.psi[0] = 1.0;
  CHECK(local_energy(s, d1, dnls, 0) == 2.0);
}

TEST_CASE("local energies sum to the Hamiltonian") {
  std::mt19937_64 rng(8);
  const Interval w{-10, 10};
  const auto d = sample_disorder(DisorderSpec{}, w);
  const ModelSpec kg{ModelKind::KG, 0.7, DisorderSpec{}};
  const ChainState s = chainlab::testing::random_kg_state(rng, w);
  double h = 0.0;
  for (long x = w.left; x <= w.right; ++x) {
    h += 0.5 * s.p_at(x) * s.p_at(x) + 0.5 * d.omega_sq(x) * s.q_at(x) * s.q_at(x) +
         0.25 * kg.g * std::pow(s.q_at(x) - s.q_at(x + 1), 4);
  }
  CHECK(total_energy(s, d, kg) == doctest::Approx(h).epsilon(1e-14));
}

TEST_CASE("current examples and bound") {
  const ModelSpec kg{ModelKind::KG, 1.0, DisorderSpec{}};
  const auto d = constant_disorder({0, 1}, 1.0);
  CHECK(current(kg_state(0, {1.0, 0.0}, {0.0, 2.0}), d, kg, 1) == 2.0);
  CHECK(current(kg_state(0, {1.0, 0.3}, {0.5, 0.0}), d, kg, 1) == 0.0);
  CHECK(current(kg_state(0, {1.0, 0.3}, {0.5, 1.0}), d, kg, 0) == 0.0);

  std::mt19937_64 rng(12);
  const Interval w{-6, 6};
  for (const ModelKind kind : {ModelKind::KG, ModelKind::DNLS}) {
    for (double g : {0.3, 1.0, 3.0}) {
      const ModelSpec m{kind, g, DisorderSpec{}};
      const auto dd = sample_disorder(m.disorder, w);
      const double c = current_bound_constant(m);
      for (int t = 0; t < 200; ++t) {
        const double scale = std::exp(std::uniform_real_distribution<>(-4.0, 2.0)(rng));
        const ChainState s = kind == ModelKind::KG
                                 ? chainlab::testing::random_kg_state(rng, w, scale)
                                 : chainlab::testing::random_dnls_state(rng, w, scale);
        for (long x = w.left + 1; x <= w.right; ++x) {
          const double a = local_energy(s, dd, m, x - 1), b = local_energy(s, dd, m, x);
          CHECK(std::abs(current(s, dd, m, x)) <= c * (a * a + b * b + a + b) * (1 + 1e-12));
        }
      }
    }
  }
}

TEST_CASE("initial conditions") {
  const ModelSpec kg{ModelKind::KG, 1.0, DisorderSpec{}};
  const auto d = sample_disorder(DisorderSpec{}, {-80, 80});
  InitialCondition ic;
  ic.support = {0, 0};
  ic.E0 = 1.0;
  const ChainState s = build_initial(ic, d, kg);
  CHECK(s.p_at(0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-16));
  CHECK(s.q.cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.p.cwiseAbs().sum() == doctest::Approx(std::sqrt(2.0)));
  CHECK(local_energy(s, d, kg, 0) == doctest::Approx(1.0).epsilon(1e-14));

  // g = 0 reproduces psi_0 = sqrt(E0 / omega_0); with coupling the bond energy
  // to the empty neighbour is included so that H_0 = E0 still holds.
  const auto d1 = constant_disorder({-80, 80}, 1.0);
  ic.E0 = 0.5;
  const ChainState s0 = build_initial(ic, d1, ModelSpec{ModelKind::DNLS, 0.0, DisorderSpec{}});
  CHECK(std::abs(s0.psi_at(0) - std::sqrt(0.5)) < 1e-16);
  const ModelSpec dnls{ModelKind::DNLS, 1.0, DisorderSpec{}};
  const ChainState s1 = build_initial(ic, d1, dnls);
  CHECK(std::abs(local_energy(s1, d1, dnls, 0) - 0.5) < 1e-15);

  InitialCondition custom;
  custom.support = {-1, 4};
  custom.mode = InitialCondition::Mode::Custom;
  custom.E0 = 1.0;
  Eigen::VectorXd q = Eigen::VectorXd::Zero(6), p = Eigen::VectorXd::Zero(6);
  p[1] = std::sqrt(2.0);
  p[4] = 2.0;
  custom.custom_q = q;
  custom.custom_p = p;
  try {
    build_initial(custom, d, kg);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.site == 3);
  }
  p[4] = 0.5;
  custom.custom_p = p;
  const ChainState ok = build_initial(custom, d, kg);
  CHECK(local_energy(ok, d, kg, 0) == doctest::Approx(1.0));

  ic.E0 = -1.0;
  CHECK_THROWS_AS(build_initial(ic, d, kg), ConfigError);
}

TEST_CASE("window growth keeps values and zero padding") {
  ChainState s = ChainState::zeros(ModelKind::KG, {0, 2});
  s.q << 1, 2, 3;
  s.grow_to({-2, 4});
  CHECK(s.window() == Interval{-2, 4});
  CHECK(s.q_at(0) == 1);
  CHECK(s.q_at(2) == 3);
  CHECK(s.q_at(-2) == 0);
  CHECK(s.q_at(4) == 0);
  CHECK(s.q_at(100) == 0);
}
