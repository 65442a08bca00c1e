#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "chainlab/dynamics.hpp"
#include "chainlab/errors.hpp"
#include "chainlab/schedule.hpp"

using namespace chainlab;

namespace {

ChainState kicked(const DisorderRealization& d, const ModelSpec& m, double E0) {
  InitialCondition ic;
  ic.support = {0, 0};
  ic.E0 = E0;
  return build_initial(ic, d, m);
}

}  // namespace

TEST_CASE("maximizer ties go to the largest site") {
  Eigen::VectorXd a(6);
  a << 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;
  CHECK(maximizer(a, 0).site == 5);
  Eigen::VectorXd b(2);
  b << 2.0, 1.0;
  CHECK(maximizer(b, 0).site == 0);
  CHECK(maximizer(b, 0).value == 2.0);
  Eigen::VectorXd c(2);
  c << 1.0, 1.0 - 1e-15;
  CHECK(maximizer(c, 0).site == 1);
  CHECK(maximizer(c, -7).site == -6);
  CHECK_THROWS_AS(maximizer(Eigen::VectorXd(0), 0), ArgumentError);
}

TEST_CASE("harmonic KG site follows the closed form with second-order error") {
  const ModelSpec m{ModelKind::KG, 0.0, DisorderSpec{}};
  const auto d = DisorderRealization::from_values(DisorderSpec{}, -100,
                                                  Eigen::VectorXd::Constant(201, 1.3));
  const double w = std::sqrt(1.3);
  auto error_at = [&](double h) {
    ChainState s = ChainState::zeros(ModelKind::KG, {-3, 3});
    s.q[3] = 0.4;
    s.p[3] = -0.7;
    IntegratorSpec spec;
    spec.step = h;
    Integrator integ(d, m, spec, 1.0);
    integ.advance_to(s, 10.0);
    const double t = s.time;
    const double exact = 0.4 * std::cos(w * t) + (-0.7 / w) * std::sin(w * t);
    return std::abs(s.q_at(0) - exact);
  };
  const double e1 = error_at(0.01), e2 = error_at(0.005);
  CHECK(e1 < 1e-3);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("harmonic DNLS rotation is exact") {
  const ModelSpec m{ModelKind::DNLS, 0.0, DisorderSpec{}};
  const auto d = sample_disorder(DisorderSpec{.seed = 5}, {-40, 40});
  ChainState s = ChainState::zeros(ModelKind::DNLS, {-3, 3});
  for (long k = 0; k < 7; ++k) s.psi[k] = cplx{0.1 * k, -0.05 * k * k};
  const ChainState s0 = s;
  Integrator integ(d, m, IntegratorSpec::defaults(ModelKind::DNLS), 1.0);
  integ.advance_to(s, 7.0);
  for (long x = -3; x <= 3; ++x) {
    const cplx exact = std::polar(1.0, -d.omega(x) * s.time) * s0.psi_at(x);
    CHECK(std::abs(s.psi_at(x) - exact) < 1e-13);
  }
}

TEST_CASE("zero state is a fixed point") {
  for (const ModelKind kind : {ModelKind::KG, ModelKind::DNLS}) {
    const ModelSpec m{kind, 1.0, DisorderSpec{}};
    const auto d = sample_disorder(m.disorder, {-10, 10});
    ChainState s = ChainState::zeros(kind, {-10, 10});
    s = step(s, d, m, IntegratorSpec::defaults(kind));
    if (kind == ModelKind::KG)
      CHECK(s.q.cwiseAbs().maxCoeff() + s.p.cwiseAbs().maxCoeff() == 0.0);
    else
      CHECK(s.psi.cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.window() == Interval{-10, 10});
  }
}

TEST_CASE("run records the initial sample and obeys the invariants") {
  for (const ModelKind kind : {ModelKind::KG, ModelKind::DNLS}) {
    const ModelSpec m{kind, 1.0, DisorderSpec{.seed = 2}};
    const auto d = sample_disorder(m.disorder, {-100, 100});
    const ChainState s = kicked(d, m, 1.0);
    const auto r0 = run(s, d, m, IntegratorSpec::defaults(kind), 0.0, SamplingGrid{});
    REQUIRE(r0.size() == 1);
    CHECK(r0.M[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r0.xmax[0] == 0);

    const auto r = run(s, d, m, IntegratorSpec::defaults(kind), 50.0, SamplingGrid{});
    CHECK(r.t.back() == doctest::Approx(50.0));
    CHECK(r.size() > 70);
    for (size_t k = 1; k < r.size(); ++k) CHECK(r.t[k] > r.t[k - 1]);
    CHECK_NOTHROW(r.check_invariants());
    for (double ratio : r.current_bound_ratio) CHECK(ratio <= 1.0);
    CHECK(r.max_energy_drift < 1e-4);
    if (kind == ModelKind::DNLS)
      for (double n : r.norm) CHECK(std::abs(n - r.norm[0]) < 1e-13);
  }
}

TEST_CASE("decoupled sites keep their energy") {
  const ModelSpec m{ModelKind::KG, 0.0, DisorderSpec{}};
  const auto d = sample_disorder(m.disorder, {-100, 100});
  const auto r = run(kicked(d, m, 1.0), d, m, IntegratorSpec::defaults(ModelKind::KG), 200.0,
                     SamplingGrid{});
  for (size_t k = 0; k < r.size(); ++k) {
    CHECK(std::abs(r.M[k] - 1.0) < 1e-4);
    CHECK(r.xmax[k] == 0);
  }
  CHECK(light_cone(r).sup == 0.0);
  CHECK(r.growth_events == 0);
}

TEST_CASE("invariant checks reject broken records") {
  TrajectoryRecord r;
  r.t = {0.0};
  r.M = {2.0};
  r.Htot = {1.0};
  r.r2 = {1.0};
  r.xmax = {0};
  CHECK_THROWS_AS(r.check_invariants(), InvariantViolation);
  r.M = {0.5};
  r.r2 = {10.0};
  CHECK_THROWS_AS(r.check_invariants(), InvariantViolation);
  r.r2 = {3.0};
  CHECK_NOTHROW(r.check_invariants());
}

TEST_CASE("window grows before energy reaches the edge") {
  const ModelSpec m{ModelKind::KG, 1.0, DisorderSpec{.seed = 9}};
  const auto d = sample_disorder(m.disorder, {-5, 5});
  ChainState s = ChainState::zeros(ModelKind::KG, {-20, 20});
  s.p[20] = 2.0;
  IntegratorSpec spec;
  Integrator integ(d, m, spec, 2.0);
  integ.advance_to(s, 100.0);
  CHECK(integ.growth_events() > 0);
  CHECK(s.window().left < -20);
  const auto dd = d.covering(s.window());
  for (long k = 0; k < spec.growth_margin; ++k) {
    CHECK(local_energy(s, dd, m, s.window().left + k) <= 2.0 * spec.growth_trigger * 2.0);
  }
}

TEST_CASE("drift beyond tolerance is reported with a smaller step") {
  const ModelSpec m{ModelKind::KG, 1.0, DisorderSpec{}};
  const auto d = sample_disorder(m.disorder, {-100, 100});
  IntegratorSpec spec;
  spec.step = 0.2;
  spec.energy_drift_tol = 1e-12;
  try {
    run(kicked(d, m, 4.0), d, m, spec, 5.0, SamplingGrid{});
    FAIL("expected an integration failure");
  } catch (const IntegrationFailure& e) {
    CHECK(e.drift > 1e-12);
    CHECK(e.suggested_step == doctest::Approx(0.1));
  }
  spec.step = -0.01;
  CHECK_THROWS_AS(spec.validate(ModelKind::KG), ConfigError);
  IntegratorSpec wrong;
  wrong.scheme = Scheme::StrangSplit;
  CHECK_THROWS_AS(wrong.validate(ModelKind::KG), ConfigError);
}

TEST_CASE("Verlet energy error is second order and Yoshida is smaller") {
  const ModelSpec m{ModelKind::KG, 1.0, DisorderSpec{.seed = 4}};
  const auto d = sample_disorder(m.disorder, {-100, 100});
  auto drift = [&](Scheme scheme, double h) {
    IntegratorSpec spec;
    spec.scheme = scheme;
    spec.step = h;
    spec.energy_drift_tol = 1.0;
    SamplingGrid grid{SamplingGrid::Kind::Uniform, 0.5};
    return run(kicked(d, m, 1.0), d, m, spec, 200.0, grid).max_energy_drift;
  };
  const double a = drift(Scheme::VelocityVerlet, 0.02), b = drift(Scheme::VelocityVerlet, 0.01);
  CHECK(a / b == doctest::Approx(4.0).epsilon(0.2));
  CHECK(drift(Scheme::Yoshida4, 0.01) < 0.05 * b);
}

TEST_CASE("continuity equation holds along a trajectory") {
  std::mt19937_64 rng(21);
  for (const ModelKind kind : {ModelKind::KG, ModelKind::DNLS}) {
    const ModelSpec m{kind, 1.0, DisorderSpec{.seed = 6}};
    const auto d = sample_disorder(m.disorder, {-100, 100});
    const IntegratorSpec spec = IntegratorSpec::defaults(kind);
    ChainState s = kicked(d, m, 1.0);
    Integrator integ(d, m, spec, 1.0);
    for (int k = 0; k < 40; ++k) {
      integ.advance_to(s, s.time + 1.0);
      const long x = std::uniform_int_distribution<long>(-4, 4)(rng);
      const ContinuityProbe p = continuity_probe(s, d, m, spec, x);
      CHECK(p.residual() <= 10.0 * spec.step * spec.step * p.scale);
    }
  }
}

TEST_CASE("stopping times") {
  std::vector<double> t, M;
  for (int k = 0; k <= 40; ++k) {
    t.push_back(0.1 * k);
    M.push_back(std::exp(-0.1 * k));
  }
  const StoppingTimes st = stopping_times(t, M, std::exp(-2.0), std::exp(-1.0));
  CHECK(st.t_eps == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(st.t_eps_epsprime == doctest::Approx(1.0).epsilon(1e-12));

  // Off-grid levels are interpolated linearly in log M.
  const StoppingTimes st2 = stopping_times(t, M, std::exp(-2.03), std::exp(-1.07));
  CHECK(st2.t_eps == doctest::Approx(2.03).epsilon(1e-12));
  CHECK(st2.t_eps_epsprime == doctest::Approx(1.07).epsilon(1e-12));

  const StoppingTimes never = stopping_times(t, M, 1e-3, 1e-2);
  CHECK(std::isinf(never.t_eps));
  CHECK(std::isinf(never.t_eps_epsprime));
  CHECK_THROWS_AS(stopping_times(t, M, 0.1, 0.1), ArgumentError);
  CHECK_THROWS_AS(stopping_times(t, M, 0.2, 0.1), ArgumentError);

  // A bump back above eps_prime before the crossing moves t_{eps,eps'} later.
  std::vector<double> t3{0, 1, 2, 3, 4}, M3{1.0, 0.3, 0.6, 0.3, 0.05};
  const StoppingTimes st3 = stopping_times(t3, M3, 0.1, 0.5);
  CHECK(st3.t_eps > 3.0);
  CHECK(st3.t_eps < 4.0);
  CHECK(st3.t_eps_epsprime > 2.0);
  CHECK(st3.t_eps_epsprime < 3.0);
}

TEST_CASE("light cone report") {
  TrajectoryRecord r;
  r.t = {0.0, 0.5, 1.0, 2.0, 4.0};
  r.M = {1.0, 1.0, 0.8, 0.5, 0.5};
  r.xmax = {0, 3, 1, -4, 4};
  const LightConeReport rep = light_cone(r);
  CHECK(rep.samples == 3);
  CHECK(rep.sup == doctest::Approx(1.0));
  CHECK(rep.argmax_t == 2.0);
  const LightConeCheck c = light_cone_check(r, 2.0);
  CHECK(c.growth == doctest::Approx(1.0));
  CHECK(c.stable);
  CHECK(light_cone(r, 1.5).sup == doctest::Approx(0.8));
}

TEST_CASE("sampling grids") {
  const auto g = SamplingGrid{}.times(10.0);
  CHECK(g.front() == 0.0);
  CHECK(g[1] == 1.0);
  CHECK(g[2] == doctest::Approx(1.05));
  CHECK(g.back() == 10.0);
  const auto u = SamplingGrid{SamplingGrid::Kind::Uniform, 2.5}.times(10.0);
  CHECK(u == std::vector<double>{0.0, 2.5, 5.0, 7.5, 10.0});
  CHECK(SamplingGrid{}.times(0.0).size() == 1);
  CHECK_THROWS_AS((SamplingGrid{SamplingGrid::Kind::Geometric, 1.0, 1.0}.times(3.0)), ConfigError);
}

TEST_CASE("trajectory CSV schema") {
  const ModelSpec m{ModelKind::KG, 1.0, DisorderSpec{}};
  const auto d = sample_disorder(m.disorder, {-100, 100});
  const auto r = run(kicked(d, m, 1.0), d, m, IntegratorSpec{}, 3.0, SamplingGrid{});
  std::ostringstream os;
  write_csv(r, os);
  std::istringstream is(os.str());
  std::string header, first;
  std::getline(is, header);
  std::getline(is, first);
  CHECK(header == "t,M,xmax,q2,r2,Htot,win_lo,win_hi,eps_threshold");
  std::vector<std::string> cells;
  std::istringstream row(first);
  for (std::string c; std::getline(row, c, ',');) cells.push_back(c);
  REQUIRE(cells.size() == 9);
  CHECK(cells[0] == "0");
  CHECK(std::stod(cells[1]) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(cells[2] == "0");
  CHECK(cells[6] == "-64");
  CHECK(cells[7] == "64");
  CHECK(cells[8] == "nan");
  const auto j = to_json(r);
  CHECK(j["t"].size() == r.size());
  CHECK(j["eps_threshold"][0].is_null());
  CHECK(j["eps_threshold"].back().get<double>() == doctest::Approx(threshold_eps_of_t(3.0)));
}
