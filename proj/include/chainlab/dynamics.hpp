#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "chainlab/lattice.hpp"
#include "json.hpp"

namespace chainlab {

// velocity-verlet and yoshida4 integrate KG; strang-split (exact rotation
// around an implicit-midpoint nonlinear stage) and implicit-midpoint (whole
// vector field) integrate DNLS.
enum class Scheme { VelocityVerlet, Yoshida4, StrangSplit, ImplicitMidpoint };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);
bool scheme_supports(Scheme s, ModelKind kind);

struct IntegratorSpec {
  Scheme scheme = Scheme::VelocityVerlet;
  double step = 0.01;
  // Relative |Htot(t) - Htot(0)| / Htot(0) allowed before a run aborts.
  double energy_drift_tol = 1e-4;
  long growth_margin = 16;
  // Relative to E0: growth fires when a guard site exceeds growth_trigger * E0.
  double growth_trigger = 1e-14;
  long growth_chunk = 64;
  double midpoint_tol = 1e-13;
  int midpoint_max_iter = 50;

  static IntegratorSpec defaults(ModelKind kind);
  void validate(ModelKind kind) const;
};

// Advances states of one model in place, keeping an omega cache aligned with
// the state window and growing the window when energy reaches the guard band.
class Integrator {
 public:
  Integrator(const DisorderRealization& disorder, const ModelSpec& model,
             const IntegratorSpec& spec, double E0);

  void step(ChainState& s);
  // Steps until s.time >= t - step/2 (so repeated calls on a grid never drift).
  long advance_to(ChainState& s, double t);
  // Grows the window if energy sits in the guard band; returns true if grown.
  bool maybe_grow(ChainState& s);

  const IntegratorSpec& spec() const { return spec_; }
  long growth_events() const { return growth_events_; }
  int last_midpoint_iterations() const { return last_iterations_; }

 private:
  void sync(const ChainState& s);
  void kg_kick(ChainState& s, double h);
  void kg_drift(ChainState& s, double h);
  void kg_verlet(ChainState& s, double h);
  void dnls_rotate(ChainState& s, double t0, double t1);
  void dnls_nonlinear_midpoint(ChainState& s, double h);
  void dnls_full_midpoint(ChainState& s, double h);
  void dnls_field(const Eigen::VectorXcd& psi, Eigen::VectorXcd& out, bool with_linear) const;

  DisorderRealization disorder_;
  ModelSpec model_;
  IntegratorSpec spec_;
  double E0_;
  long cache_offset_ = 0;
  Eigen::VectorXd omega_sq_;
  Eigen::VectorXd omega_;
  Eigen::VectorXcd phase_;
  double phase_time_ = 0.0;
  Eigen::VectorXcd work_a_, work_b_, work_c_;
  long growth_events_ = 0;
  int last_iterations_ = 0;
};

// One step on a copy (grows the window if needed). Throws IntegrationFailure
// when the relative energy change over the step exceeds energy_drift_tol.
ChainState step(ChainState state, const DisorderRealization& disorder, const ModelSpec& model,
                const IntegratorSpec& spec);

struct SamplingGrid {
  enum class Kind { Uniform, Geometric };
  Kind kind = Kind::Geometric;
  double dt = 1.0;
  double ratio = 1.05;

  // Requested times in [0, T]: 0, then dt multiples or ratio^k (k >= 0), then T.
  std::vector<double> times(double T) const;
  void validate() const;
};

struct TrajectoryRecord {
  ModelKind kind = ModelKind::KG;
  double E0 = 0.0;
  std::vector<double> t, M, q2, r2, Htot, eps_threshold;
  std::vector<long> xmax;
  std::vector<Interval> window;
  // DNLS only: sum |psi|^2 per sample.
  std::vector<double> norm;
  // max_x |j_x| / (C (H_{x-1}^2 + H_x^2 + H_{x-1} + H_x)) per sample.
  std::vector<double> current_bound_ratio;
  double max_energy_drift = 0.0;
  long steps = 0;
  long growth_events = 0;

  size_t size() const { return t.size(); }
  // Throws InvariantViolation if M > Htot or the r2 sandwich fails.
  void check_invariants() const;
};

struct Maximizer {
  long site = 0;
  double value = 0.0;
};

inline constexpr double kTieTolerance = 1e-12;

// Largest site whose value is within tie_tol (relative) of the maximum.
Maximizer maximizer(const Eigen::VectorXd& profile, long offset, double tie_tol = kTieTolerance);

struct Observables {
  double M = 0.0;
  long xmax = 0;
  double q2 = 0.0;
  double r2 = 0.0;
  double Htot = 0.0;
};
Observables observe(const Eigen::VectorXd& energies, long offset);

double current_bound_ratio(const ChainState& s, const DisorderRealization& d, const ModelSpec& m);

// Integrates from `state` over [state.time, state.time + T] sampling on the grid
// (grid times are offsets from the start).
TrajectoryRecord run(ChainState state, const DisorderRealization& disorder, const ModelSpec& model,
                     const IntegratorSpec& spec, double T, const SamplingGrid& grid);

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct StoppingTimes {
  double eps = 0.0;
  double eps_prime = 0.0;
  double t_eps = kInfinity;
  double t_eps_epsprime = kInfinity;
};

// First time M <= eps and the last earlier time M >= eps_prime, both
// interpolated linearly in log M between samples.
StoppingTimes stopping_times(const std::vector<double>& t, const std::vector<double>& M, double eps,
                             double eps_prime);
StoppingTimes stopping_times(const TrajectoryRecord& r, double eps, double eps_prime);

struct LightConeReport {
  double sup = 0.0;
  double argmax_t = 0.0;
  long samples = 0;
};

// sup over samples with t >= 1 (and t <= horizon) of M(t) |x(t)| / t.
LightConeReport light_cone(const TrajectoryRecord& r, double horizon = kInfinity);

struct LightConeCheck {
  LightConeReport at_T;
  LightConeReport at_2T;
  double growth = 0.0;
  bool stable = false;
};
// Compares the supremum up to T with the supremum up to 2T of one record.
LightConeCheck light_cone_check(const TrajectoryRecord& r, double T, double max_growth = 2.0);

// One integrator step from s compared with the continuity equation at site x:
// lhs = (H_x(t+h) - H_x(t))/h, rhs = trapezoid average of j_x - j_{x+1} over
// the step, scale = H_{x-1} + H_x + H_{x+1} at time t.
struct ContinuityProbe {
  long site = 0;
  double t = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double scale = 0.0;
  double residual() const { return std::abs(lhs - rhs); }
};
ContinuityProbe continuity_probe(const ChainState& s, const DisorderRealization& d,
                                 const ModelSpec& m, const IntegratorSpec& spec, long x);

void write_csv(const TrajectoryRecord& r, std::ostream& os);
nlohmann::json to_json(const TrajectoryRecord& r);

}  // namespace chainlab
