#include "chainlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "chainlab/errors.hpp"
#include "chainlab/schedule.hpp"

namespace chainlab {

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::VelocityVerlet: return "velocity-verlet";
    case Scheme::Yoshida4: return "yoshida4";
    case Scheme::StrangSplit: return "strang-split";
    case Scheme::ImplicitMidpoint: return "implicit-midpoint";
  }
  return "?";
}

Scheme scheme_from_string(const std::string& s) {
  for (Scheme k : {Scheme::VelocityVerlet, Scheme::Yoshida4, Scheme::StrangSplit,
                   Scheme::ImplicitMidpoint})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown integrator scheme '" + s + "'");
}

bool scheme_supports(Scheme s, ModelKind kind) {
  const bool kg = s == Scheme::VelocityVerlet || s == Scheme::Yoshida4;
  return kg == (kind == ModelKind::KG);
}

IntegratorSpec IntegratorSpec::defaults(ModelKind kind) {
  IntegratorSpec s;
  if (kind == ModelKind::DNLS) {
    s.scheme = Scheme::StrangSplit;
    s.step = 0.005;
  }
  return s;
}

void IntegratorSpec::validate(ModelKind kind) const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("integrator." + field + ": " + why);
  };
  if (!(step > 0.0) || !std::isfinite(step)) fail("step", "must be > 0");
  if (!(energy_drift_tol > 0.0)) fail("energy_drift_tol", "must be > 0");
  if (growth_margin < 1) fail("growth_margin", "must be >= 1");
  if (!(growth_trigger > 0.0)) fail("growth_trigger", "must be > 0");
  if (growth_chunk < 1) fail("growth_chunk", "must be >= 1");
  if (!scheme_supports(scheme, kind))
    fail("scheme", to_string(scheme) + " does not integrate " + to_string(kind));
}

Integrator::Integrator(const DisorderRealization& disorder, const ModelSpec& model,
                       const IntegratorSpec& spec, double E0)
    : disorder_(disorder), model_(model), spec_(spec), E0_(E0) {
  spec_.validate(model.kind);
}

void Integrator::sync(const ChainState& s) {
  const Interval w = s.window();
  if (cache_offset_ == w.left && omega_sq_.size() == w.size()) return;
  if (!disorder_.window().contains(w)) disorder_ = disorder_.covering(w);
  cache_offset_ = w.left;
  omega_sq_.resize(w.size());
  for (long k = 0; k < w.size(); ++k) omega_sq_[k] = disorder_.omega_sq(w.left + k);
  omega_ = omega_sq_.cwiseSqrt();
  phase_.resize(0);
  work_a_.resize(w.size());
  work_b_.resize(w.size());
  work_c_.resize(w.size());
}

// Forces are the gradient of sum_{x in window} H_x, whose last bond couples
// to a pinned zero beyond the right edge. Guard growth keeps that bond empty.
void Integrator::kg_kick(ChainState& s, double h) {
  const long n = s.size();
  const double g = model_.g;
  double prev_bond = 0.0;
  for (long k = 0; k < n; ++k) {
    const double r = s.q[k] - (k + 1 < n ? s.q[k + 1] : 0.0);
    const double bond = g * r * r * r;
    s.p[k] += h * (-omega_sq_[k] * s.q[k] - bond + prev_bond);
    prev_bond = bond;
  }
}

void Integrator::kg_drift(ChainState& s, double h) { s.q += h * s.p; }

void Integrator::kg_verlet(ChainState& s, double h) {
  kg_kick(s, 0.5 * h);
  kg_drift(s, h);
  kg_kick(s, 0.5 * h);
}

// Exact harmonic flow from t0 to t1. A fixed factor polar(1, -omega h) is off
// unit modulus by one rounding and the same error repeats every step, which
// biases the norm linearly in time. Factors built from absolute phases carry
// roundoff that changes sign from step to step instead, and dividing by the
// previous phase (not multiplying by its conjugate) makes the modulus errors
// of consecutive factors telescope: 5e-13 vs 5e-12 norm drift at T = 1e4.
void Integrator::dnls_rotate(ChainState& s, double t0, double t1) {
  const long n = s.size();
  if (phase_time_ != t0 || phase_.size() != n) {
    phase_.resize(n);
    for (long k = 0; k < n; ++k) phase_[k] = std::polar(1.0, -omega_[k] * t0);
  }
  for (long k = 0; k < n; ++k) {
    const cplx next = std::polar(1.0, -omega_[k] * t1);
    s.psi[k] *= next / phase_[k];
    phase_[k] = next;
  }
  phase_time_ = t1;
}

// d psi_x/dt = -i (with_linear ? omega_x psi_x : 0) - i (g/2)(|E_x|^2 E_x - |E_{x-1}|^2 E_{x-1}),
// E_x = psi_x - psi_{x+1}.
void Integrator::dnls_field(const Eigen::VectorXcd& psi, Eigen::VectorXcd& out,
                            bool with_linear) const {
  const long n = psi.size();
  const double half_g = 0.5 * model_.g;
  cplx prev{};
  for (long k = 0; k < n; ++k) {
    const cplx e = psi[k] - (k + 1 < n ? psi[k + 1] : cplx{});
    const cplx b = half_g * std::norm(e) * e;
    cplx v = b - prev;
    if (with_linear) v += omega_[k] * psi[k];
    out[k] = cplx{v.imag(), -v.real()};
    prev = b;
  }
}

namespace {

double sup_norm(const Eigen::VectorXcd& v) {
  double m = 0.0;
  for (long k = 0; k < v.size(); ++k) m = std::max(m, std::abs(v[k]));
  return m;
}

}  // namespace

void Integrator::dnls_nonlinear_midpoint(ChainState& s, double h) {
  if (model_.g == 0.0) return;
  // Fixed point for the midpoint m = psi + (h/2) N(m); then psi' = 2m - psi.
  Eigen::VectorXcd& mid = work_a_;
  Eigen::VectorXcd& field = work_b_;
  Eigen::VectorXcd& next = work_c_;
  mid = s.psi;
  const bool linear = spec_.scheme == Scheme::ImplicitMidpoint;
  const double scale = std::max(sup_norm(s.psi), 1e-300);
  int it = 0;
  for (;;) {
    dnls_field(mid, field, linear);
    next = s.psi + (0.5 * h) * field;
    const double change = sup_norm(next - mid);
    mid.swap(next);
    ++it;
    if (change <= spec_.midpoint_tol * scale) {
      // The norm error of the step is proportional to the last change, so one
      // more sweep after meeting the tolerance costs little and keeps the
      // norm at roundoff level over millions of steps.
      dnls_field(mid, field, linear);
      mid = s.psi + (0.5 * h) * field;
      break;
    }
    if (it >= spec_.midpoint_max_iter) {
      std::ostringstream os;
      os << "implicit midpoint did not converge in " << it << " iterations at t = " << s.time
         << " (last change " << change / scale << ")";
      throw IntegrationFailure(os.str(), change / scale, 0.5 * spec_.step);
    }
  }
  last_iterations_ = it;
  s.psi = 2.0 * mid - s.psi;
}

void Integrator::dnls_full_midpoint(ChainState& s, double h) { dnls_nonlinear_midpoint(s, h); }

bool Integrator::maybe_grow(ChainState& s) {
  sync(s);
  const long n = s.size();
  const long m = std::min(spec_.growth_margin, n);
  const double trigger = spec_.growth_trigger * E0_;
  auto site_energy = [&](long k) {
    if (s.kind == ModelKind::KG) {
      const double r = s.q[k] - (k + 1 < n ? s.q[k + 1] : 0.0);
      return 0.5 * s.p[k] * s.p[k] + 0.5 * omega_sq_[k] * s.q[k] * s.q[k] +
             0.25 * model_.g * r * r * r * r;
    }
    const double b = std::norm(s.psi[k] - (k + 1 < n ? s.psi[k + 1] : cplx{}));
    return omega_[k] * std::norm(s.psi[k]) + 0.25 * model_.g * b * b;
  };
  bool left = false, right = false;
  for (long k = 0; k < m; ++k) {
    left = left || site_energy(k) > trigger;
    right = right || site_energy(n - 1 - k) > trigger;
  }
  if (!left && !right) return false;
  Interval w = s.window();
  if (left) w.left -= spec_.growth_chunk;
  if (right) w.right += spec_.growth_chunk;
  s.grow_to(w);
  sync(s);
  ++growth_events_;
  return true;
}

void Integrator::step(ChainState& s) {
  sync(s);
  const double h = spec_.step;
  switch (spec_.scheme) {
    case Scheme::VelocityVerlet:
      kg_verlet(s, h);
      break;
    case Scheme::Yoshida4: {
      const double cbrt2 = std::cbrt(2.0);
      const double w1 = 1.0 / (2.0 - cbrt2);
      const double w0 = -cbrt2 / (2.0 - cbrt2);
      kg_verlet(s, w1 * h);
      kg_verlet(s, w0 * h);
      kg_verlet(s, w1 * h);
      break;
    }
    case Scheme::StrangSplit:
      dnls_rotate(s, s.time, s.time + 0.5 * h);
      dnls_nonlinear_midpoint(s, h);
      dnls_rotate(s, s.time + 0.5 * h, s.time + h);
      break;
    case Scheme::ImplicitMidpoint:
      if (model_.g == 0.0) {
        // Linear field: the midpoint rule is the Cayley map of -i omega h.
        for (long k = 0; k < s.size(); ++k) {
          const cplx z{0.0, -0.5 * omega_[k] * h};
          s.psi[k] *= (1.0 + z) / (1.0 - z);
        }
      } else {
        dnls_full_midpoint(s, h);
      }
      break;
  }
  s.time += h;
  maybe_grow(s);
}

long Integrator::advance_to(ChainState& s, double t) {
  long n = 0;
  while (s.time < t - 0.5 * spec_.step) {
    step(s);
    ++n;
  }
  return n;
}

ChainState step(ChainState state, const DisorderRealization& disorder, const ModelSpec& model,
                const IntegratorSpec& spec) {
  const double before = total_energy(state, disorder, model);
  Integrator integ(disorder, model, spec, before);
  integ.maybe_grow(state);
  integ.step(state);
  const double after = total_energy(state, disorder.covering(state.window()), model);
  const double drift = before > 0.0 ? std::abs(after - before) / before : std::abs(after);
  if (drift > spec.energy_drift_tol) {
    std::ostringstream os;
    os << "relative energy change " << drift << " exceeds tolerance " << spec.energy_drift_tol
       << "; retry with step " << 0.5 * spec.step;
    throw IntegrationFailure(os.str(), drift, 0.5 * spec.step);
  }
  return state;
}

std::vector<double> SamplingGrid::times(double T) const {
  validate();
  if (!(T >= 0.0)) throw ArgumentError("horizon must be >= 0");
  std::vector<double> out{0.0};
  if (kind == Kind::Uniform) {
    for (long k = 1;; ++k) {
      const double t = k * dt;
      if (t >= T * (1.0 - 1e-12)) break;
      out.push_back(t);
    }
  } else {
    for (int k = 0;; ++k) {
      const double t = std::pow(ratio, k);
      if (t >= T * (1.0 - 1e-12)) break;
      out.push_back(t);
    }
  }
  if (T > 0.0) out.push_back(T);
  return out;
}

void SamplingGrid::validate() const {
  if (kind == Kind::Uniform && !(dt > 0.0)) throw ConfigError("sampling.dt must be > 0");
  if (kind == Kind::Geometric && !(ratio > 1.0)) throw ConfigError("sampling.ratio must be > 1");
}

void TrajectoryRecord::check_invariants() const {
  for (size_t k = 0; k < size(); ++k) {
    const double slack = 1e-12;
    std::ostringstream os;
    if (M[k] > Htot[k] * (1.0 + slack)) {
      os << "M = " << M[k] << " exceeds Htot = " << Htot[k] << " at t = " << t[k];
      throw InvariantViolation(os.str());
    }
    // Sigma H_x^2 <= M Sigma H_x and >= M^2; the packet energy is Htot(t).
    const double lower = 1.0 / (Htot[k] * M[k]);
    const double upper = 1.0 / (M[k] * M[k]);
    if (r2[k] < lower * (1.0 - slack) || r2[k] > upper * (1.0 + slack)) {
      os << "r2 = " << r2[k] << " outside [" << lower << ", " << upper << "] at t = " << t[k];
      throw InvariantViolation(os.str());
    }
  }
}

Maximizer maximizer(const Eigen::VectorXd& profile, long offset, double tie_tol) {
  if (profile.size() == 0) throw ArgumentError("maximizer needs a nonempty profile");
  const double top = profile.maxCoeff();
  const double floor = top - tie_tol * std::abs(top);
  for (long k = profile.size() - 1; k >= 0; --k)
    if (profile[k] >= floor) return {offset + k, top};
  return {offset, top};
}

Observables observe(const Eigen::VectorXd& energies, long offset) {
  Observables o;
  const Maximizer mx = maximizer(energies, offset);
  o.M = mx.value;
  o.xmax = mx.site;
  double sq = 0.0;
  for (long k = 0; k < energies.size(); ++k) {
    const double x = static_cast<double>(offset + k);
    o.q2 += x * x * energies[k];
    sq += energies[k] * energies[k];
    o.Htot += energies[k];
  }
  o.r2 = 1.0 / sq;
  return o;
}

double current_bound_ratio(const ChainState& s, const DisorderRealization& d, const ModelSpec& m) {
  const double c = current_bound_constant(m);
  if (c == 0.0) return 0.0;
  double worst = 0.0;
  const Interval w = s.window();
  double h_prev = local_energy(s, d, m, w.left);
  for (long x = w.left + 1; x <= w.right; ++x) {
    const double h = local_energy(s, d, m, x);
    const double bound = c * (h_prev * h_prev + h * h + h_prev + h);
    const double j = std::abs(current(s, d, m, x));
    if (j > 0.0) worst = std::max(worst, bound > 0.0 ? j / bound : kInfinity);
    h_prev = h;
  }
  return worst;
}

TrajectoryRecord run(ChainState state, const DisorderRealization& disorder, const ModelSpec& model,
                     const IntegratorSpec& spec, double T, const SamplingGrid& grid) {
  if (!(T >= 0.0)) throw ArgumentError("horizon T must be >= 0");
  model.validate();
  const std::vector<double> times = grid.times(T);
  DisorderRealization d = disorder.covering(state.window());
  const double E0 = total_energy(state, d, model);
  Integrator integ(d, model, spec, E0);
  integ.maybe_grow(state);

  TrajectoryRecord rec;
  rec.kind = model.kind;
  rec.E0 = E0;
  const double t0 = state.time;
  long steps = 0;

  auto check_drift = [&](double H) {
    const double drift = std::abs(H - E0) / E0;
    rec.max_energy_drift = std::max(rec.max_energy_drift, drift);
    if (drift > spec.energy_drift_tol) {
      std::ostringstream os;
      os << "relative energy drift " << drift << " exceeds tolerance " << spec.energy_drift_tol
         << " at t = " << state.time << "; retry with step " << 0.5 * spec.step;
      throw IntegrationFailure(os.str(), drift, 0.5 * spec.step);
    }
  };

  constexpr long kDriftCheckEvery = 1000;
  for (double target : times) {
    const long want = std::llround(target / spec.step);
    while (steps < want) {
      integ.step(state);
      ++steps;
      state.time = t0 + steps * spec.step;
      if (steps % kDriftCheckEvery == 0) {
        d = d.covering(state.window());
        check_drift(total_energy(state, d, model));
      }
    }
    d = d.covering(state.window());
    const Eigen::VectorXd energies = local_energies(state, d, model);
    const Observables o = observe(energies, state.offset);
    check_drift(o.Htot);
    rec.t.push_back(state.time);
    rec.M.push_back(o.M);
    rec.xmax.push_back(o.xmax);
    rec.q2.push_back(o.q2);
    rec.r2.push_back(o.r2);
    rec.Htot.push_back(o.Htot);
    rec.window.push_back(state.window());
    rec.eps_threshold.push_back(state.time >= 1.0 ? threshold_eps_of_t(state.time)
                                                  : std::nan(""));
    if (model.kind == ModelKind::DNLS) rec.norm.push_back(dnls_norm(state));
    rec.current_bound_ratio.push_back(current_bound_ratio(state, d, model));
  }
  rec.steps = steps;
  rec.growth_events = integ.growth_events();
  rec.check_invariants();
  return rec;
}

namespace {

double log_interp(double t0, double t1, double m0, double m1, double level) {
  if (m0 > 0.0 && m1 > 0.0 && m0 != m1) {
    const double a = (std::log(level) - std::log(m0)) / (std::log(m1) - std::log(m0));
    return t0 + std::clamp(a, 0.0, 1.0) * (t1 - t0);
  }
  if (m0 == m1) return t1;
  return t0 + std::clamp((level - m0) / (m1 - m0), 0.0, 1.0) * (t1 - t0);
}

}  // namespace

StoppingTimes stopping_times(const std::vector<double>& t, const std::vector<double>& M, double eps,
                             double eps_prime) {
  if (!(eps > 0.0) || !(eps < eps_prime)) {
    std::ostringstream os;
    os << "stopping times need 0 < eps < eps_prime, got eps = " << eps
       << ", eps_prime = " << eps_prime;
    throw ArgumentError(os.str());
  }
  if (t.size() != M.size()) throw ArgumentError("time and M series differ in length");
  StoppingTimes st{eps, eps_prime, kInfinity, kInfinity};
  size_t k = 0;
  while (k < M.size() && M[k] > eps) ++k;
  if (k == M.size()) return st;
  st.t_eps = k == 0 ? t[0] : log_interp(t[k - 1], t[k], M[k - 1], M[k], eps);

  // Last sample at or before the crossing where M >= eps_prime, then the
  // down-crossing of eps_prime right after it.
  long j = static_cast<long>(k);
  while (j >= 0 && !(M[j] >= eps_prime && t[j] <= st.t_eps)) --j;
  if (j < 0) return st;
  if (static_cast<size_t>(j) + 1 >= M.size()) {
    st.t_eps_epsprime = t[j];
  } else {
    st.t_eps_epsprime =
        std::min(st.t_eps, log_interp(t[j], t[j + 1], M[j], M[j + 1], eps_prime));
  }
  return st;
}

StoppingTimes stopping_times(const TrajectoryRecord& r, double eps, double eps_prime) {
  return stopping_times(r.t, r.M, eps, eps_prime);
}

LightConeReport light_cone(const TrajectoryRecord& r, double horizon) {
  LightConeReport rep;
  for (size_t k = 0; k < r.size(); ++k) {
    if (r.t[k] < 1.0 || r.t[k] > horizon * (1.0 + 1e-12)) continue;
    ++rep.samples;
    const double ratio = r.M[k] * std::abs(static_cast<double>(r.xmax[k])) / r.t[k];
    if (ratio > rep.sup || rep.samples == 1) {
      rep.sup = ratio;
      rep.argmax_t = r.t[k];
    }
  }
  return rep;
}

LightConeCheck light_cone_check(const TrajectoryRecord& r, double T, double max_growth) {
  LightConeCheck c;
  c.at_T = light_cone(r, T);
  c.at_2T = light_cone(r, 2.0 * T);
  if (c.at_T.samples == 0) throw ArgumentError("light-cone check needs samples with t >= 1");
  if (c.at_T.sup > 0.0)
    c.growth = c.at_2T.sup / c.at_T.sup;
  else
    c.growth = c.at_2T.sup > 0.0 ? kInfinity : 1.0;
  c.stable = c.growth < max_growth;
  return c;
}

ContinuityProbe continuity_probe(const ChainState& s, const DisorderRealization& d,
                                 const ModelSpec& m, const IntegratorSpec& spec, long x) {
  const DisorderRealization dd = d.covering(s.window());
  ContinuityProbe p;
  p.site = x;
  p.t = s.time;
  const double h0 = local_energy(s, dd, m, x);
  const double j0 = current(s, dd, m, x) - current(s, dd, m, x + 1);
  p.scale = local_energy(s, dd, m, x - 1) + h0 + local_energy(s, dd, m, x + 1);
  ChainState next = s;
  Integrator integ(dd, m, spec, total_energy(s, dd, m));
  integ.step(next);
  const DisorderRealization dn = dd.covering(next.window());
  const double h1 = local_energy(next, dn, m, x);
  const double j1 = current(next, dn, m, x) - current(next, dn, m, x + 1);
  p.lhs = (h1 - h0) / spec.step;
  p.rhs = 0.5 * (j0 + j1);
  return p;
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_csv(const TrajectoryRecord& r, std::ostream& os) {
  os << "t,M,xmax,q2,r2,Htot,win_lo,win_hi,eps_threshold\n";
  for (size_t k = 0; k < r.size(); ++k) {
    os << fmt(r.t[k]) << ',' << fmt(r.M[k]) << ',' << r.xmax[k] << ',' << fmt(r.q2[k]) << ','
       << fmt(r.r2[k]) << ',' << fmt(r.Htot[k]) << ',' << r.window[k].left << ','
       << r.window[k].right << ',' << fmt(r.eps_threshold[k]) << '\n';
  }
}

nlohmann::json to_json(const TrajectoryRecord& r) {
  nlohmann::json win_lo = nlohmann::json::array(), win_hi = nlohmann::json::array();
  for (const Interval& w : r.window) {
    win_lo.push_back(w.left);
    win_hi.push_back(w.right);
  }
  // eps(t) is undefined before t = 1; those samples become null.
  nlohmann::json eps = nlohmann::json::array();
  for (double v : r.eps_threshold) eps.push_back(std::isnan(v) ? nlohmann::json() : nlohmann::json(v));
  nlohmann::json j = {{"model", to_string(r.kind)},
                      {"E0", r.E0},
                      {"steps", r.steps},
                      {"growth_events", r.growth_events},
                      {"max_energy_drift", r.max_energy_drift},
                      {"t", r.t},
                      {"M", r.M},
                      {"xmax", r.xmax},
                      {"q2", r.q2},
                      {"r2", r.r2},
                      {"Htot", r.Htot},
                      {"win_lo", win_lo},
                      {"win_hi", win_hi},
                      {"eps_threshold", eps},
                      {"current_bound_ratio", r.current_bound_ratio}};
  if (!r.norm.empty()) j["norm"] = r.norm;
  return j;
}

}  // namespace chainlab
