#include "chainlab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "chainlab/errors.hpp"
#include "chainlab/rng.hpp"

namespace chainlab {

std::string to_string(ModelKind kind) { return kind == ModelKind::KG ? "KG" : "DNLS"; }

std::string to_string(DensityKind kind) {
  return kind == DensityKind::Uniform ? "uniform" : "smooth-bump";
}

Interval Interval::hull(const Interval& o) const {
  if (empty()) return o;
  if (o.empty()) return *this;
  return {std::min(left, o.left), std::max(right, o.right)};
}

void DisorderSpec::validate() const {
  if (!(omega_min_sq > 0.0) || !(omega_max_sq > omega_min_sq) || !std::isfinite(omega_max_sq)) {
    std::ostringstream os;
    os << "disorder support must satisfy 0 < omega_min_sq < omega_max_sq < inf, got ["
       << omega_min_sq << ", " << omega_max_sq << "]";
    throw ConfigError(os.str());
  }
}

double DisorderSpec::omega_min() const { return std::sqrt(omega_min_sq); }
double DisorderSpec::omega_max() const { return std::sqrt(omega_max_sq); }

namespace {

double bump_kernel(double t) {
  if (t <= -1.0 || t >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - t * t));
}

// Integral of bump_kernel over [-1, 1]. The integrand is flat to all orders at
// the end points, so the trapezoid rule converges faster than any power.
double bump_mass() {
  static const double mass = [] {
    constexpr int n = 4096;
    const double h = 2.0 / n;
    double s = 0.0;
    for (int k = 1; k < n; ++k) s += bump_kernel(-1.0 + k * h);
    return s * h;
  }();
  return mass;
}

}  // namespace

double omega_sq_density(const DisorderSpec& spec, double w2) {
  const double a = spec.omega_min_sq;
  const double b = spec.omega_max_sq;
  if (w2 < a || w2 > b) return 0.0;
  if (spec.density == DensityKind::Uniform) return 1.0 / (b - a);
  const double t = (2.0 * w2 - a - b) / (b - a);
  return bump_kernel(t) / (bump_mass() * 0.5 * (b - a));
}

double omega_density(const DisorderSpec& spec, double w) {
  if (w <= 0.0) return 0.0;
  return 2.0 * w * omega_sq_density(spec, w * w);
}

double keyed_omega_sq(const DisorderSpec& spec, long site) {
  KeyedStream stream(spec.seed, static_cast<std::uint64_t>(site));
  const double a = spec.omega_min_sq;
  const double b = spec.omega_max_sq;
  if (spec.density == DensityKind::Uniform) return a + (b - a) * stream.uniform();
  // Rejection from the uniform proposal; the kernel peaks at e^{-1}.
  const double peak = std::exp(-1.0);
  for (;;) {
    const double t = 2.0 * stream.uniform() - 1.0;
    if (stream.uniform() * peak < bump_kernel(t)) return 0.5 * (a + b) + 0.5 * (b - a) * t;
  }
}

DisorderRealization::DisorderRealization(const DisorderSpec& spec, Interval window)
    : spec_(spec), window_(window), omega_sq_(window.size()) {
  for (long k = 0; k < window.size(); ++k) omega_sq_[k] = keyed_omega_sq(spec, window.left + k);
}

DisorderRealization DisorderRealization::from_values(const DisorderSpec& spec, long offset,
                                                     const Eigen::VectorXd& omega_sq) {
  DisorderRealization d;
  d.spec_ = spec;
  d.window_ = {offset, offset + omega_sq.size() - 1};
  d.omega_sq_ = omega_sq;
  return d;
}

double DisorderRealization::omega_sq(long x) const {
  if (window_.contains(x)) return omega_sq_[x - window_.left];
  return keyed_omega_sq(spec_, x);
}

DisorderRealization DisorderRealization::covering(const Interval& w) const {
  const Interval h = window_.hull(w);
  if (h == window_) return *this;
  // Keep stored values (they may be fixtures) and draw only the new sites.
  DisorderRealization out;
  out.spec_ = spec_;
  out.window_ = h;
  out.omega_sq_.resize(h.size());
  for (long x = h.left; x <= h.right; ++x) out.omega_sq_[x - h.left] = omega_sq(x);
  return out;
}

DisorderRealization sample_disorder(const DisorderSpec& spec, const Interval& window) {
  spec.validate();
  if (window.empty()) throw ConfigError("disorder window must be nonempty");
  return DisorderRealization(spec, window);
}

void ModelSpec::validate() const {
  if (!(g >= 0.0) || !std::isfinite(g)) throw ConfigError("model.g must be a finite number >= 0");
  disorder.validate();
}

double ChainState::q_at(long x) const {
  const long k = x - offset;
  return (kind == ModelKind::KG && k >= 0 && k < q.size()) ? q[k] : 0.0;
}

double ChainState::p_at(long x) const {
  const long k = x - offset;
  return (kind == ModelKind::KG && k >= 0 && k < p.size()) ? p[k] : 0.0;
}

cplx ChainState::psi_at(long x) const {
  const long k = x - offset;
  return (kind == ModelKind::DNLS && k >= 0 && k < psi.size()) ? psi[k] : cplx{};
}

ChainState ChainState::zeros(ModelKind kind, Interval window) {
  ChainState s;
  s.kind = kind;
  s.offset = window.left;
  if (kind == ModelKind::KG) {
    s.q = Eigen::VectorXd::Zero(window.size());
    s.p = Eigen::VectorXd::Zero(window.size());
  } else {
    s.psi = Eigen::VectorXcd::Zero(window.size());
  }
  return s;
}

void ChainState::grow_to(const Interval& w) {
  const Interval cur = window();
  const Interval h = cur.hull(w);
  if (h == cur) return;
  const long shift = cur.left - h.left;
  if (kind == ModelKind::KG) {
    Eigen::VectorXd nq = Eigen::VectorXd::Zero(h.size());
    Eigen::VectorXd np = Eigen::VectorXd::Zero(h.size());
    nq.segment(shift, q.size()) = q;
    np.segment(shift, p.size()) = p;
    q = std::move(nq);
    p = std::move(np);
  } else {
    Eigen::VectorXcd npsi = Eigen::VectorXcd::Zero(h.size());
    npsi.segment(shift, psi.size()) = psi;
    psi = std::move(npsi);
  }
  offset = h.left;
}

double local_energy(const ChainState& s, const DisorderRealization& d, const ModelSpec& m,
                    long x) {
  if (!s.window().contains(x)) return 0.0;
  if (s.kind == ModelKind::KG) {
    const double q = s.q_at(x);
    const double p = s.p_at(x);
    const double r = q - s.q_at(x + 1);
    const double r2 = r * r;
    return 0.5 * p * p + 0.5 * d.omega_sq(x) * q * q + 0.25 * m.g * r2 * r2;
  }
  const cplx psi = s.psi_at(x);
  const double b = std::norm(psi - s.psi_at(x + 1));
  return d.omega(x) * std::norm(psi) + 0.25 * m.g * b * b;
}

Eigen::VectorXd local_energies(const ChainState& s, const DisorderRealization& d,
                               const ModelSpec& m) {
  Eigen::VectorXd h(s.size());
  for (long k = 0; k < s.size(); ++k) h[k] = local_energy(s, d, m, s.offset + k);
  return h;
}

double total_energy(const ChainState& s, const DisorderRealization& d, const ModelSpec& m) {
  return local_energies(s, d, m).sum();
}

double dnls_norm(const ChainState& s) {
  return s.kind == ModelKind::DNLS ? s.psi.squaredNorm() : 0.0;
}

double current(const ChainState& s, const DisorderRealization& d, const ModelSpec& m, long x) {
  const Interval w = s.window();
  if (!w.contains(x) || !w.contains(x - 1)) return 0.0;
  if (s.kind == ModelKind::KG) {
    const double r = s.q_at(x - 1) - s.q_at(x);
    return m.g * s.p_at(x) * r * r * r;
  }
  // Closed form of {H_{x-1}, H_x} in psi variables (cross-checked against the
  // bracket algebra in the tests):
  //   j_x = g |D|^2 Im( conj(D) (omega_x psi_x + (g/2) |E|^2 E) ),
  // with D = psi_{x-1} - psi_x and E = psi_x - psi_{x+1}.
  const cplx psi = s.psi_at(x);
  const cplx dd = s.psi_at(x - 1) - psi;
  const cplx e = psi - s.psi_at(x + 1);
  const cplx b = d.omega(x) * psi + 0.5 * m.g * std::norm(e) * e;
  return m.g * std::norm(dd) * std::imag(std::conj(dd) * b);
}

double current_bound_constant(const ModelSpec& m) {
  const double g = m.g;
  if (m.kind == ModelKind::KG) {
    // |p_x| <= sqrt(2 H_x), |q_y| <= sqrt(2 H_y) / omega_-, (a+b)^3 <= 4(a^3+b^3)
    // and Young's inequality give |j_x| <= 20 g / omega_-^3 (H_{x-1}^2 + H_x^2).
    const double wm = m.disorder.omega_min();
    return 20.0 * g / (wm * wm * wm);
  }
  // |D| <= (4 H_{x-1}/g)^{1/4}, |E| <= (4 H_x/g)^{1/4}, omega_x|psi_x| <= sqrt(omega_+ H_x),
  // then z^{5/4}, z^{3/2} <= z + z^2.
  return std::pow(4.0, 0.75) * std::pow(g, 0.25) * std::sqrt(m.disorder.omega_max()) +
         4.0 * std::sqrt(g);
}

ChainState build_initial(const InitialCondition& ic, const DisorderRealization& d,
                         const ModelSpec& m) {
  if (!(ic.E0 > 0.0)) throw ConfigError("initial.E0 must be > 0");
  if (!ic.support.contains(0)) throw ConfigError("initial.support must contain site 0");
  const Interval window{ic.support.left - kInitialPadding, ic.support.right + kInitialPadding};
  ChainState s = ChainState::zeros(m.kind, window);
  const long k0 = -window.left;

  if (ic.mode == InitialCondition::Mode::MomentumKick) {
    if (m.kind == ModelKind::KG) {
      s.p[k0] = std::sqrt(2.0 * ic.E0);
    } else {
      // H_0 = omega_0 a + (g/4) a^2 with a = |psi_0|^2 (the bond to the empty
      // site 1 counts); pick the root that makes H_0 = E0 exactly.
      const double w = d.omega(0);
      const double a = m.g > 0.0 ? 2.0 * ic.E0 / (w + std::sqrt(w * w + m.g * ic.E0)) : ic.E0 / w;
      s.psi[k0] = std::sqrt(a);
    }
    return s;
  }

  const long n = ic.support.size();
  const long base = ic.support.left - window.left;
  if (m.kind == ModelKind::KG) {
    if (!ic.custom_q || !ic.custom_p || ic.custom_q->size() != n || ic.custom_p->size() != n)
      throw ConfigError("custom KG initial data needs q and p of the support length");
    s.q.segment(base, n) = *ic.custom_q;
    s.p.segment(base, n) = *ic.custom_p;
  } else {
    if (!ic.custom_psi || ic.custom_psi->size() != n)
      throw ConfigError("custom DNLS initial data needs psi of the support length");
    s.psi.segment(base, n) = *ic.custom_psi;
  }

  const double h0 = local_energy(s, d, m, 0);
  long worst = 0;
  double worst_value = h0;
  for (long x = window.left; x <= window.right; ++x) {
    const double hx = local_energy(s, d, m, x);
    if (hx > worst_value) {
      worst = x;
      worst_value = hx;
    }
  }
  if (worst != 0) {
    std::ostringstream os;
    os << "initial energy maximum must sit at site 0, but H_" << worst << " = " << worst_value
       << " > H_0 = " << h0;
    throw ValidationError(os.str(), worst);
  }
  if (std::abs(h0 - ic.E0) > 1e-12 * ic.E0) {
    std::ostringstream os;
    os << "H_0 = " << h0 << " does not match E0 = " << ic.E0;
    throw ValidationError(os.str(), 0);
  }
  return s;
}

}  // namespace chainlab
