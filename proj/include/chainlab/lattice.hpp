#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>

namespace chainlab {

using cplx = std::complex<double>;

enum class ModelKind { KG, DNLS };
enum class DensityKind { Uniform, SmoothBump };

std::string to_string(ModelKind kind);
std::string to_string(DensityKind kind);

// Closed integer interval [left, right]; empty when left > right.
struct Interval {
  long left = 0;
  long right = -1;

  bool empty() const { return left > right; }
  long size() const { return empty() ? 0 : right - left + 1; }
  bool contains(long x) const { return x >= left && x <= right; }
  bool contains(const Interval& o) const {
    return o.empty() || (o.left >= left && o.right <= right);
  }
  Interval hull(const Interval& o) const;
  bool operator==(const Interval&) const = default;
};

// Distribution of the on-site squared frequencies omega_x^2.
struct DisorderSpec {
  double omega_min_sq = 0.5;
  double omega_max_sq = 1.5;
  DensityKind density = DensityKind::Uniform;
  std::uint64_t seed = 1;

  // Throws ConfigError unless 0 < omega_min_sq < omega_max_sq < inf.
  void validate() const;
  double omega_min() const;
  double omega_max() const;
};

// Density of omega^2 at w2 (zero outside the support).
double omega_sq_density(const DisorderSpec& spec, double w2);
// Density of omega = sqrt(omega^2) at w.
double omega_density(const DisorderSpec& spec, double w);

// Deterministic draw of omega_x^2 keyed by (seed, site).
double keyed_omega_sq(const DisorderSpec& spec, long site);

// Frozen disorder on a window. Sites outside the stored window are drawn on
// demand from the same keyed sampler, so extending a window never reshuffles.
class DisorderRealization {
 public:
  DisorderRealization() = default;
  DisorderRealization(const DisorderSpec& spec, Interval window);
  // Explicit values on [offset, offset + size - 1]; used for fixtures.
  static DisorderRealization from_values(const DisorderSpec& spec, long offset,
                                         const Eigen::VectorXd& omega_sq);

  const DisorderSpec& spec() const { return spec_; }
  const Interval& window() const { return window_; }
  std::uint64_t seed() const { return spec_.seed; }
  const Eigen::VectorXd& omega_sq_values() const { return omega_sq_; }

  double omega_sq(long x) const;
  double omega(long x) const { return std::sqrt(omega_sq(x)); }

  // Realization whose window is the hull of the current one and `w`.
  DisorderRealization covering(const Interval& w) const;

 private:
  DisorderSpec spec_;
  Interval window_;
  Eigen::VectorXd omega_sq_;
};

DisorderRealization sample_disorder(const DisorderSpec& spec, const Interval& window);

struct ModelSpec {
  ModelKind kind = ModelKind::KG;
  double g = 1.0;
  DisorderSpec disorder;

  void validate() const;
};

// Phase-space configuration on a finite window [offset, offset + size - 1].
// KG uses q, p; DNLS uses psi. Everything outside the window is zero.
struct ChainState {
  ModelKind kind = ModelKind::KG;
  long offset = 0;
  Eigen::VectorXd q;
  Eigen::VectorXd p;
  Eigen::VectorXcd psi;
  double time = 0.0;

  long size() const { return kind == ModelKind::KG ? q.size() : psi.size(); }
  Interval window() const { return {offset, offset + size() - 1}; }
  double q_at(long x) const;
  double p_at(long x) const;
  cplx psi_at(long x) const;

  static ChainState zeros(ModelKind kind, Interval window);
  // Pads the window to cover `w` with zeros.
  void grow_to(const Interval& w);
};

struct InitialCondition {
  enum class Mode { MomentumKick, Custom };

  Interval support{0, 0};
  Mode mode = Mode::MomentumKick;
  double E0 = 1.0;
  // Custom values on the support (index 0 is support.left).
  std::optional<Eigen::VectorXd> custom_q;
  std::optional<Eigen::VectorXd> custom_p;
  std::optional<Eigen::VectorXcd> custom_psi;
};

// H_x: on-site energy plus the bond to the right neighbour.
double local_energy(const ChainState& s, const DisorderRealization& d,
                    const ModelSpec& m, long x);
// Local energies over the stored window.
Eigen::VectorXd local_energies(const ChainState& s, const DisorderRealization& d,
                               const ModelSpec& m);
double total_energy(const ChainState& s, const DisorderRealization& d,
                    const ModelSpec& m);
// sum |psi_x|^2 for DNLS, 0 for KG.
double dnls_norm(const ChainState& s);

// Energy current from x-1 to x, j_x = {H_{x-1}, H_x}.
double current(const ChainState& s, const DisorderRealization& d,
               const ModelSpec& m, long x);

// Constant C in |j_x| <= C (H_{x-1}^2 + H_x^2 + H_{x-1} + H_x).
double current_bound_constant(const ModelSpec& m);

// Guard added around the support when the initial window is laid out.
inline constexpr long kInitialPadding = 64;

ChainState build_initial(const InitialCondition& ic, const DisorderRealization& d,
                         const ModelSpec& m);

}  // namespace chainlab
