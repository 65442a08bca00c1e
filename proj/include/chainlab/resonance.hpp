#pragma once

#include <cstdint>
#include <ostream>
#include <utility>
#include <vector>

#include "chainlab/contractible.hpp"
#include "chainlab/lattice.hpp"
#include "chainlab/polynomial.hpp"
#include "json.hpp"

namespace chainlab {

struct ResonanceReport {
  int n = 0;
  double delta = 0.0;
  Interval window;
  // False when orders above the exact enumeration cap were sampled.
  bool exact = true;
  std::vector<char> resonant;     // per site of the window
  std::vector<double> min_delta;  // per site
  std::vector<Interval> intervals;

  // Throws InvariantViolation on a broken flag/interval relation.
  void check_invariants() const;
};

// Disorder needed to decide every flag on `window` at order n.
Interval required_disorder_window(const Interval& window, int n);

// Throws ArgumentError unless d covers required_disorder_window(window, n) and
// delta >= 0; BudgetExceeded for n above the enumeration cap.
ResonanceReport scan_resonances(const Interval& window, int n, double delta,
                                const DisorderRealization& d);

// Maximal runs of set flags; flags[k] belongs to site offset + k.
std::vector<Interval> maximal_intervals(const std::vector<char>& flags, long offset);
// The maximal run containing x, or an empty interval if x is unflagged.
Interval interval_containing(const std::vector<char>& flags, long offset, long x);

// R(n, delta; x), empty when x is not resonant. Walks outward as far as the
// run extends, drawing disorder on demand.
Interval resonant_interval_at(long x, int n, double delta, const DisorderRealization& d);

struct ProportionEstimate {
  long hits = 0;
  long samples = 0;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// Wilson score interval at z standard normal quantiles.
ProportionEstimate wilson(long hits, long samples, double z = 1.96);

struct SmallDenominatorPoint {
  double delta = 0.0;
  ProportionEstimate p;
  double ratio = 0.0;     // estimate / delta
  double ratio_se = 0.0;  // binomial standard error of the ratio
};

struct SmallDenominatorReport {
  Monomial pattern;
  long samples = 0;
  std::vector<SmallDenominatorPoint> points;
  // Least-squares slope of P against delta through the origin.
  double slope = 0.0;
};

// P(|Delta| <= delta) for a relative monomial pattern, one disorder draw per
// sample (seed mixed with the sample index); all deltas share the samples.
SmallDenominatorReport mc_small_denominator(const Monomial& pattern,
                                            const std::vector<double>& delta_grid, long samples,
                                            const DisorderSpec& spec, int workers = 0);

struct TailPoint {
  long length = 0;
  ProportionEstimate p;
};

struct IntervalTailReport {
  int n = 0;
  double delta = 0.0;
  long samples = 0;
  bool exact = true;
  std::vector<TailPoint> points;
  // Fit of ln P against length over points with P > 0.
  double fitted_base = 0.0;
  double fit_r2 = 0.0;
  // Base of the bound's geometric decay, delta^{1/(2(n+1))}.
  double bound_base = 0.0;
};

// P(|R(n, delta; 0)| >= l) with one disorder draw per sample; identical
// (spec, samples) give identical draws for every delta.
IntervalTailReport mc_interval_tail(int n, double delta, const std::vector<long>& lengths,
                                    long samples, const DisorderSpec& spec, int workers = 0);

// Per-sample disorder seed shared by both Monte Carlo routines.
std::uint64_t sample_seed(std::uint64_t base, long sample);

// Numerical density of omega_0 - omega_1 at zero for independent draws:
// int f_omega(w)^2 dw by composite Simpson on `intervals` panels.
double difference_density_at_zero(const DisorderSpec& spec, int intervals = 20000);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

void write_csv(std::ostream& os, const ResonanceReport& r);
void write_csv(std::ostream& os, const SmallDenominatorReport& r);
void write_csv(std::ostream& os, const IntervalTailReport& r);
nlohmann::json to_json(const ResonanceReport& r);
nlohmann::json to_json(const SmallDenominatorReport& r);
nlohmann::json to_json(const IntervalTailReport& r);

}  // namespace chainlab
