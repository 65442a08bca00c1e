#include "chainlab/resonance.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "chainlab/errors.hpp"
#include "chainlab/parallel.hpp"
#include "chainlab/rng.hpp"

namespace chainlab {

namespace {

constexpr long kMaxIntervalWalk = 100000;
constexpr long kChunk = 4096;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool flagged(long x, const ContractibleSet& cs, double delta, const DisorderRealization& d) {
  return min_abs_delta(x, cs, d) <= delta;
}

}  // namespace

void ResonanceReport::check_invariants() const {
  const size_t n_sites = static_cast<size_t>(window.size());
  if (resonant.size() != n_sites || min_delta.size() != n_sites)
    throw InvariantViolation("resonance report arrays do not match the window");
  for (size_t k = 0; k < n_sites; ++k) {
    if ((min_delta[k] <= delta) != static_cast<bool>(resonant[k])) {
      std::ostringstream os;
      os << "site " << window.left + static_cast<long>(k) << " flag disagrees with min_delta";
      throw InvariantViolation(os.str());
    }
  }
  std::vector<char> covered(n_sites, 0);
  long prev_right = std::numeric_limits<long>::min();
  for (const Interval& iv : intervals) {
    if (iv.empty() || !window.contains(iv) || iv.left <= prev_right + 1)
      throw InvariantViolation("resonant intervals are not disjoint and maximal");
    for (long x = iv.left; x <= iv.right; ++x) covered[x - window.left] = 1;
    prev_right = iv.right;
  }
  if (covered != resonant) throw InvariantViolation("resonant intervals do not cover the flags");
}

Interval required_disorder_window(const Interval& window, int n) {
  return {window.left - n, window.right + n - 1};
}

std::vector<Interval> maximal_intervals(const std::vector<char>& flags, long offset) {
  std::vector<Interval> out;
  const long n = static_cast<long>(flags.size());
  for (long k = 0; k < n;) {
    if (!flags[k]) {
      ++k;
      continue;
    }
    long e = k;
    while (e + 1 < n && flags[e + 1]) ++e;
    out.push_back({offset + k, offset + e});
    k = e + 1;
  }
  return out;
}

Interval interval_containing(const std::vector<char>& flags, long offset, long x) {
  const long n = static_cast<long>(flags.size());
  long k = x - offset;
  if (k < 0 || k >= n || !flags[k]) return {};
  long lo = k, hi = k;
  while (lo > 0 && flags[lo - 1]) --lo;
  while (hi + 1 < n && flags[hi + 1]) ++hi;
  return {offset + lo, offset + hi};
}

ResonanceReport scan_resonances(const Interval& window, int n, double delta,
                                const DisorderRealization& d) {
  if (window.empty()) throw ArgumentError("resonance window is empty");
  if (!(delta >= 0.0)) throw ArgumentError("delta must be non-negative");
  const Interval need = required_disorder_window(window, n);
  if (!d.window().contains(need)) {
    std::ostringstream os;
    os << "disorder must cover [" << need.left << ", " << need.right << "]";
    throw ArgumentError(os.str());
  }
  const ContractibleSet& cs = contractible_set(n);
  ResonanceReport r;
  r.n = n;
  r.delta = delta;
  r.window = window;
  r.exact = cs.exact();
  for (long x = window.left; x <= window.right; ++x) {
    const double m = min_abs_delta(x, cs, d);
    r.min_delta.push_back(m);
    r.resonant.push_back(m <= delta);
  }
  r.intervals = maximal_intervals(r.resonant, window.left);
  return r;
}

Interval resonant_interval_at(long x, int n, double delta, const DisorderRealization& d) {
  const ContractibleSet& cs = contractible_set(n);
  if (!flagged(x, cs, delta, d)) return {};
  long lo = x, hi = x;
  while (flagged(lo - 1, cs, delta, d)) {
    if (x - --lo > kMaxIntervalWalk) throw BudgetExceeded("resonant interval has no left end");
  }
  while (flagged(hi + 1, cs, delta, d)) {
    if (++hi - x > kMaxIntervalWalk) throw BudgetExceeded("resonant interval has no right end");
  }
  return {lo, hi};
}

ProportionEstimate wilson(long hits, long samples, double z) {
  ProportionEstimate p;
  p.hits = hits;
  p.samples = samples;
  if (samples <= 0) return p;
  const double n = static_cast<double>(samples);
  const double ph = hits / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (ph + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(ph * (1.0 - ph) / n + z2 / (4.0 * n * n)) / denom;
  p.estimate = ph;
  p.ci_low = std::max(0.0, center - half);
  p.ci_high = std::min(1.0, center + half);
  return p;
}

std::uint64_t sample_seed(std::uint64_t base, long sample) {
  return mix_key(base, static_cast<std::uint64_t>(sample));
}

SmallDenominatorReport mc_small_denominator(const Monomial& pattern,
                                            const std::vector<double>& delta_grid, long samples,
                                            const DisorderSpec& spec, int workers) {
  if (pattern.degree() == 0 || in_S(pattern))
    throw ArgumentError("pattern lies in S: its denominator vanishes identically");
  if (samples < 10000) throw ArgumentError("small-denominator Monte Carlo needs >= 1e4 samples");
  for (double dl : delta_grid)
    if (!(dl > 0.0)) throw ArgumentError("delta grid must be positive");
  spec.validate();
  const auto net = net_signs(pattern);

  const size_t chunks = static_cast<size_t>((samples + kChunk - 1) / kChunk);
  std::vector<std::vector<long>> counts(chunks, std::vector<long>(delta_grid.size(), 0));
  parallel_for(chunks, workers, [&](size_t c) {
    DisorderSpec s = spec;
    const long begin = static_cast<long>(c) * kChunk;
    const long end = std::min(samples, begin + kChunk);
    for (long k = begin; k < end; ++k) {
      s.seed = sample_seed(spec.seed, k);
      double dl = 0.0;
      for (const auto& [site, r] : net) dl += r * std::sqrt(keyed_omega_sq(s, site));
      dl = std::abs(dl);
      for (size_t j = 0; j < delta_grid.size(); ++j)
        if (dl <= delta_grid[j]) ++counts[c][j];
    }
  });

  SmallDenominatorReport rep;
  rep.pattern = pattern;
  rep.samples = samples;
  double sxy = 0.0, sxx = 0.0;
  for (size_t j = 0; j < delta_grid.size(); ++j) {
    long hits = 0;
    for (const auto& c : counts) hits += c[j];
    SmallDenominatorPoint pt;
    pt.delta = delta_grid[j];
    pt.p = wilson(hits, samples);
    pt.ratio = pt.p.estimate / pt.delta;
    pt.ratio_se = std::sqrt(pt.p.estimate * (1.0 - pt.p.estimate) / samples) / pt.delta;
    sxy += pt.delta * pt.p.estimate;
    sxx += pt.delta * pt.delta;
    rep.points.push_back(pt);
  }
  rep.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  return rep;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  LinearFit f;
  const size_t n = x.size();
  if (n < 2 || y.size() != n) return f;
  double mx = 0.0, my = 0.0;
  for (size_t k = 0; k < n; ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (size_t k = 0; k < n; ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx == 0.0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

IntervalTailReport mc_interval_tail(int n, double delta, const std::vector<long>& lengths,
                                    long samples, const DisorderSpec& spec, int workers) {
  if (samples < 10000) throw ArgumentError("interval-tail Monte Carlo needs >= 1e4 samples");
  if (!(delta >= 0.0)) throw ArgumentError("delta must be non-negative");
  spec.validate();
  const ContractibleSet& cs = contractible_set(n);
  const Interval base{-12 - n, 12 + n};

  const size_t chunks = static_cast<size_t>((samples + kChunk - 1) / kChunk);
  std::vector<std::vector<long>> counts(chunks, std::vector<long>(lengths.size(), 0));
  parallel_for(chunks, workers, [&](size_t c) {
    DisorderSpec s = spec;
    const long begin = static_cast<long>(c) * kChunk;
    const long end = std::min(samples, begin + kChunk);
    for (long k = begin; k < end; ++k) {
      s.seed = sample_seed(spec.seed, k);
      const DisorderRealization d(s, base);
      const long len = resonant_interval_at(0, n, delta, d).size();
      for (size_t j = 0; j < lengths.size(); ++j)
        if (len >= lengths[j]) ++counts[c][j];
    }
  });

  IntervalTailReport rep;
  rep.n = n;
  rep.delta = delta;
  rep.samples = samples;
  rep.exact = cs.exact();
  rep.bound_base = std::pow(delta, 1.0 / (2.0 * (n + 1)));
  std::vector<double> xs, ys;
  for (size_t j = 0; j < lengths.size(); ++j) {
    long hits = 0;
    for (const auto& cc : counts) hits += cc[j];
    TailPoint pt{lengths[j], wilson(hits, samples)};
    if (hits > 0) {
      xs.push_back(static_cast<double>(lengths[j]));
      ys.push_back(std::log(pt.p.estimate));
    }
    rep.points.push_back(pt);
  }
  const LinearFit fit = linear_fit(xs, ys);
  rep.fitted_base = xs.size() >= 2 ? std::exp(fit.slope) : 0.0;
  rep.fit_r2 = fit.r2;
  return rep;
}

double difference_density_at_zero(const DisorderSpec& spec, int intervals) {
  spec.validate();
  if (intervals < 2 || intervals % 2) throw ArgumentError("Simpson needs an even panel count");
  // f_{w0 - w1}(0) = int f_w(w)^2 dw over the support of omega.
  const double a = spec.omega_min(), b = spec.omega_max();
  const double h = (b - a) / intervals;
  auto f2 = [&](double w) {
    const double f = omega_density(spec, w);
    return f * f;
  };
  double s = f2(a) + f2(b);
  for (int k = 1; k < intervals; ++k) s += (k % 2 ? 4.0 : 2.0) * f2(a + k * h);
  return s * h / 3.0;
}

void write_csv(std::ostream& os, const ResonanceReport& r) {
  os << "x,min_delta,resonant\n";
  for (size_t k = 0; k < r.resonant.size(); ++k)
    os << r.window.left + static_cast<long>(k) << ',' << fmt(r.min_delta[k]) << ','
       << (r.resonant[k] ? 1 : 0) << '\n';
}

void write_csv(std::ostream& os, const SmallDenominatorReport& r) {
  os << "delta,estimate,ci_low,ci_high,samples,hits,ratio\n";
  for (const auto& p : r.points)
    os << fmt(p.delta) << ',' << fmt(p.p.estimate) << ',' << fmt(p.p.ci_low) << ','
       << fmt(p.p.ci_high) << ',' << p.p.samples << ',' << p.p.hits << ',' << fmt(p.ratio) << '\n';
}

void write_csv(std::ostream& os, const IntervalTailReport& r) {
  os << "length,estimate,ci_low,ci_high,samples,hits\n";
  for (const auto& p : r.points)
    os << p.length << ',' << fmt(p.p.estimate) << ',' << fmt(p.p.ci_low) << ','
       << fmt(p.p.ci_high) << ',' << p.p.samples << ',' << p.p.hits << '\n';
}

namespace {

nlohmann::json interval_json(const Interval& iv) { return {iv.left, iv.right}; }

nlohmann::json estimate_json(const ProportionEstimate& p) {
  return {{"estimate", p.estimate}, {"ci_low", p.ci_low}, {"ci_high", p.ci_high},
          {"samples", p.samples},   {"hits", p.hits}};
}

}  // namespace

nlohmann::json to_json(const ResonanceReport& r) {
  nlohmann::json j;
  j["n"] = r.n;
  j["delta"] = r.delta;
  j["window"] = interval_json(r.window);
  j["exact"] = r.exact;
  j["resonant"] = nlohmann::json::array();
  for (char f : r.resonant) j["resonant"].push_back(static_cast<bool>(f));
  j["min_delta"] = r.min_delta;
  j["intervals"] = nlohmann::json::array();
  for (const auto& iv : r.intervals) j["intervals"].push_back(interval_json(iv));
  return j;
}

nlohmann::json to_json(const SmallDenominatorReport& r) {
  nlohmann::json j;
  j["pattern"] = r.pattern.to_string();
  j["samples"] = r.samples;
  j["slope"] = r.slope;
  j["points"] = nlohmann::json::array();
  for (const auto& p : r.points) {
    nlohmann::json e = estimate_json(p.p);
    e["delta"] = p.delta;
    e["ratio"] = p.ratio;
    e["ratio_se"] = p.ratio_se;
    j["points"].push_back(e);
  }
  return j;
}

nlohmann::json to_json(const IntervalTailReport& r) {
  nlohmann::json j;
  j["n"] = r.n;
  j["delta"] = r.delta;
  j["samples"] = r.samples;
  j["exact"] = r.exact;
  j["fitted_base"] = r.fitted_base;
  j["fit_r2"] = r.fit_r2;
  j["bound_base"] = r.bound_base;
  j["points"] = nlohmann::json::array();
  for (const auto& p : r.points) {
    nlohmann::json e = estimate_json(p.p);
    e["length"] = p.length;
    j["points"].push_back(e);
  }
  return j;
}

}  // namespace chainlab
