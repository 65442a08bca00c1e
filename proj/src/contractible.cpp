#include "chainlab/contractible.hpp"

#include <absl/container/flat_hash_set.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>

#include "chainlab/errors.hpp"

namespace chainlab {

double NetPattern::delta(long x, const DisorderRealization& d) const {
  double s = 0.0;
  for (const auto& [y, r] : r) s += r * d.omega(x + y);
  return s;
}

Monomial shifted(const Monomial& m, long x) {
  std::vector<Monomial::Code> codes(m.codes().begin(), m.codes().end());
  for (auto& c : codes) c = static_cast<Monomial::Code>(c + 2 * x);
  return Monomial::from_codes(codes);
}

namespace {

using Code = Monomial::Code;

NetPattern pattern_of(const Monomial& m) {
  NetPattern p;
  for (const auto& [site, r] : net_signs(m)) p.r.emplace_back(static_cast<int>(site), r);
  return p;
}

// Every degree-4 monomial with all sites in {y-1, y}.
std::vector<std::array<Code, 3>> three_leg_fills(long s) {
  // Three further legs of a bond term whose contracted leg sits at s: bonds
  // (s-1, s) and (s, s+1); fills entirely at s are shared by both bonds.
  std::vector<std::array<Code, 3>> out;
  absl::flat_hash_set<std::array<Code, 3>> seen;
  for (long y : {s, s + 1}) {
    std::vector<Code> opts;
    for (long site : {y - 1, y})
      for (int sign : {-1, 1}) opts.push_back(Monomial::encode(site, sign));
    for (size_t a = 0; a < 4; ++a)
      for (size_t b = a; b < 4; ++b)
        for (size_t c = b; c < 4; ++c) {
          std::array<Code, 3> t{opts[a], opts[b], opts[c]};
          std::sort(t.begin(), t.end());
          if (seen.insert(t).second) out.push_back(t);
        }
  }
  return out;
}

std::vector<Monomial> level_one() {
  std::vector<Code> opts;
  for (long site : {-1L, 0L})
    for (int sign : {-1, 1}) opts.push_back(Monomial::encode(site, sign));
  std::vector<Monomial> out;
  for (size_t a = 0; a < 4; ++a)
    for (size_t b = a; b < 4; ++b)
      for (size_t c = b; c < 4; ++c)
        for (size_t e = c; e < 4; ++e) {
          const std::array<Code, 4> t{opts[a], opts[b], opts[c], opts[e]};
          const Monomial m = Monomial::from_codes(t);
          if (!in_S(m)) out.push_back(m);
        }
  return out;
}

// Children of m: contract position k with a bond term of H_an.
template <typename Fn>
void for_each_child(const Monomial& m, int k, Fn&& fn) {
  const Factor f = m.factor(k);
  std::vector<Code> codes(m.codes().begin(), m.codes().end());
  codes.erase(codes.begin() + k);
  const size_t base = codes.size();
  codes.resize(base + 3);
  for (const auto& fill : three_leg_fills(f.site)) {
    std::copy(fill.begin(), fill.end(), codes.begin() + base);
    const Monomial child = Monomial::from_codes(codes);
    if (!in_S(child)) fn(child);
  }
}

}  // namespace

ContractibleSet build_contractible_set(int n, int exact_levels, long samples, std::uint64_t seed) {
  if (n < 1) throw ArgumentError("contractible set needs n >= 1");
  if (n > kMaxContractibleOrder) {
    std::ostringstream os;
    os << "contractible enumeration is capped at order " << kMaxContractibleOrder << ", got " << n;
    throw BudgetExceeded(os.str());
  }
  ContractibleSet set;
  set.n = n;
  set.exact_levels = std::min(n, exact_levels);
  set.levels.push_back(level_one());

  for (int level = 2; level <= set.exact_levels; ++level) {
    absl::flat_hash_set<Monomial> next;
    for (const Monomial& m : set.levels.back()) {
      for (int k = 0; k < m.degree(); ++k) {
        if (k > 0 && m.codes()[k] == m.codes()[k - 1]) continue;
        for_each_child(m, k, [&](const Monomial& c) { next.insert(c); });
      }
    }
    std::vector<Monomial> v(next.begin(), next.end());
    std::sort(v.begin(), v.end());
    set.levels.push_back(std::move(v));
  }

  // Sampled levels: random walks from the last exact level.
  if (set.exact_levels < n) {
    std::mt19937_64 rng(seed);
    std::vector<absl::flat_hash_set<Monomial>> sampled(n - set.exact_levels);
    for (long s = 0; s < samples; ++s) {
      const auto& start = set.levels.back();
      Monomial m = start[std::uniform_int_distribution<size_t>(0, start.size() - 1)(rng)];
      for (int level = set.exact_levels + 1; level <= n; ++level) {
        std::vector<Monomial> children;
        const int k = std::uniform_int_distribution<int>(0, m.degree() - 1)(rng);
        for_each_child(m, k, [&](const Monomial& c) { children.push_back(c); });
        if (children.empty()) break;
        m = children[std::uniform_int_distribution<size_t>(0, children.size() - 1)(rng)];
        sampled[level - set.exact_levels - 1].insert(m);
      }
    }
    for (auto& lv : sampled) {
      std::vector<Monomial> v(lv.begin(), lv.end());
      std::sort(v.begin(), v.end());
      set.levels.push_back(std::move(v));
    }
  }

  absl::flat_hash_set<NetPattern> pats;
  for (const auto& lv : set.levels) {
    for (const Monomial& m : lv) {
      pats.insert(pattern_of(m));
      set.support = set.support.hull({m.min_site(), m.max_site()});
    }
  }
  set.patterns.assign(pats.begin(), pats.end());
  std::sort(set.patterns.begin(), set.patterns.end(),
            [](const NetPattern& a, const NetPattern& b) { return a.r < b.r; });
  return set;
}

const ContractibleSet& contractible_set(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<ContractibleSet>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) {
    slot = std::make_unique<ContractibleSet>(
        build_contractible_set(n, kExactContractibleLevels, 200000, 0x5eed0000 + n));
  }
  return *slot;
}

double min_abs_delta(long x, const ContractibleSet& set, const DisorderRealization& d) {
  double best = std::numeric_limits<double>::infinity();
  for (const NetPattern& p : set.patterns) best = std::min(best, std::abs(p.delta(x, d)));
  return best;
}

}  // namespace chainlab
