#pragma once

#include <cstdint>

namespace chainlab {

// SplitMix64 finalizer; used as a counter-based generator so that every
// (seed, key, draw) triple maps to a fixed value.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_key(std::uint64_t seed, std::uint64_t key) {
  return splitmix64(seed ^ splitmix64(key + 0x632be59bd9b4e019ULL));
}

class KeyedStream {
 public:
  KeyedStream(std::uint64_t seed, std::uint64_t key) : state_(mix_key(seed, key)) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace chainlab
