#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace fedsoft::rng {

// Tags for deriving independent substreams from one base seed. Keyed streams
// make every result independent of client execution order.
enum class Stream : uint64_t {
  Params = 1,
  ClientData = 2,
  Holdout = 3,
  Init = 4,
  Selection = 5,
  Solver = 6,
};

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 substream(uint64_t seed, Stream tag, uint64_t a = 0, uint64_t b = 0) {
  uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<uint64_t>(tag));
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  return std::mt19937_64(h);
}

// The samplers below avoid std::*_distribution so the generated byte stream
// is stable across standard library implementations.

inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;  // [0, 1)
}

inline double normal01(std::mt19937_64& g) {
  // Box-Muller, cosine branch only; no cached state.
  double u1 = uniform01(g);
  double u2 = uniform01(g);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  constexpr double two_pi = 6.28318530717958647692;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

inline int uniform_int(std::mt19937_64& g, int lo, int hi) {  // inclusive bounds
  const uint64_t range = static_cast<uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(g() % range);
}

// One index drawn from a normalized probability vector (inverse CDF walk).
inline int sample_index(std::mt19937_64& g, const std::vector<double>& p) {
  const double u = uniform01(g);
  double acc = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(p.size()) - 1;
}

template <typename T>
inline void shuffle(std::vector<T>& v, std::mt19937_64& g) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(uniform_int(g, 0, static_cast<int>(i) - 1));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace fedsoft::rng
