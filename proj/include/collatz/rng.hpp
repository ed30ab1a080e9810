// SPDX-License-Identifier: Apache-2.0
#pragma once

// Canonical random stream for the whole project.
//
// Engine: std::mt19937_64 (its output sequence is fixed by the C++ standard).
// Bounded integers and uniform doubles are derived here directly from raw
// engine output so that splits are identical on every platform. Normal, gamma
// and Poisson variates come from Boost.Random, whose algorithms do not vary
// between standard library implementations.
//
// Substreams are keyed: substream(seed, a, b) hashes the key tuple with the
// SplitMix64 finalizer and seeds a fresh engine. Work items that own a key
// (chain index, test-point index) therefore draw the same numbers whatever
// the thread schedule.

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include <cstdint>
#include <random>

namespace collatz {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Well-known stream tags, so that different consumers of one user seed never
/// share a substream.
enum class Stream : std::uint64_t {
  kSplit = 1,
  kChain = 2,
  kPosteriorPredictive = 3,
  kGenerator = 4,
  kGeneratorW1 = 5,
  kTrace = 6,
  kSynthetic = 7,
};

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream keyed by (seed, stream, index).
  static Rng substream(std::uint64_t seed, Stream stream, std::uint64_t index = 0) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
    h = splitmix64(h ^ index);
    return Rng(h);
  }

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Unbiased integer in [0, bound) (Lemire's multiply-and-reject).
  std::uint64_t uniform_below(std::uint64_t bound) {
    unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = -bound % bound;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(engine_()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  double normal(double mean = 0.0, double sd = 1.0) {
    return boost::random::normal_distribution<double>(mean, sd)(*this);
  }

  double gamma(double shape, double scale) {
    return boost::random::gamma_distribution<double>(shape, scale)(*this);
  }

  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    return boost::random::poisson_distribution<std::uint64_t, double>(mean)(*this);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace collatz
