#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace spibb {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a list of tags.
/// Every consumer of randomness gets its own tagged stream so that adding a
/// consumer never shifts the draws of another.
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = mix64(base);
  for (std::uint64_t t : tags) h = mix64(h ^ mix64(t + 0x632be59bd9b4e019ULL));
  return h;
}

// Stream tags.
enum class Stream : std::uint64_t {
  kEnvironment = 1,
  kDataset = 2,
  kAgentTraining = 3,
  kBatches = 4,
  kInit = 5,
  kNoise = 6,
  kCalibration = 7,
  kEvaluation = 8,
  kPolicy = 9,
  kPrior = 10,
};

inline std::uint64_t derive_seed(std::uint64_t base, Stream s,
                                 std::uint64_t index = 0) {
  return derive_seed(base, {static_cast<std::uint64_t>(s), index});
}

/// Draws an index from a discrete distribution given by `probs`.
/// Falls back to the last index with positive mass on round-off.
template <typename Range>
int sample_categorical(const Range& probs, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  double acc = 0.0;
  int last_positive = 0;
  int i = 0;
  for (double p : probs) {
    if (p > 0.0) last_positive = i;
    acc += p;
    if (u < acc) return i;
    ++i;
  }
  return last_positive;
}

}  // namespace spibb
