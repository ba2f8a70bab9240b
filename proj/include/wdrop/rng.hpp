#pragma once

#include <cstdint>
#include <random>

namespace wdrop {

/// SplitMix64 finalizer, used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seeded random stream. A stream is identified by (seed, stream id); the
/// same pair and the same call sequence always produce the same draws.
///
/// Child streams are derived with split(k): the child id is
/// mix64(parent_stream ^ mix64(k + 1)), so a fold/member job can be handed
/// its own stream and the draws do not depend on scheduling order.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream), engine_(mix64(seed ^ mix64(stream))) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  SeededRng split(std::uint64_t k) const {
    return SeededRng(seed_, mix64(stream_ ^ mix64(k + 1)));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal(double mean = 0.0, double stddev = 1.0) {
    return mean + stddev * normal_(engine_);
  }

  bool bernoulli(double p_true) { return uniform() < p_true; }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Fisher-Yates shuffle driven by SeededRng::index, so the permutation only
/// depends on the engine and not on the standard library's shuffle.
template <typename Vec>
void shuffle(Vec& v, SeededRng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = rng.index(i);
    using std::swap;
    swap(v[i - 1], v[j]);
  }
}

}  // namespace wdrop
