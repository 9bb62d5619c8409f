#pragma once

#include <cstdint>
#include <string_view>

namespace icr {

/// Counter-based random stream keyed by (seed, purpose tag).
///
/// Draw k of a stream is a pure function of (seed, tag, k), so independent
/// consumers never perturb each other and results do not depend on the
/// order in which streams are created. Distributions are implemented here
/// rather than through <random> so output is identical across standard
/// libraries.
class Rng {
 public:
  Rng(std::uint64_t seed, std::string_view tag);
  Rng(std::uint64_t seed, std::string_view tag, std::uint64_t index);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);
  /// Uniform integer on [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi);
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace icr
