#pragma once

#include "occ/types.hpp"

#include <cmath>
#include <cstdint>

namespace occ {

/// Seeded counter-based random stream (splitmix64). Pure integer arithmetic
/// plus one fixed uint64-to-double conversion, so sequences are identical on
/// every platform. One stream per thread; streams are cheap value types.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : state_(seed) {}

  /// Stream for one episode of a run: seed XOR a mixed episode index, so
  /// episode e is reproducible in isolation and streams do not collide.
  static RandomStream for_episode(std::uint64_t seed, std::uint64_t episode) {
    return RandomStream(seed ^ mix(episode + 0x9E3779B97F4A7C15ull));
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix(state_);
  }

  /// Uniform in [0, 1) with 53 random bits.
  Real uniform01() { return static_cast<Real>(next_u64() >> 11) * 0x1.0p-53; }

  Real uniform(Real lo, Real hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n).
  Index below(Index n) {
    return static_cast<Index>(next_u64() % static_cast<std::uint64_t>(n));
  }

  /// Draw from a probability vector (assumed nonnegative, summing to ~1).
  /// Rounding at the top end falls back to the last positive slot, so Dirac
  /// rows are sampled exactly.
  Index categorical(const Eigen::Ref<const Vector>& probs) {
    const Real u = uniform01();
    Real cum = 0;
    Index last_positive = -1;
    for (Index i = 0; i < probs.size(); ++i) {
      if (probs[i] <= 0) continue;
      last_positive = i;
      cum += probs[i];
      if (u < cum) return i;
    }
    return last_positive;
  }

  /// Standard exponential via inversion; used for Dirichlet-style rows.
  Real exponential() {
    Real u;
    do {
      u = uniform01();
    } while (u <= 0);
    return -std::log(u);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace occ
