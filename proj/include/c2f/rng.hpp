#pragma once
#include <array>
#include <cstdint>
#include <vector>

#include "c2f/common.hpp"

namespace c2f {

// xoshiro256++ with splitmix64 seeding. Self-contained so that streams are
// reproducible across standard libraries and platforms; std::*_distribution
// is implementation-defined and must not be used anywhere in this codebase.
class Rng {
 public:
  explicit Rng(u64 seed = 0) { reseed(seed); }

  void reseed(u64 seed);

  u64 next_u64();

  // Uniform in [0,1) with 53 bits of mantissa.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; caches the second deviate.
  double normal();
  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  // Uniform integer in [0, n).
  u64 below(u64 n);

  // Deterministic Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (u64 i = v.size(); i > 1; --i) {
      u64 j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // State serialization for checkpoints.
  std::array<u64, 6> state() const;
  void set_state(const std::array<u64, 6>& s);

 private:
  std::array<u64, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace c2f
