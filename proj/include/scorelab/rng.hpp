#pragma once

#include <cstdint>

namespace scorelab::numcore {

// Deterministic counter-seeded generator (xoshiro256** over splitmix64
// expansion). Identical seeds produce identical streams on every platform;
// fork(k) derives an independent stream from the original seed only, so the
// set of child streams does not depend on how much the parent has drawn.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();
  double uniform();                        // [0, 1)
  double normal();                         // N(0, 1), Box-Muller
  std::int64_t uniform_int(std::int64_t n);  // [0, n)

  Rng fork(std::uint64_t stream) const;
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace scorelab::numcore
