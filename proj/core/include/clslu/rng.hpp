#pragma once

#include <array>
#include <cstdint>

namespace clslu {

// xoshiro256++ seeded through splitmix64. Deliberately not the platform
// default engine: identical seeds give identical draw sequences on every
// platform and toolchain.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform();

  // Standard normal via the Marsaglia polar method (one cached spare).
  double normal();

  // Uniform integer in [0, n), n > 0. Unbiased (Lemire rejection).
  int64_t uniform_int(int64_t n);

  uint64_t seed() const { return seed_; }

 private:
  std::array<uint64_t, 4> state_;
  uint64_t seed_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace clslu
