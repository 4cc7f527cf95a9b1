#pragma once

#include <cstdint>
#include <random>

namespace vsm {

// Seeded stream with toolchain-independent draws (std distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi);

  double normal();

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  std::mt19937_64 engine_;
};

// Independent sub-stream seed for (base, stream) via splitmix64.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace vsm
