#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace olpi {

// Counter-based pseudorandom generator: a splitmix64 finalizer applied to a
// keyed counter. A single root seed drives every subsystem through labeled
// child streams, so runs are reproducible bit-for-bit across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Derives an independent child generator for a labeled subsystem or index.
  Rng stream(std::uint64_t label) const;
  Rng stream(std::string_view label) const;

  std::uint64_t next_u64();

  // Uniform on [0, 1), 53 bits of mantissa.
  double next_double();

  // Standard normal (Box-Muller, second value cached).
  double next_gaussian();

  // Uniform on {0, ..., bound-1}.
  int next_int(int bound);

  static std::uint64_t mix(std::uint64_t z);
  static double to_unit(std::uint64_t bits);
  static std::uint64_t hash_bytes(std::string_view bytes, std::uint64_t seed = 0);

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Uniform random permutation of {0, ..., n-1} (Fisher-Yates).
std::vector<int> random_permutation(int n, Rng& rng);

}  // namespace olpi
