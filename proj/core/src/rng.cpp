#include "olpi/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace olpi {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kKeySalt = 0xA0761D6478BD642FULL;
}  // namespace

std::uint64_t Rng::mix(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

double Rng::to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::hash_bytes(std::string_view bytes, std::uint64_t seed) {
  // FNV-1a over the bytes, then a final mix.
  std::uint64_t h = 0xCBF29CE484222325ULL ^ seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return mix(h);
}

Rng::Rng(std::uint64_t seed) : key_(mix(seed ^ kKeySalt)) {}

Rng Rng::stream(std::uint64_t label) const {
  Rng child(0);
  child.key_ = mix(key_ ^ mix(label + kGolden));
  child.counter_ = 0;
  return child;
}

Rng Rng::stream(std::string_view label) const {
  return stream(hash_bytes(label));
}

std::uint64_t Rng::next_u64() {
  counter_ += 1;
  return mix(key_ + counter_ * kGolden);
}

double Rng::next_double() {
  return to_unit(next_u64());
}

double Rng::next_gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // Box-Muller; u1 is kept away from zero so the log is finite.
  double u1 = 0.0;
  do {
    u1 = next_double();
  } while (u1 <= 0.0);
  const double u2 = next_double();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

int Rng::next_int(int bound) {
  if (bound <= 0) throw std::invalid_argument("Rng::next_int: bound must be positive");
  // Lemire's multiply-shift rejection method; unbiased.
  const std::uint64_t n = static_cast<std::uint64_t>(bound);
  const std::uint64_t threshold = (~std::uint64_t{0} % n + 1) % n;  // 2^64 mod n
  while (true) {
    const std::uint64_t x = next_u64();
    const unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
    if (static_cast<std::uint64_t>(m) >= threshold) {
      return static_cast<int>(m >> 64);
    }
  }
}

std::vector<int> random_permutation(int n, Rng& rng) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  for (int i = n - 1; i > 0; --i) {
    const int j = rng.next_int(i + 1);
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  return perm;
}

}  // namespace olpi
