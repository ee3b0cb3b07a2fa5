#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace tvnet {

/// SplitMix64 finaliser; a good 64-bit mixing function.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based standard normal multipliers. The draw for (replicate, key)
/// depends on nothing else, so summands sharing a key share a multiplier and
/// replicates can be evaluated in any order.
class GaussianMultipliers {
 public:
  explicit GaussianMultipliers(std::uint64_t seed) noexcept : seed_(seed) {}

  [[nodiscard]] double operator()(std::uint64_t replicate, std::uint64_t key) const noexcept {
    const std::uint64_t base = mix64(mix64(seed_ ^ mix64(replicate)) + key);
    // Box-Muller from two independent 53-bit uniforms in (0, 1].
    const double u1 = (static_cast<double>(mix64(base) >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(mix64(base + 0x632be59bd9b4e019ULL) >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
};

/// Derives an independent child seed, e.g. per Monte Carlo replicate.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(master ^ mix64(index + 0x7f4a7c159e3779b9ULL));
}

}  // namespace tvnet
