#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tvnet/panel.hpp"

namespace testing_util {

inline std::vector<double> gaussian(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

inline std::vector<double> uniform(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

/// p independent N(0, 1) series of length n.
inline tvnet::Panel white_noise(std::size_t n, std::size_t p, std::uint64_t seed) {
  return tvnet::Panel(n, p, gaussian(n * p, seed));
}

/// AR(1) series x_j = phi x_{j-1} + e_j started from its stationary law.
inline std::vector<double> ar1(std::size_t n, double phi, std::uint64_t seed) {
  const auto e = gaussian(n + 1, seed);
  std::vector<double> x(n);
  double prev = e[n] / std::sqrt(1.0 - phi * phi);
  for (std::size_t j = 0; j < n; ++j) x[j] = prev = phi * prev + e[j];
  return x;
}

}  // namespace testing_util
