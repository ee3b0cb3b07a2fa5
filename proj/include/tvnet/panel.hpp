#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tvnet/errors.hpp"

namespace tvnet {

/// An n x p block of observations on the implicit grid t_j = j/n, j = 1..n.
/// Stored column-major so each series is contiguous.
class Panel {
 public:
  Panel() = default;

  Panel(std::size_t n, std::size_t p, std::vector<double> values, std::vector<std::string> names = {})
      : n_(n), p_(p), values_(std::move(values)), names_(std::move(names)) {
    if (values_.size() != n_ * p_) throw DataError("panel storage does not match n x p");
    if (names_.empty())
      for (std::size_t i = 0; i < p_; ++i) names_.push_back("y" + std::to_string(i + 1));
    if (names_.size() != p_) throw DataError("panel needs one name per series");
  }

  static Panel from_columns(const std::vector<std::vector<double>>& cols, std::vector<std::string> names = {}) {
    if (cols.empty()) throw DataError("panel needs at least one series");
    const std::size_t n = cols.front().size();
    std::vector<double> v;
    v.reserve(n * cols.size());
    for (const auto& c : cols) {
      if (c.size() != n) throw DataError("all series must have the same length");
      v.insert(v.end(), c.begin(), c.end());
    }
    return Panel(n, cols.size(), std::move(v), std::move(names));
  }

  [[nodiscard]] std::size_t n() const noexcept { return n_; }
  [[nodiscard]] std::size_t p() const noexcept { return p_; }
  [[nodiscard]] const std::vector<std::string>& names() const noexcept { return names_; }

  [[nodiscard]] std::span<const double> series(std::size_t i) const {
    return {values_.data() + i * n_, n_};
  }
  [[nodiscard]] std::span<double> series(std::size_t i) { return {values_.data() + i * n_, n_}; }

  /// Observation at design index j (1-based) of series i.
  [[nodiscard]] double at(std::size_t j, std::size_t i) const { return values_[i * n_ + j - 1]; }

  [[nodiscard]] double sample_variance(std::size_t i) const {
    const auto s = series(i);
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= static_cast<double>(n_);
    double ss = 0.0;
    for (double v : s) ss += (v - mean) * (v - mean);
    return n_ > 1 ? ss / static_cast<double>(n_ - 1) : 0.0;
  }

  /// Checks the invariants needed by the estimators.
  void validate(std::size_t min_length = 50) const {
    if (p_ < 1) throw DataError("panel has no series");
    if (n_ < min_length)
      throw DataError("series length " + std::to_string(n_) + " is below the minimum of " + std::to_string(min_length));
    for (std::size_t i = 0; i < p_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        if (!std::isfinite(values_[i * n_ + j]))
          throw DataError("non-finite value in series '" + names_[i] + "' at row " + std::to_string(j + 1));
  }

 private:
  std::size_t n_ = 0;
  std::size_t p_ = 0;
  std::vector<double> values_;
  std::vector<std::string> names_;
};

}  // namespace tvnet
