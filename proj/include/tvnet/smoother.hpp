#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tvnet/errors.hpp"
#include "tvnet/kernels.hpp"

namespace tvnet {

/// Level and slope of a local-linear fit at a set of evaluation points.
struct LocalLinearFit {
  std::vector<double> grid;
  std::vector<double> beta0;
  std::vector<double> beta1;
};

struct HatDiagnostics {
  std::vector<double> fitted;  // indexed like the evaluation range
  double trace = 0.0;
  double rss = 0.0;
  std::size_t count = 0;
};

namespace detail {

inline constexpr double kConditionLimit = 1e12;

struct NormalSums {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  double t0 = 0.0, t1 = 0.0;
  std::size_t support = 0;
};

/// Solves the centred 2x2 weighted normal equations. `scale` is the bandwidth,
/// used to make the condition check unit-free.
inline std::pair<double, double> solve_normal(const NormalSums& s, double scale, double where) {
  const double a = s.s0, c = s.s1 / scale, d = s.s2 / (scale * scale);
  const double tr = a + d;
  const double disc = std::sqrt((a - d) * (a - d) + 4.0 * c * c);
  const double l1 = std::abs(0.5 * (tr + disc));
  const double l2 = std::abs(0.5 * (tr - disc));
  const double big = std::max(l1, l2), small = std::min(l1, l2);
  if (s.support < 3 || !(small > 0.0) || big / small > kConditionLimit)
    throw SingularDesign("local-linear design is singular at t = " + std::to_string(where) +
                         "; bandwidth too small or evaluation point too close to the boundary");
  const double det = s.s0 * s.s2 - s.s1 * s.s1;
  return {(s.s2 * s.t0 - s.s1 * s.t1) / det, (s.s0 * s.t1 - s.s1 * s.t0) / det};
}

}  // namespace detail

/// Local-linear regression of y_j on (1, t_j - t) with weights K((t_j - t)/bw),
/// t_j = j/n for j = 1..n (y[j-1]). NaN responses are treated as unavailable.
/// Evaluation points may lie anywhere in [0, 1].
template <KernelFunction K>
LocalLinearFit local_linear_fit(std::span<const double> y, double bw, const K& kernel,
                                std::span<const double> grid) {
  if (!(bw > 0.0)) throw ConfigError("bandwidth must be positive");
  const auto n = static_cast<double>(y.size());
  LocalLinearFit out;
  out.grid.assign(grid.begin(), grid.end());
  out.beta0.resize(grid.size());
  out.beta1.resize(grid.size());
  const double reach = kernel.radius() * bw;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double t = grid[g];
    detail::NormalSums s;
    const auto lo = static_cast<long>(std::max(1.0, std::floor((t - reach) * n)));
    const auto hi = static_cast<long>(std::min(n, std::ceil((t + reach) * n)));
    for (long j = lo; j <= hi; ++j) {
      const double v = y[static_cast<std::size_t>(j - 1)];
      if (std::isnan(v)) continue;
      const double x = static_cast<double>(j) / n - t;
      const double w = kernel(x / bw);
      if (w == 0.0) continue;
      ++s.support;
      s.s0 += w;
      s.s1 += w * x;
      s.s2 += w * x * x;
      s.t0 += w * v;
      s.t1 += w * x * v;
    }
    const auto [b0, b1] = detail::solve_normal(s, bw, t);
    out.beta0[g] = b0;
    out.beta1[g] = b1;
  }
  return out;
}

/// Local-linear smoother restricted to design points. Kernel weights depend
/// only on the integer offset j - c, so they are tabulated once and the
/// symmetric sums of a complete window are exact.
class DesignSmoother {
 public:
  template <KernelFunction K>
  DesignSmoother(std::size_t n, double bw, const K& kernel) : n_(n), bw_(bw) {
    if (!(bw > 0.0)) throw ConfigError("bandwidth must be positive");
    const double nd = static_cast<double>(n);
    half_ = static_cast<long>(std::ceil(kernel.radius() * bw * nd));
    weights_.resize(static_cast<std::size_t>(half_) + 1);
    for (long k = 0; k <= half_; ++k) weights_[static_cast<std::size_t>(k)] = kernel(static_cast<double>(k) / (nd * bw));
    full_.s0 = weights_[0];
    full_.support = weights_[0] != 0.0 ? 1 : 0;
    for (long k = 1; k <= half_; ++k) {
      const double w = weights_[static_cast<std::size_t>(k)];
      const double x = static_cast<double>(k) / nd;
      full_.s0 += 2.0 * w;
      full_.s2 += 2.0 * w * x * x;
      if (w != 0.0) full_.support += 2;
    }
  }

  [[nodiscard]] std::size_t n() const noexcept { return n_; }
  [[nodiscard]] double bandwidth() const noexcept { return bw_; }
  [[nodiscard]] long half_width() const noexcept { return half_; }
  [[nodiscard]] double weight(long offset) const noexcept {
    const long a = offset < 0 ? -offset : offset;
    return a > half_ ? 0.0 : weights_[static_cast<std::size_t>(a)];
  }

  /// Fit at design index c (1-based). Returns {level, slope}.
  [[nodiscard]] std::pair<double, double> fit(std::span<const double> y, long c) const {
    auto s = sums(y, c);
    return detail::solve_normal(s, bw_, static_cast<double>(c) / static_cast<double>(n_));
  }

  [[nodiscard]] double level(std::span<const double> y, long c) const { return fit(y, c).first; }

  /// Fitted value at c together with the diagonal hat entry Q_{cc}.
  [[nodiscard]] std::pair<double, double> level_and_self_weight(std::span<const double> y, long c) const {
    auto s = sums(y, c);
    const auto [b0, b1] = detail::solve_normal(s, bw_, static_cast<double>(c) / static_cast<double>(n_));
    (void)b1;
    const double det = s.s0 * s.s2 - s.s1 * s.s1;
    const double self = std::isnan(y[static_cast<std::size_t>(c - 1)]) ? 0.0 : weights_[0] * s.s2 / det;
    return {b0, self};
  }

  /// Equivalent weights l_j such that level(y, c) = sum_j l_j y_j (dense, length n).
  [[nodiscard]] std::vector<double> equivalent_weights(std::span<const double> y, long c) const {
    auto s = sums(y, c);
    (void)detail::solve_normal(s, bw_, static_cast<double>(c) / static_cast<double>(n_));
    const double det = s.s0 * s.s2 - s.s1 * s.s1;
    std::vector<double> l(n_, 0.0);
    const double nd = static_cast<double>(n_);
    for (long j = std::max(1L, c - half_); j <= std::min(static_cast<long>(n_), c + half_); ++j) {
      if (std::isnan(y[static_cast<std::size_t>(j - 1)])) continue;
      const double x = static_cast<double>(j - c) / nd;
      l[static_cast<std::size_t>(j - 1)] = weight(j - c) * (s.s2 - s.s1 * x) / det;
    }
    return l;
  }

 private:
  [[nodiscard]] detail::NormalSums sums(std::span<const double> y, long c) const {
    const long n = static_cast<long>(n_);
    const double nd = static_cast<double>(n_);
    detail::NormalSums s;
    const bool complete = c - half_ >= 1 && c + half_ <= n && !has_gap(y, c);
    if (complete) {
      s = full_;
      s.t0 = weights_[0] * y[static_cast<std::size_t>(c - 1)];
      for (long k = 1; k <= half_; ++k) {
        const double w = weights_[static_cast<std::size_t>(k)];
        const double up = y[static_cast<std::size_t>(c + k - 1)];
        const double dn = y[static_cast<std::size_t>(c - k - 1)];
        s.t0 += w * (up + dn);
        s.t1 += w * (static_cast<double>(k) / nd) * (up - dn);
      }
      return s;
    }
    for (long j = std::max(1L, c - half_); j <= std::min(n, c + half_); ++j) {
      const double v = y[static_cast<std::size_t>(j - 1)];
      if (std::isnan(v)) continue;
      const double w = weight(j - c);
      if (w == 0.0) continue;
      const double x = static_cast<double>(j - c) / nd;
      ++s.support;
      s.s0 += w;
      s.s1 += w * x;
      s.s2 += w * x * x;
      s.t0 += w * v;
      s.t1 += w * x * v;
    }
    return s;
  }

  [[nodiscard]] bool has_gap(std::span<const double> y, long c) const {
    // Unavailable responses only ever form leading or trailing runs
    // (differencing, trimmed trends), so the window edges decide.
    return std::isnan(y[static_cast<std::size_t>(c - half_ - 1)]) ||
           std::isnan(y[static_cast<std::size_t>(c + half_ - 1)]);
  }

  std::size_t n_;
  double bw_;
  long half_ = 0;
  std::vector<double> weights_;
  detail::NormalSums full_{};
};

/// Fitted values, hat-matrix trace and residual sum of squares over design
/// indices first..last (1-based, inclusive). Unavailable responses are skipped.
template <KernelFunction K>
HatDiagnostics hat_diagnostics(std::span<const double> y, double bw, const K& kernel, long first, long last) {
  DesignSmoother sm(y.size(), bw, kernel);
  HatDiagnostics out;
  out.fitted.reserve(static_cast<std::size_t>(std::max(0L, last - first + 1)));
  for (long c = first; c <= last; ++c) {
    const double v = y[static_cast<std::size_t>(c - 1)];
    const auto [fit, self] = sm.level_and_self_weight(y, c);
    out.fitted.push_back(fit);
    if (std::isnan(v)) continue;
    out.trace += self;
    out.rss += (v - fit) * (v - fit);
    ++out.count;
  }
  return out;
}

}  // namespace tvnet
