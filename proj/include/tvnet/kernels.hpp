#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <limits>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "tvnet/errors.hpp"

namespace tvnet {

/// A compactly supported smoothing kernel: K(u) is zero for |u| >= radius().
template <class K>
concept KernelFunction = requires(const K& k, double u) {
  { k(u) } -> std::convertible_to<double>;
  { k.radius() } -> std::convertible_to<double>;
};

namespace detail {

/// Integrates f over consecutive breakpoints. Each piece is smooth, so a
/// 31-point Gauss-Kronrod rule is exact for the polynomial kernels used here.
template <class F>
double integrate_pieces(F&& f, std::vector<double> breaks) {
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-15; }),
               breaks.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    double err = 0.0;
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        f, breaks[i], breaks[i + 1], 10, 1e-13, &err);
  }
  return total;
}

}  // namespace detail

struct KernelMoments {
  double mu0 = 0.0;    // integral of K
  double mu2 = 0.0;    // integral of u^2 K
  double kappa = 0.0;  // integral of K^2
};

/// Fourth-order polynomial kernel K(u) = (15/32)(3 - 7u^2)(1 - u^2) on (-1, 1).
///
/// The second moment vanishes, so the kernel takes negative values for
/// |u| > sqrt(3/7). Moments are computed once by quadrature.
class FourthOrderKernel {
 public:
  FourthOrderKernel() {
    const auto self = *this;
    moments_.mu0 = detail::integrate_pieces([&](double u) { return self(u); }, {-1.0, 1.0});
    moments_.mu2 = detail::integrate_pieces([&](double u) { return u * u * self(u); }, {-1.0, 1.0});
    moments_.kappa = detail::integrate_pieces([&](double u) { return self(u) * self(u); }, {-1.0, 1.0});
  }

  double operator()(double u) const noexcept {
    if (!(std::abs(u) < 1.0)) return 0.0;
    const double u2 = u * u;
    return 15.0 / 32.0 * (3.0 - 7.0 * u2) * (1.0 - u2);
  }

  [[nodiscard]] double radius() const noexcept { return 1.0; }
  [[nodiscard]] std::vector<double> breakpoints() const { return {-1.0, 1.0}; }
  [[nodiscard]] const KernelMoments& moments() const noexcept { return moments_; }
  [[nodiscard]] double kappa() const noexcept { return moments_.kappa; }

 private:
  KernelMoments moments_{};
};

/// Epanechnikov kernel (3/4)(1 - u^2) on (-1, 1). Used for the long-run
/// variance weights, which must be non-negative.
struct EpanechnikovKernel {
  double operator()(double u) const noexcept {
    if (!(std::abs(u) < 1.0)) return 0.0;
    return 0.75 * (1.0 - u * u);
  }
  [[nodiscard]] double radius() const noexcept { return 1.0; }
};

/// Interpolation coefficients A_0(r) + A_1(r) + A_2(r) = 1.
inline double interp_a0(double r) noexcept { return r * (r - 1.0) / 2.0; }
inline double interp_a1(double r) noexcept { return 1.0 - r * r; }
inline double interp_a2(double r) noexcept { return r * (r + 1.0) / 2.0; }

struct CheckKernelParams {
  double r = 0.7071067811865476;
  double delta = 1.3;

  void validate() const {
    if (!(r > -1.0 && r < 1.0)) throw ConfigError("kernel.r must lie in (-1, 1)");
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("kernel.delta must be a finite non-negative number");
  }

  [[nodiscard]] std::array<double, 3> coefficients(double sign) const noexcept {
    const double rr = sign * r;
    return {interp_a0(rr), interp_a1(rr), interp_a2(rr)};
  }
};

/// Smoothing range at time t for the variance-reduced estimator:
/// delta(t) = min{delta, (t - b)/((r+1)b), (1 - b - t)/((r+1)b)}, clamped at 0
/// outside [b, 1 - b].
inline double reduction_range(double t, double b, const CheckKernelParams& p) noexcept {
  const double scale = (p.r + 1.0) * b;
  const double v = std::min({p.delta, (t - b) / scale, (1.0 - b - t) / scale});
  return std::max(0.0, v);
}

/// Equivalent kernel of the variance-reduced estimator,
///   Kc(t) = (Kc+(t) + Kc-(t)) / 2,  Kc±(t) = sum_j A_j(±r) K(t + (±r + 1 - j) delta).
template <KernelFunction Base = FourthOrderKernel>
class CheckKernel {
 public:
  CheckKernel(Base base, CheckKernelParams params) : base_(std::move(base)), params_(params) {
    params_.validate();
    for (int s = 0; s < 2; ++s) {
      const double sign = s == 0 ? 1.0 : -1.0;
      const auto a = params_.coefficients(sign);
      for (int j = 0; j < 3; ++j) {
        coef_[3 * s + j] = 0.5 * a[j];
        shift_[3 * s + j] = (sign * params_.r + 1.0 - j) * params_.delta;
      }
    }
    std::vector<double> breaks;
    for (double c : shift_) {
      breaks.push_back(-base_.radius() - c);
      breaks.push_back(base_.radius() - c);
    }
    radius_ = base_.radius() + (1.0 + std::abs(params_.r)) * params_.delta;
    kappa_ = detail::integrate_pieces([this](double u) { const double v = (*this)(u); return v * v; }, breaks);
    mass_ = detail::integrate_pieces([this](double u) { return (*this)(u); }, breaks);
  }

  double operator()(double u) const noexcept {
    if (!(std::abs(u) < radius_)) return 0.0;
    double v = 0.0;
    for (std::size_t i = 0; i < 6; ++i) v += coef_[i] * base_(u + shift_[i]);
    return v;
  }

  [[nodiscard]] double radius() const noexcept { return radius_; }
  [[nodiscard]] double kappa() const noexcept { return kappa_; }
  [[nodiscard]] double mass() const noexcept { return mass_; }
  [[nodiscard]] const CheckKernelParams& params() const noexcept { return params_; }
  [[nodiscard]] const Base& base() const noexcept { return base_; }

 private:
  Base base_;
  CheckKernelParams params_;
  std::array<double, 6> coef_{};
  std::array<double, 6> shift_{};
  double radius_ = 1.0;
  double kappa_ = 0.0;
  double mass_ = 1.0;
};

template <KernelFunction K>
KernelMoments kernel_moments(const K& k) {
  const double r = k.radius();
  KernelMoments m;
  m.mu0 = detail::integrate_pieces([&](double u) { return k(u); }, {-r, 0.0, r});
  m.mu2 = detail::integrate_pieces([&](double u) { return u * u * k(u); }, {-r, 0.0, r});
  m.kappa = detail::integrate_pieces([&](double u) { const double v = k(u); return v * v; }, {-r, 0.0, r});
  return m;
}

/// Builds the variance-reduced kernel after checking the base kernel is a
/// valid fourth-order kernel (unit mass, vanishing second moment).
template <KernelFunction Base>
CheckKernel<Base> build_check_kernel(const Base& base, const CheckKernelParams& params) {
  const auto m = kernel_moments(base);
  if (std::abs(m.mu0 - 1.0) > 1e-9) throw ConfigError("base kernel must integrate to one");
  if (std::abs(m.mu2) > 1e-9) throw ConfigError("base kernel must have a vanishing second moment");
  if (!(m.kappa > 0.0)) throw ConfigError("base kernel must have positive squared integral");
  if (std::abs(base(0.3) - base(-0.3)) > 1e-14 || std::abs(base(0.8) - base(-0.8)) > 1e-14)
    throw ConfigError("base kernel must be symmetric");
  return CheckKernel<Base>(base, params);
}

}  // namespace tvnet
