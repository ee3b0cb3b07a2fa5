#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tvnet/errors.hpp"
#include "tvnet/kernels.hpp"
#include "tvnet/panel.hpp"
#include "tvnet/parallel.hpp"
#include "tvnet/smoother.hpp"

namespace tvnet {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Directed lag triple: correlation between series i at time j and series l at time j + k.
struct LagTriple {
  std::size_t i = 0;
  std::size_t l = 0;
  std::size_t k = 0;
  auto operator<=>(const LagTriple&) const = default;
};

inline std::string to_string(const LagTriple& z) {
  return "(" + std::to_string(z.i) + "," + std::to_string(z.l) + "," + std::to_string(z.k) + ")";
}

/// ceil(n b), robust to b * n landing a hair above an integer.
inline long ceil_nb(std::size_t n, double b) {
  return static_cast<long>(std::ceil(static_cast<double>(n) * b - 1e-9));
}

/// Differencing lag h and tail cut h_tilde; every lag k must satisfy k < h - h_tilde.
struct DifferencingLags {
  long h = 0;
  long h_tilde = 0;

  static DifferencingLags automatic(std::size_t n, std::size_t max_lag) {
    const double ln = std::log(static_cast<double>(n));
    DifferencingLags d;
    d.h = std::max(static_cast<long>(std::ceil(2.0 * ln)), static_cast<long>(2 * max_lag + 2));
    d.h_tilde = static_cast<long>(std::ceil(ln));
    return d;
  }

  void validate(std::size_t n, const std::vector<LagTriple>& triples) const {
    if (h_tilde < 1 || h <= h_tilde) throw ConfigError("differencing lags need 0 < h_tilde < h");
    if (h >= static_cast<long>(n)) throw LagTooLarge("differencing lag h must be below the series length");
    for (const auto& z : triples)
      if (static_cast<long>(z.k) >= h - h_tilde)
        throw LagTooLarge("lag " + std::to_string(z.k) + " of triple " + to_string(z) +
                          " needs k < h - h_tilde = " + std::to_string(h - h_tilde));
  }
};

/// The index set of triples with their smoothing bandwidths.
struct BandSet {
  std::vector<LagTriple> triples;
  std::vector<double> bandwidths;  // b_z
  double b = 0.0;                  // max b_z
  std::vector<double> normalizers; // c_z = sqrt(b / b_z)
  DifferencingLags lags;

  /// Validates and fills derived fields. `floor` is the minimum admissible
  /// ratio b_z / b.
  static BandSet make(std::size_t n, std::vector<LagTriple> triples, std::vector<double> bws,
                      DifferencingLags lags, double floor = 0.5) {
    if (triples.empty()) throw ConfigError("the triple set is empty");
    if (bws.size() != triples.size()) throw ConfigError("one bandwidth per triple is required");
    BandSet s;
    s.triples = std::move(triples);
    s.bandwidths = std::move(bws);
    s.lags = lags;
    for (double v : s.bandwidths)
      if (!(v > 0.0 && v < 0.5)) throw BandwidthTooLarge("bandwidths must lie in (0, 1/2)");
    s.b = *std::max_element(s.bandwidths.begin(), s.bandwidths.end());
    for (double v : s.bandwidths) {
      if (v / s.b < floor - 1e-12)
        throw ConfigError("bandwidth ratio b_z/b below the configured floor " + std::to_string(floor));
      s.normalizers.push_back(std::sqrt(s.b / v));
    }
    if (static_cast<long>(n) - 2 * ceil_nb(n, s.b) < 1)
      throw BandwidthTooLarge("n - 2 ceil(n b) must be at least 1");
    s.lags.validate(n, s.triples);
    return s;
  }

  [[nodiscard]] std::size_t size() const noexcept { return triples.size(); }
  [[nodiscard]] std::size_t max_lag() const {
    std::size_t m = 0;
    for (const auto& z : triples) m = std::max(m, z.k);
    return m;
  }
};

/// Design indices first..last (1-based) on which curves and bands live.
struct EvalDomain {
  std::size_t n = 0;
  long first = 1;
  long last = 0;

  static EvalDomain interior(std::size_t n, double b, long extra = 0) {
    EvalDomain d;
    d.n = n;
    d.first = ceil_nb(n, b) + extra;
    d.last = static_cast<long>(n) - ceil_nb(n, b) - extra;
    if (d.last < d.first) throw BandwidthTooLarge("evaluation domain is empty");
    return d;
  }

  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(last - first + 1); }
  [[nodiscard]] double t(long j) const noexcept { return static_cast<double>(j) / static_cast<double>(n); }
  [[nodiscard]] bool contains(long j) const noexcept { return j >= first && j <= last; }
  [[nodiscard]] long clamp(long j) const noexcept { return std::clamp(j, first, last); }
};

/// Lagged differences Y_j - Y_{j-lag}; entries j <= lag are unavailable (NaN).
inline std::vector<double> difference(std::span<const double> y, std::size_t lag) {
  if (lag >= y.size()) throw LagTooLarge("differencing lag must be below the series length");
  std::vector<double> d(y.size(), kNaN);
  for (std::size_t j = lag; j < y.size(); ++j) d[j] = y[j] - y[j - lag];
  return d;
}

inline std::vector<double> difference(const Panel& panel, std::size_t series, std::size_t lag) {
  return difference(panel.series(series), lag);
}

inline std::vector<double> product(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j] * b[j];
  return out;
}

enum class Variant { plain, reduced, plugin };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::plain: return "diff";
    case Variant::reduced: return "red";
    case Variant::plugin: return "plugin";
  }
  return "?";
}

/// Curves for one triple. Every vector has length n (index j - 1); values
/// outside the evaluation domain repeat the nearest domain value.
struct TripleCurves {
  std::vector<double> rho;
  std::vector<double> gamma;
  std::vector<double> sigma;
  std::vector<double> gamma0_i;
  std::vector<double> gamma0_l;
  // Fitted levels of the product responses, used to centre residuals.
  std::vector<double> beta_k;   // of y^i_k y^l_h
  std::vector<double> beta_h;   // of y^i_h y^l_h
  std::vector<double> beta_hi;  // of y^i_h y^i_h
  std::vector<double> beta_hl;  // of y^l_h y^l_h
};

struct CurveSet {
  Variant variant = Variant::plain;
  EvalDomain domain;
  std::vector<LagTriple> triples;
  std::vector<TripleCurves> curves;
};

/// Smoothing range delta(t) for the variance-reduced estimator.
inline double delta_of_t(double t, double b, const CheckKernelParams& p) { return reduction_range(t, b, p); }

namespace detail {

inline void extend_constant(std::vector<double>& v, const EvalDomain& d) {
  for (long j = 1; j < d.first; ++j) v[static_cast<std::size_t>(j - 1)] = v[static_cast<std::size_t>(d.first - 1)];
  for (long j = d.last + 1; j <= static_cast<long>(d.n); ++j)
    v[static_cast<std::size_t>(j - 1)] = v[static_cast<std::size_t>(d.last - 1)];
}

/// Plain level fit on the domain, constant-extended outside.
inline std::vector<double> level_curve(const DesignSmoother& sm, std::span<const double> y, const EvalDomain& d) {
  std::vector<double> out(d.n, kNaN);
  for (long c = d.first; c <= d.last; ++c) out[static_cast<std::size_t>(c - 1)] = sm.level(y, c);
  extend_constant(out, d);
  return out;
}

/// Interpolated combination of plain fits at shifted design points:
/// (1/2) sum_{+-} sum_j A_j(+-r) beta(t - (+-r + 1 - j) delta(t) b_z). Shifted
/// points are snapped to the nearest design index inside the domain.
inline std::vector<double> reduce_curve(const std::vector<double>& plain, const EvalDomain& d, double bz, double b,
                                        const CheckKernelParams& p) {
  std::vector<double> out(plain);
  const double nd = static_cast<double>(d.n);
  for (long c = d.first; c <= d.last; ++c) {
    const double omega = delta_of_t(d.t(c), b, p) * bz;
    std::map<long, double> weights;
    for (int s = 0; s < 2; ++s) {
      const double sign = s == 0 ? 1.0 : -1.0;
      const double rr = sign * p.r;
      const auto a = p.coefficients(sign);
      for (int j = 0; j < 3; ++j) {
        const long off = std::lround((rr + 1.0 - j) * omega * nd);
        weights[d.clamp(c - off)] += 0.5 * a[static_cast<std::size_t>(j)];
      }
    }
    if (weights.size() == 1) continue;  // no shift: keep the plain fit exactly
    double v = 0.0;
    for (const auto& [idx, w] : weights) v += w * plain[static_cast<std::size_t>(idx - 1)];
    out[static_cast<std::size_t>(c - 1)] = v;
  }
  return out;
}

}  // namespace detail

struct EstimatorOptions {
  CheckKernelParams check{};
  std::size_t threads = 1;
  double variance_floor = 1e-10;
};

/// Local-linear level fit of the product responses y^i_k y^l_h at bandwidth b_z.
template <KernelFunction K>
std::vector<double> beta_hat(const Panel& panel, const LagTriple& z, long h, double bz, const K& kernel,
                             const EvalDomain& d) {
  const auto yi = difference(panel, z.i, z.k);
  const auto yl = difference(panel, z.l, static_cast<std::size_t>(h));
  const auto resp = product(yi, yl);
  DesignSmoother sm(panel.n(), bz, kernel);
  return detail::level_curve(sm, resp, d);
}

/// Difference-based correlation curves for every triple; `variant` selects
/// the plain or the variance-reduced combination.
template <KernelFunction K>
CurveSet estimate_curves(const Panel& panel, const BandSet& bands, const K& kernel, Variant variant,
                         const EstimatorOptions& opt = {}) {
  if (variant == Variant::plugin) throw ConfigError("plug-in curves are built by the plugin module");
  if (variant == Variant::reduced) opt.check.validate();
  const std::size_t n = panel.n();
  const long h = bands.lags.h;
  CurveSet cs;
  cs.variant = variant;
  cs.domain = EvalDomain::interior(n, bands.b);
  cs.triples = bands.triples;
  cs.curves.resize(bands.size());

  std::vector<std::vector<double>> dh(panel.p());
  for (std::size_t i = 0; i < panel.p(); ++i) dh[i] = difference(panel, i, static_cast<std::size_t>(h));

  parallel_for(bands.size(), opt.threads, [&](std::size_t zi) {
    const auto& z = bands.triples[zi];
    const double bz = bands.bandwidths[zi];
    const auto& d = cs.domain;
    DesignSmoother sm(n, bz, kernel);
    const auto yk = difference(panel, z.i, z.k);
    auto fit = [&](const std::vector<double>& a, const std::vector<double>& b2) {
      auto v = detail::level_curve(sm, product(a, b2), d);
      if (variant == Variant::reduced) v = detail::reduce_curve(v, d, bz, bands.b, opt.check);
      return v;
    };
    TripleCurves tc;
    tc.beta_k = fit(yk, dh[z.l]);
    tc.beta_h = fit(dh[z.i], dh[z.l]);
    tc.beta_hi = fit(dh[z.i], dh[z.i]);
    tc.beta_hl = z.i == z.l ? tc.beta_hi : fit(dh[z.l], dh[z.l]);

    tc.gamma.resize(n);
    tc.gamma0_i.resize(n);
    tc.gamma0_l.resize(n);
    tc.sigma.resize(n);
    tc.rho.resize(n);
    const double floor_i = opt.variance_floor * panel.sample_variance(z.i);
    const double floor_l = opt.variance_floor * panel.sample_variance(z.l);
    for (std::size_t j = 0; j < n; ++j) {
      tc.gamma[j] = tc.beta_h[j] / 2.0 - tc.beta_k[j];
      tc.gamma0_i[j] = tc.beta_hi[j] / 2.0;
      tc.gamma0_l[j] = tc.beta_hl[j] / 2.0;
      const long c = static_cast<long>(j) + 1;
      if (d.contains(c) && (!(tc.gamma0_i[j] > floor_i) || !(tc.gamma0_l[j] > floor_l)))
        throw DegenerateVariance("marginal variance estimate vanishes for triple " + to_string(z) + " at t = " +
                                 std::to_string(d.t(c)));
      tc.sigma[j] = z.i == z.l ? tc.gamma0_i[j] : std::sqrt(tc.gamma0_i[j] * tc.gamma0_l[j]);
      tc.rho[j] = tc.gamma[j] / tc.sigma[j];
    }
    cs.curves[zi] = std::move(tc);
  });
  return cs;
}

template <KernelFunction K>
CurveSet rho_plain(const Panel& panel, const BandSet& bands, const K& kernel, const EstimatorOptions& opt = {}) {
  return estimate_curves(panel, bands, kernel, Variant::plain, opt);
}

template <KernelFunction K>
CurveSet rho_reduced(const Panel& panel, const BandSet& bands, const K& kernel, const EstimatorOptions& opt = {}) {
  return estimate_curves(panel, bands, kernel, Variant::reduced, opt);
}

}  // namespace tvnet
