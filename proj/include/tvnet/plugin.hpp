#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "tvnet/diffest.hpp"
#include "tvnet/errors.hpp"
#include "tvnet/kernels.hpp"
#include "tvnet/lrv.hpp"
#include "tvnet/panel.hpp"
#include "tvnet/smoother.hpp"

// Plug-in path for panels whose trends are smooth. It removes the trend
// explicitly, which breaks down when trends jump; the difference-based
// estimators are the default for that reason.

namespace tvnet {

struct TrendFit {
  std::vector<double> tau;                     // per series
  long trim = 0;                               // ceil(n max tau)
  std::vector<std::vector<double>> trend;      // per series, NaN outside [tau_i, 1 - tau_i]
  std::vector<std::vector<double>> residuals;  // per series, NaN outside [tau, 1 - tau]
};

/// Local-linear trend per series at design points in [tau_i, 1 - tau_i].
template <KernelFunction K>
TrendFit trend_fit(const Panel& panel, const std::vector<double>& tau, const K& kernel) {
  if (tau.size() != panel.p()) throw ConfigError("plugin.tau needs one bandwidth per series");
  const std::size_t n = panel.n();
  TrendFit tf;
  tf.tau = tau;
  for (double v : tau)
    if (!(v > 0.0 && v < 0.5)) throw ConfigError("plugin.tau must lie in (0, 1/2)");
  tf.trim = ceil_nb(n, *std::max_element(tau.begin(), tau.end()));
  for (std::size_t i = 0; i < panel.p(); ++i) {
    const auto y = panel.series(i);
    DesignSmoother sm(n, tau[i], kernel);
    std::vector<double> mu(n, kNaN), res(n, kNaN);
    const long lo = ceil_nb(n, tau[i]), hi = static_cast<long>(n) - lo;
    for (long c = lo; c <= hi; ++c) mu[static_cast<std::size_t>(c - 1)] = sm.level(y, c);
    for (long c = tf.trim; c <= static_cast<long>(n) - tf.trim; ++c)
      res[static_cast<std::size_t>(c - 1)] = y[static_cast<std::size_t>(c - 1)] - mu[static_cast<std::size_t>(c - 1)];
    tf.trend.push_back(std::move(mu));
    tf.residuals.push_back(std::move(res));
  }
  return tf;
}

/// Residual products e_{j,i} e_{j+k,l}; NaN where either factor is missing.
inline std::vector<double> lagged_product(const std::vector<double>& a, const std::vector<double>& b, std::size_t k) {
  std::vector<double> out(a.size(), kNaN);
  for (std::size_t j = 0; j + k < a.size(); ++j) out[j] = a[j] * b[j + k];
  return out;
}

/// Domain of the plug-in curves: design points in [b + tau, 1 - b - tau].
inline EvalDomain plugin_domain(std::size_t n, double b, long trim) {
  if (ceil_nb(n, b) <= trim) throw ConfigError("plug-in path needs ceil(n b) > ceil(n tau)");
  return EvalDomain::interior(n, b, trim);
}

/// Kernel-weighted average of y around design index c, normalised by the
/// weights of the available entries.
inline double kernel_average(const DesignSmoother& sm, const std::vector<double>& y, long c) {
  const long n = static_cast<long>(y.size());
  double num = 0.0, den = 0.0;
  for (long j = std::max(1L, c - sm.half_width()); j <= std::min(n, c + sm.half_width()); ++j) {
    const double v = y[static_cast<std::size_t>(j - 1)];
    if (std::isnan(v)) continue;
    const double w = sm.weight(j - c);
    num += w * v;
    den += w;
  }
  return num / den;
}

/// Correlation curves from kernel averages of residual products. In the
/// returned curves beta_k holds gamma_k and beta_hi / beta_hl hold the
/// marginal variances, so residual statistics centre on them.
template <KernelFunction K>
CurveSet rho_plugin(const TrendFit& trend, const BandSet& bands, const K& kernel, double variance_floor = 1e-10) {
  const std::size_t n = trend.residuals.front().size();
  CurveSet cs;
  cs.variant = Variant::plugin;
  cs.domain = plugin_domain(n, bands.b, trend.trim);
  cs.triples = bands.triples;
  cs.curves.resize(bands.size());
  const auto& d = cs.domain;
  for (std::size_t zi = 0; zi < bands.size(); ++zi) {
    const auto& z = bands.triples[zi];
    DesignSmoother sm(n, bands.bandwidths[zi], kernel);
    const auto cross = lagged_product(trend.residuals[z.i], trend.residuals[z.l], z.k);
    const auto sq_i = lagged_product(trend.residuals[z.i], trend.residuals[z.i], 0);
    const auto sq_l = lagged_product(trend.residuals[z.l], trend.residuals[z.l], 0);
    TripleCurves tc;
    tc.gamma.assign(n, kNaN);
    tc.gamma0_i.assign(n, kNaN);
    tc.gamma0_l.assign(n, kNaN);
    for (long c = d.first; c <= d.last; ++c) {
      const auto j = static_cast<std::size_t>(c - 1);
      tc.gamma[j] = kernel_average(sm, cross, c);
      tc.gamma0_i[j] = kernel_average(sm, sq_i, c);
      tc.gamma0_l[j] = z.i == z.l ? tc.gamma0_i[j] : kernel_average(sm, sq_l, c);
    }
    detail::extend_constant(tc.gamma, d);
    detail::extend_constant(tc.gamma0_i, d);
    detail::extend_constant(tc.gamma0_l, d);
    double var_i = 0.0, var_l = 0.0;
    {
      std::size_t cnt = 0;
      for (double v : sq_i)
        if (!std::isnan(v)) var_i += v, ++cnt;
      var_i /= static_cast<double>(std::max<std::size_t>(cnt, 1));
      cnt = 0;
      for (double v : sq_l)
        if (!std::isnan(v)) var_l += v, ++cnt;
      var_l /= static_cast<double>(std::max<std::size_t>(cnt, 1));
    }
    tc.sigma.resize(n);
    tc.rho.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const long c = static_cast<long>(j) + 1;
      if (d.contains(c) && (!(tc.gamma0_i[j] > variance_floor * var_i) || !(tc.gamma0_l[j] > variance_floor * var_l)))
        throw DegenerateVariance("residual variance estimate vanishes for triple " + to_string(z) + " at t = " +
                                 std::to_string(d.t(c)));
      tc.sigma[j] = z.i == z.l ? tc.gamma0_i[j] : std::sqrt(tc.gamma0_i[j] * tc.gamma0_l[j]);
      tc.rho[j] = tc.gamma[j] / tc.sigma[j];
    }
    tc.beta_k = tc.gamma;
    tc.beta_hi = tc.gamma0_i;
    tc.beta_hl = tc.gamma0_l;
    cs.curves[zi] = std::move(tc);
  }
  return cs;
}

/// V_j = P_j / sigma(t_j) - rho(t_j)/2 * (e_i^2 / gamma0_i(t_j) + e_l^2 / gamma0_l(t_j)),
/// with P_j = e_{j,i} e_{j+k,l}; the residual form subtracts the fitted
/// levels from each product first.
inline XiSeries v_series(const TrendFit& trend, const CurveSet& curves, XiForm form) {
  const std::size_t n = trend.residuals.front().size();
  XiSeries xs;
  xs.form = form;
  xs.variant = Variant::plugin;
  xs.values.resize(curves.triples.size());
  const bool centre = form == XiForm::residual;
  for (std::size_t zi = 0; zi < curves.triples.size(); ++zi) {
    const auto& z = curves.triples[zi];
    const auto& c = curves.curves[zi];
    const auto& ei = trend.residuals[z.i];
    const auto& el = trend.residuals[z.l];
    auto& out = xs.values[zi];
    out.assign(n, kNaN);
    for (std::size_t j = 0; j + z.k < n; ++j) {
      double cross = ei[j] * el[j + z.k];
      double si = ei[j] * ei[j];
      double sl = el[j] * el[j];
      if (std::isnan(cross) || std::isnan(si) || std::isnan(sl)) continue;
      if (centre) {
        cross -= c.beta_k[j];
        si -= c.beta_hi[j];
        sl -= c.beta_hl[j];
      }
      out[j] = cross / c.sigma[j] - 0.5 * c.rho[j] * (si / c.gamma0_i[j] + sl / c.gamma0_l[j]);
    }
  }
  return xs;
}

}  // namespace tvnet
