#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "tvnet/diffest.hpp"
#include "tvnet/errors.hpp"
#include "tvnet/kernels.hpp"
#include "tvnet/panel.hpp"

namespace tvnet {

enum class XiForm { raw, residual };

/// Innovation statistics per triple, length n (index j - 1). Entries with
/// j <= h, where a difference is missing, are NaN.
struct XiSeries {
  XiForm form = XiForm::raw;
  Variant variant = Variant::plain;
  std::vector<std::vector<double>> values;
};

/// Builds Xi_{z,j} = (P^{il}_{hh}/2 - P^{il}_{kh}) / sigma(t_j)
///                  - rho(t_j)/4 * (P^{ii}_{hh}/gamma0_i(t_j) + P^{ll}_{hh}/gamma0_l(t_j)),
/// where the P are products of lagged differences (raw form) or those
/// products minus their fitted levels (residual form).
inline XiSeries xi_series(const Panel& panel, const CurveSet& curves, long h, XiForm form) {
  const std::size_t n = panel.n();
  std::vector<std::vector<double>> dh(panel.p());
  for (std::size_t i = 0; i < panel.p(); ++i) dh[i] = difference(panel, i, static_cast<std::size_t>(h));
  XiSeries xs;
  xs.form = form;
  xs.variant = curves.variant;
  xs.values.resize(curves.triples.size());
  const bool centre = form == XiForm::residual;
  for (std::size_t zi = 0; zi < curves.triples.size(); ++zi) {
    const auto& z = curves.triples[zi];
    const auto& c = curves.curves[zi];
    const auto dk = difference(panel, z.i, z.k);
    auto& out = xs.values[zi];
    out.assign(n, kNaN);
    for (std::size_t j = static_cast<std::size_t>(h); j < n; ++j) {
      double cross_h = dh[z.i][j] * dh[z.l][j];
      double cross_k = dk[j] * dh[z.l][j];
      double self_i = dh[z.i][j] * dh[z.i][j];
      double self_l = dh[z.l][j] * dh[z.l][j];
      if (centre) {
        cross_h -= c.beta_h[j];
        cross_k -= c.beta_k[j];
        self_i -= c.beta_hi[j];
        self_l -= c.beta_hl[j];
      }
      out[j] = (cross_h / 2.0 - cross_k) / c.sigma[j] -
               0.25 * c.rho[j] * (self_i / c.gamma0_i[j] + self_l / c.gamma0_l[j]);
    }
  }
  return xs;
}

/// Long-run variance curve on the evaluation domain.
struct LrvCurve {
  EvalDomain domain;
  std::vector<double> gamma2;  // indexed by domain position
  std::size_t m = 0;
  double eta = 0.0;
  std::size_t clamped = 0;  // points re-weighted with the positive part of the kernel

  [[nodiscard]] double at(long j) const { return gamma2[static_cast<std::size_t>(j - domain.first)]; }
};

/// Gamma^2(t) = (kappa(t)/m) sum_s Delta_s^2 w(t, s), Delta_s = sum_{j=s}^{s+m-1} Xi_j,
/// w(t, s) = K_eta(t - t_s) / sum_s K_eta(t - t_s), over the blocks that lie
/// inside the available range of Xi. `kappa` holds one constant per domain point.
template <KernelFunction K>
LrvCurve lrv_curve(std::span<const double> xi, std::size_t m, double eta, const K& kernel,
                   std::span<const double> kappa, const EvalDomain& domain) {
  const std::size_t n = xi.size();
  if (m < 1) throw ConfigError("block length m must be positive");
  if (3 * m > n) throw BlockTooLong("block length m = " + std::to_string(m) + " exceeds n/3");
  if (!(eta > 0.0 && eta < 0.5)) throw ConfigError("lrv.eta must lie in (0, 1/2)");
  if (kappa.size() != domain.size()) throw ConfigError("one kernel constant per domain point is required");

  // Xi is available on one contiguous run [start, stop) (0-based).
  std::size_t start = 0, stop = n;
  while (start < n && std::isnan(xi[start])) ++start;
  while (stop > start && std::isnan(xi[stop - 1])) --stop;
  LrvCurve out;
  out.domain = domain;
  out.m = m;
  out.eta = eta;
  out.gamma2.assign(domain.size(), 0.0);
  if (start + m > stop) return out;

  // Block sums Delta_s for blocks inside the run (s 1-based), via prefix sums.
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t j = 0; j < n; ++j) prefix[j + 1] = prefix[j] + (std::isnan(xi[j]) ? 0.0 : xi[j]);
  const long s_lo = static_cast<long>(start) + 1, s_hi = static_cast<long>(stop - m + 1);
  std::vector<double> d2(static_cast<std::size_t>(s_hi - s_lo + 1));
  for (long s = s_lo; s <= s_hi; ++s) {
    const double v = prefix[static_cast<std::size_t>(s - 1 + static_cast<long>(m))] - prefix[static_cast<std::size_t>(s - 1)];
    d2[static_cast<std::size_t>(s - s_lo)] = v * v;
  }

  const double nd = static_cast<double>(n);
  const double reach = kernel.radius() * eta;
  for (long c = domain.first; c <= domain.last; ++c) {
    const double t = domain.t(c);
    const long lo = std::max(s_lo, static_cast<long>(std::floor((t - reach) * nd)));
    const long hi = std::min(s_hi, static_cast<long>(std::ceil((t + reach) * nd)));
    auto weighted = [&](bool positive_part) {
      double num = 0.0, den = 0.0;
      for (long s = lo; s <= hi; ++s) {
        double w = kernel((t - static_cast<double>(s) / nd) / eta);
        if (positive_part) w = std::max(w, 0.0);
        num += w * d2[static_cast<std::size_t>(s - s_lo)];
        den += w;
      }
      return den != 0.0 ? num / den : 0.0;
    };
    const std::size_t pos = static_cast<std::size_t>(c - domain.first);
    double avg = weighted(false);
    if (avg < 0.0) {
      // The negative lobes of a higher-order kernel can outweigh the centre.
      avg = weighted(true);
      ++out.clamped;
    }
    out.gamma2[pos] = kappa[pos] / static_cast<double>(m) * avg;
  }
  return out;
}

/// Square roots of Gamma^2 with a floor at 1e-8 times their median, for use
/// as divisors. Returns the number of floored points.
inline std::size_t floored_sd(const LrvCurve& lrv, std::vector<double>& out) {
  out.resize(lrv.gamma2.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(lrv.gamma2[i]);
  std::vector<double> tmp(out);
  std::nth_element(tmp.begin(), tmp.begin() + static_cast<long>(tmp.size() / 2), tmp.end());
  const double floor = std::max(1e-8 * tmp[tmp.size() / 2], std::numeric_limits<double>::min());
  std::size_t hits = 0;
  for (double& v : out)
    if (!(v > floor)) {
      v = floor;
      ++hits;
    }
  return hits;
}

/// Kernel constant per domain point: kappa for the plain and plug-in paths,
/// the squared integral of the check kernel at the local smoothing range for
/// the variance-reduced path.
template <KernelFunction K>
std::vector<double> kappa_profile(const K& base, Variant variant, const EvalDomain& domain, double b,
                                  const CheckKernelParams& params) {
  std::vector<double> out(domain.size());
  const double kappa = kernel_moments(base).kappa;
  std::map<double, double> cache;
  for (long c = domain.first; c <= domain.last; ++c) {
    double v = kappa;
    if (variant == Variant::reduced && delta_of_t(domain.t(c), b, params) > 0.0) {
      const double dt = delta_of_t(domain.t(c), b, params);
      auto it = cache.find(dt);
      if (it == cache.end()) it = cache.emplace(dt, CheckKernel<K>(base, {params.r, dt}).kappa()).first;
      v = it->second;
    }
    out[static_cast<std::size_t>(c - domain.first)] = v;
  }
  return out;
}

}  // namespace tvnet
