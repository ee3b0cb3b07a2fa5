#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tvnet/bootstrap.hpp"
#include "tvnet/diffest.hpp"
#include "tvnet/errors.hpp"
#include "tvnet/kernels.hpp"
#include "tvnet/lrv.hpp"
#include "tvnet/network.hpp"
#include "tvnet/panel.hpp"
#include "tvnet/plugin.hpp"
#include "tvnet/tuning.hpp"

namespace tvnet {

/// Kernel for the long-run variance weights.
enum class LrvWeights { epanechnikov, fourth_order };

/// Everything needed to run one algorithm end to end. Empty optionals and
/// empty vectors mean "select automatically".
struct PipelineConfig {
  Variant algorithm = Variant::reduced;
  std::vector<LagTriple> triples;
  std::vector<double> bandwidths;  // b_z
  double ratio_floor = 0.5;        // min b_z / b
  std::optional<long> h;
  std::optional<long> h_tilde;
  CheckKernelParams check{};
  std::optional<long> w;
  std::optional<double> eta;
  std::vector<long> m;             // one per triple, or a single shared value
  LrvWeights lrv_weights = LrvWeights::epanechnikov;
  std::vector<double> tau;         // plug-in trend bandwidths, one per series
  std::size_t B = 1000;
  double alpha = 0.1;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  GridDefaults grids{};
  bool bands = true;  // false: stop after the curves
};

struct PipelineResult {
  Variant algorithm = Variant::reduced;
  BandSet bands;
  CurveSet curves;
  std::vector<LrvCurve> lrv;
  QuantileResult quantile;
  SCBBand band;
  long w = 0;
  double eta = 0.0;
  std::vector<long> m;
  std::vector<double> tau;
  long trim = 0;
  std::vector<GcvResult> gcv_b;
  std::vector<GcvResult> gcv_tau;
  std::optional<MvSelection> mv;
  std::vector<BlockSelection> m_selection;
  std::size_t clamped = 0;  // LRV points re-weighted with the positive part of the kernel
  std::size_t floored = 0;  // LRV divisors raised to the floor

  /// Bands at another level from the same bootstrap draws.
  [[nodiscard]] SCBBand band_at(double alpha) const {
    return build_scb(curves, lrv, quantile_from_draws(quantile.draws, alpha), bands);
  }
};

namespace detail {

inline std::vector<double> residual_product(const TrendFit& tf, const LagTriple& z) {
  return lagged_product(tf.residuals[z.i], tf.residuals[z.l], z.k);
}

inline void set_divisors(BlockVectors& bv, const std::vector<LrvCurve>& lrv, std::size_t& floored) {
  std::vector<double> sd;
  for (std::size_t z = 0; z < bv.dim; ++z) {
    floored += floored_sd(lrv[z], sd);
    for (std::size_t l = 0; l < bv.layout.size(); ++l)
      bv.divisor[l * bv.dim + z] = sd[static_cast<std::size_t>(bv.layout.location[l] - lrv[z].domain.first)];
  }
}

}  // namespace detail

/// Runs one of the three algorithms: curves, LRV, bootstrap quantile and bands.
template <KernelFunction K>
PipelineResult run_pipeline(const Panel& panel, const PipelineConfig& cfg, const K& kernel) {
  panel.validate();
  if (cfg.triples.empty()) throw ConfigError("no triples requested");
  for (const auto& z : cfg.triples)
    if (z.i >= panel.p() || z.l >= panel.p()) throw ConfigError("triple " + to_string(z) + " references a missing series");
  if (cfg.algorithm == Variant::reduced) cfg.check.validate();
  const std::size_t n = panel.n();
  PipelineResult res;
  res.algorithm = cfg.algorithm;

  std::size_t kmax = 0;
  for (const auto& z : cfg.triples) kmax = std::max(kmax, z.k);
  DifferencingLags lags = DifferencingLags::automatic(n, kmax);
  if (cfg.h) lags.h = *cfg.h;
  if (cfg.h_tilde) lags.h_tilde = *cfg.h_tilde;

  // Trend removal for the plug-in path.
  TrendFit trend;
  if (cfg.algorithm == Variant::plugin) {
    res.tau = cfg.tau;
    if (res.tau.empty()) {
      const auto grid = cfg.grids.taus(n);
      for (std::size_t i = 0; i < panel.p(); ++i) {
        res.gcv_tau.push_back(gcv_select(panel.series(i), grid, kernel));
        res.tau.push_back(res.gcv_tau.back().selected);
      }
    } else if (res.tau.size() == 1 && panel.p() > 1) {
      res.tau.assign(panel.p(), res.tau.front());
    }
    trend = trend_fit(panel, res.tau, kernel);
    res.trim = trend.trim;
  }

  // Bandwidths.
  std::vector<double> bws = cfg.bandwidths;
  if (bws.size() == 1 && cfg.triples.size() > 1) bws.assign(cfg.triples.size(), bws.front());
  if (bws.empty()) {
    const auto grid = cfg.grids.bandwidths(n, res.trim);
    if (grid.empty()) throw GridTooSmall("no admissible bandwidth candidates");
    for (const auto& z : cfg.triples) {
      const auto y = cfg.algorithm == Variant::plugin ? detail::residual_product(trend, z) : gcv_responses(panel, z, lags.h);
      res.gcv_b.push_back(gcv_select(y, grid, kernel));
      bws.push_back(res.gcv_b.back().selected);
    }
    bws = apply_ratio_floor(std::move(bws), cfg.ratio_floor);
  }
  res.bands = BandSet::make(n, cfg.triples, bws, lags, cfg.ratio_floor);
  const auto& bands = res.bands;

  // Curves and innovation statistics.
  if (cfg.algorithm == Variant::plugin) {
    res.curves = rho_plugin(trend, bands, kernel);
  } else {
    EstimatorOptions opt;
    opt.check = cfg.check;
    opt.threads = cfg.threads;
    res.curves = estimate_curves(panel, bands, kernel, cfg.algorithm, opt);
  }
  if (!cfg.bands) return res;
  XiSeries raw, resid;
  if (cfg.algorithm == Variant::plugin) {
    raw = v_series(trend, res.curves, XiForm::raw);
    resid = v_series(trend, res.curves, XiForm::residual);
  } else {
    raw = xi_series(panel, res.curves, lags.h, XiForm::raw);
    resid = xi_series(panel, res.curves, lags.h, XiForm::residual);
  }
  const auto& domain = res.curves.domain;
  const auto kappa = kappa_profile(kernel, cfg.algorithm, domain, bands.b, cfg.check);
  const std::size_t Z = bands.size();

  auto lrv_one = [&](std::size_t z, long m, double eta) {
    const auto mm = static_cast<std::size_t>(m);
    if (cfg.lrv_weights == LrvWeights::fourth_order) return lrv_curve(resid.values[z], mm, eta, kernel, kappa, domain);
    return lrv_curve(resid.values[z], mm, eta, EpanechnikovKernel{}, kappa, domain);
  };
  auto lrv_all = [&](const std::vector<long>& m, double eta) {
    std::vector<LrvCurve> out(Z);
    parallel_for(Z, cfg.threads, [&](std::size_t z) { out[z] = lrv_one(z, m[z], eta); });
    return out;
  };

  const long m0 = cfg.m.size() == 1 ? cfg.m.front() : default_block(n);
  std::vector<long> m_fixed(Z, m0);
  if (cfg.m.size() == Z) m_fixed = cfg.m;
  const std::vector<double> eta_grid = cfg.eta ? std::vector<double>{*cfg.eta} : cfg.grids.etas(n);
  if (eta_grid.empty()) throw GridTooSmall("no admissible lrv.eta candidates");

  // Block vectors; their kernel rows do not depend on the LRV curves.
  res.lrv = lrv_all(m_fixed, eta_grid.front());
  BlockInputs in{&raw, &res.lrv, domain, res.trim};
  auto bv = build_block_vectors(in, bands, kernel, cfg.algorithm, cfg.check);
  const long nb = bv.layout.nb;

  // (w, eta) by minimum volatility.
  if (!cfg.w || !cfg.eta) {
    const std::vector<long> w_grid = cfg.w ? std::vector<long>{*cfg.w} : cfg.grids.windows(n, nb - res.trim);
    std::vector<std::vector<double>> q;  // per w: sum of squared unscaled window sums, [l * Z + z]
    for (long w : w_grid) q.push_back(squared_sums(block_sums(bv, w, false)));
    std::vector<double> s2(w_grid.size() * eta_grid.size(), 0.0);
    for (std::size_t e = 0; e < eta_grid.size(); ++e) {
      const auto lrv = lrv_all(m_fixed, eta_grid[e]);
      std::size_t ignored = 0;
      detail::set_divisors(bv, lrv, ignored);
      for (std::size_t a = 0; a < w_grid.size(); ++a) {
        double acc = 0.0;
        for (std::size_t k = 0; k < q[a].size(); ++k) acc += q[a][k] / (bv.divisor[k] * bv.divisor[k]);
        s2[a * eta_grid.size() + e] =
            acc / (2.0 * static_cast<double>(w_grid[a]) * static_cast<double>(nb - res.trim));
      }
    }
    res.mv = mv_select(w_grid, eta_grid, std::move(s2));
    res.w = res.mv->w();
    res.eta = res.mv->eta();
  } else {
    res.w = *cfg.w;
    res.eta = *cfg.eta;
  }

  // Block lengths.
  res.m = m_fixed;
  if (cfg.m.empty()) {
    const auto grid = cfg.grids.blocks(n);
    for (std::size_t z = 0; z < Z; ++z) {
      std::vector<std::vector<double>> curves;
      for (long m : grid)
        curves.push_back(lrv_one(z, m, res.eta).gamma2);
      res.m_selection.push_back(block_select(grid, curves));
      res.m[z] = res.m_selection.back().m();
    }
  }

  res.lrv = lrv_all(res.m, res.eta);
  for (const auto& c : res.lrv) res.clamped += c.clamped;
  detail::set_divisors(bv, res.lrv, res.floored);
  const auto sums = block_sums(bv, res.w);
  res.quantile = bootstrap_quantile(sums, cfg.B, cfg.alpha, cfg.seed, cfg.threads);
  res.band = build_scb(res.curves, res.lrv, res.quantile, bands);
  return res;
}

}  // namespace tvnet
