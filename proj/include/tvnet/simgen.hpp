#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tvnet/diffest.hpp"
#include "tvnet/errors.hpp"
#include "tvnet/multiplier.hpp"
#include "tvnet/network.hpp"
#include "tvnet/panel.hpp"
#include "tvnet/pipeline.hpp"

namespace tvnet::sim {

/// Coefficient matrix of the time-varying VAR(1) error process.
inline Eigen::Matrix3d coefficient(double t) {
  Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
  a(0, 0) = 0.075;
  a(1, 1) = 0.15 * (0.9 + 0.1 * std::sin(2.0 * std::numbers::pi * t));
  a(2, 1) = 0.9 + 0.1 * t;
  a(2, 2) = 0.1;
  return a;
}

/// Trend vector: a smooth first component, a second with jumps at 0.4, 0.5
/// and 0.6, and a step function with jumps at 0.35 and 0.55.
inline Eigen::Vector3d trend(double t) {
  Eigen::Vector3d mu;
  mu(0) = 4.0 - 0.5 * std::sin(4.0 * t) + 0.5 * t;
  const bool low = (t < 0.4) || (t >= 0.5 && t < 0.6);
  mu(1) = low ? 1.0 - (t - 0.5) * (t - 0.5) : 3.0 - 0.5 * std::sin(4.0 * t);
  mu(2) = t < 0.35 ? 0.3 : (t < 0.55 ? 0.7 : 0.2);
  return mu;
}

struct DgpSpec {
  std::size_t n = 500;
  std::uint64_t seed = 1;
  std::size_t burn_in = 200;
  double noise_scale = 1.0;
  bool with_trend = true;
};

/// Y_j = mu(t_j) + G_j with G_j = A(t_j) G_{j-1} + xi_j; the burn-in runs
/// at A(t_1).
inline Panel simulate(const DgpSpec& spec) {
  if (spec.n < 100) throw ConfigError("simulation needs n >= 100");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&] {
    Eigen::Vector3d x;
    for (int i = 0; i < 3; ++i) x(i) = spec.noise_scale * normal(rng);
    return x;
  };
  const double nd = static_cast<double>(spec.n);
  Eigen::Vector3d g = Eigen::Vector3d::Zero();
  const Eigen::Matrix3d a1 = coefficient(1.0 / nd);
  for (std::size_t b = 0; b < spec.burn_in; ++b) g = a1 * g + draw();
  std::vector<double> v(3 * spec.n);
  for (std::size_t j = 1; j <= spec.n; ++j) {
    const double t = static_cast<double>(j) / nd;
    g = coefficient(t) * g + draw();
    const Eigen::Vector3d y = spec.with_trend ? Eigen::Vector3d(trend(t) + g) : g;
    for (std::size_t i = 0; i < 3; ++i) v[i * spec.n + j - 1] = y(static_cast<Eigen::Index>(i));
  }
  return Panel(spec.n, 3, std::move(v), {"y1", "y2", "y3"});
}

/// Stationary covariance of the VAR(1) frozen at t: S = A S A' + I.
inline Eigen::Matrix3d stationary_covariance(double t) {
  const Eigen::Matrix3d a = coefficient(t);
  Eigen::Matrix<double, 9, 9> kron;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) kron.block<3, 3>(3 * i, 3 * j) = a(i, j) * a;
  const Eigen::Matrix<double, 9, 9> lhs = Eigen::Matrix<double, 9, 9>::Identity() - kron;
  Eigen::Matrix<double, 9, 1> rhs = Eigen::Matrix<double, 9, 1>::Zero();
  for (int i = 0; i < 3; ++i) rhs(4 * i) = 1.0;
  const Eigen::Matrix<double, 9, 1> vec = lhs.partialPivLu().solve(rhs);
  Eigen::Matrix3d s;
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 3; ++r) s(r, c) = vec(3 * c + r);
  return 0.5 * (s + s.transpose());
}

/// Frozen-t cross-correlation: corr(G_i(j), G_l(j + k)) = [S (A^k)']_{il} / sqrt(S_ii S_ll).
inline double true_rho(double t, std::size_t i, std::size_t l, std::size_t k) {
  const Eigen::Matrix3d s = stationary_covariance(t);
  Eigen::Matrix3d ak = Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d a = coefficient(t);
  for (std::size_t r = 0; r < k; ++r) ak = a * ak;
  const Eigen::Matrix3d cov = s * ak.transpose();
  const auto ii = static_cast<Eigen::Index>(i), ll = static_cast<Eigen::Index>(l);
  return cov(ii, ll) / std::sqrt(s(ii, ii) * s(ll, ll));
}

/// The six directed lag-one triples between distinct series.
inline std::vector<LagTriple> cross_lag_one() {
  std::vector<LagTriple> out;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t l = 0; l < 3; ++l)
      if (i != l) out.push_back({i, l, 1});
  return out;
}

struct McConfig {
  std::size_t n = 500;
  std::size_t reps = 200;
  std::uint64_t master_seed = 20240601;
  std::vector<double> nominal{0.90, 0.95};
  NullCurve null = NullCurve::affine(0.3, 0.3);
  std::vector<double> fnr_grid;  // empty: 20 points on [0.3, 0.7]
  PipelineConfig pipeline{};     // triples default to cross_lag_one()
  bool with_trend = true;
  // When set, every replicate uses the zero-correlation truth of independent
  // white-noise series instead of the VAR truth (level checks).
  bool white_noise = false;
};

struct McLevel {
  double nominal = 0.9;
  double coverage = 0.0;
  double width = 0.0;
  double recovery = 0.0;
  double decision_accuracy = 0.0;   // share of correct per-triple decisions
  std::vector<double> fnr;          // per fnr grid point, NaN where undefined
  std::vector<double> fnr_hits;     // accumulated numerators
  std::vector<double> fnr_total;    // accumulated denominators
};

struct McReport {
  std::size_t n = 0;
  std::size_t reps = 0;
  std::size_t failures = 0;
  Variant variant = Variant::reduced;
  std::vector<double> fnr_grid;
  std::vector<McLevel> levels;
  std::vector<std::string> errors;
  double mean_b = 0.0;
  double mean_w = 0.0;
  double mean_eta = 0.0;
};

/// Per-replicate tallies for one level.
struct RepScore {
  bool covered = true;
  double width_sum = 0.0;
  std::size_t width_count = 0;
  std::size_t recovered = 0, times = 0;
  std::size_t correct = 0, decisions = 0;
  std::vector<double> fnr_hits, fnr_total;
};

inline RepScore score_band(const SCBBand& band, const NullSpec& nulls, const std::vector<double>& fnr_grid,
                           bool white_noise) {
  RepScore sc;
  sc.fnr_hits.assign(fnr_grid.size(), 0.0);
  sc.fnr_total.assign(fnr_grid.size(), 0.0);
  const auto& d = band.domain;
  const std::size_t Z = band.triples.size();
  auto truth = [&](std::size_t z, double t) {
    const auto& tr = band.triples[z];
    if (white_noise) return tr.i == tr.l && tr.k == 0 ? 1.0 : 0.0;
    return true_rho(t, tr.i, tr.l, tr.k);
  };
  std::vector<std::vector<double>> rho(Z, std::vector<double>(d.size()));
  for (std::size_t p = 0; p < d.size(); ++p) {
    const double t = d.t(d.first + static_cast<long>(p));
    for (std::size_t z = 0; z < Z; ++z) rho[z][p] = truth(z, t);
  }
  for (std::size_t p = 0; p < d.size(); ++p) {
    const double t = d.t(d.first + static_cast<long>(p));
    bool all_ok = true;
    for (std::size_t z = 0; z < Z; ++z) {
      if (rho[z][p] < band.lower[z][p] || rho[z][p] > band.upper[z][p]) sc.covered = false;
      sc.width_sum += band.upper[z][p] - band.lower[z][p];
      ++sc.width_count;
      const double g = nulls.curves[z](t);
      const bool reject = g < band.lower[z][p] || g > band.upper[z][p];
      const bool active = rho[z][p] != g;
      const bool ok = reject == active;
      all_ok = all_ok && ok;
      sc.correct += ok ? 1 : 0;
      ++sc.decisions;
    }
    sc.recovered += all_ok ? 1 : 0;
    ++sc.times;
  }
  // FNR on the reporting grid, at the nearest design point inside the domain.
  for (std::size_t g = 0; g < fnr_grid.size(); ++g) {
    const long j = std::lround(fnr_grid[g] * static_cast<double>(d.n));
    if (!d.contains(j)) continue;
    const auto p = static_cast<std::size_t>(j - d.first);
    const double t = d.t(j);
    for (std::size_t z = 0; z < Z; ++z) {
      const double gv = nulls.curves[z](t);
      if (rho[z][p] == gv) continue;
      sc.fnr_total[g] += 1.0;
      if (!(gv < band.lower[z][p] || gv > band.upper[z][p])) sc.fnr_hits[g] += 1.0;
    }
  }
  return sc;
}

/// Runs the pipeline on independent replicates and aggregates coverage,
/// width, recovery and FNR(t). Replicate r uses seeds derived from
/// (master_seed, r) only, so results do not depend on execution order.
template <KernelFunction K>
McReport monte_carlo(const McConfig& mc, const K& kernel) {
  if (mc.reps < 1) throw ConfigError("at least one replicate is required");
  McReport rep;
  rep.n = mc.n;
  rep.reps = mc.reps;
  rep.variant = mc.pipeline.algorithm;
  rep.fnr_grid = mc.fnr_grid;
  if (rep.fnr_grid.empty())
    for (int g = 0; g < 20; ++g) rep.fnr_grid.push_back(0.3 + 0.4 * g / 19.0);

  PipelineConfig pc = mc.pipeline;
  if (pc.triples.empty()) pc.triples = cross_lag_one();
  const NullSpec nulls = NullSpec::uniform(pc.triples.size(), mc.null);

  std::vector<std::vector<RepScore>> scores(mc.reps);
  std::vector<std::string> errors(mc.reps);
  std::vector<double> bsel(mc.reps, kNaN), wsel(mc.reps, kNaN), esel(mc.reps, kNaN);
  const std::size_t outer = resolve_threads(pc.threads);
  PipelineConfig inner = pc;
  inner.threads = 1;
  parallel_for(mc.reps, outer, [&](std::size_t r) {
    DgpSpec spec;
    spec.n = mc.n;
    spec.seed = derive_seed(mc.master_seed, 2 * r);
    spec.with_trend = mc.with_trend;
    PipelineConfig local = inner;
    local.seed = derive_seed(mc.master_seed, 2 * r + 1);
    try {
      Panel panel;
      if (mc.white_noise) {
        std::mt19937_64 rng(spec.seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<double> v(3 * mc.n);
        for (double& x : v) x = normal(rng);
        panel = Panel(mc.n, 3, std::move(v));
      } else {
        panel = simulate(spec);
      }
      const auto res = run_pipeline(panel, local, kernel);
      bsel[r] = res.bands.b;
      wsel[r] = static_cast<double>(res.w);
      esel[r] = res.eta;
      for (double level : mc.nominal)
        scores[r].push_back(score_band(res.band_at(1.0 - level), nulls, rep.fnr_grid, mc.white_noise));
    } catch (const Error& e) {
      errors[r] = e.what();
    }
  });

  for (double level : mc.nominal) {
    McLevel lv;
    lv.nominal = level;
    lv.fnr_hits.assign(rep.fnr_grid.size(), 0.0);
    lv.fnr_total.assign(rep.fnr_grid.size(), 0.0);
    rep.levels.push_back(lv);
  }
  std::size_t ok = 0;
  for (std::size_t r = 0; r < mc.reps; ++r) {
    if (!errors[r].empty()) {
      ++rep.failures;
      rep.errors.push_back("replicate " + std::to_string(r) + ": " + errors[r]);
      continue;
    }
    ++ok;
    rep.mean_b += bsel[r];
    rep.mean_w += wsel[r];
    rep.mean_eta += esel[r];
    for (std::size_t a = 0; a < mc.nominal.size(); ++a) {
      const auto& sc = scores[r][a];
      auto& lv = rep.levels[a];
      lv.coverage += sc.covered ? 1.0 : 0.0;
      lv.width += sc.width_sum / static_cast<double>(sc.width_count);
      lv.recovery += static_cast<double>(sc.recovered) / static_cast<double>(sc.times);
      lv.decision_accuracy += static_cast<double>(sc.correct) / static_cast<double>(sc.decisions);
      for (std::size_t g = 0; g < rep.fnr_grid.size(); ++g) {
        lv.fnr_hits[g] += sc.fnr_hits[g];
        lv.fnr_total[g] += sc.fnr_total[g];
      }
    }
  }
  if (ok > 0) {
    const double k = static_cast<double>(ok);
    rep.mean_b /= k;
    rep.mean_w /= k;
    rep.mean_eta /= k;
    for (auto& lv : rep.levels) {
      lv.coverage /= k;
      lv.width /= k;
      lv.recovery /= k;
      lv.decision_accuracy /= k;
    }
  }
  for (auto& lv : rep.levels) {
    lv.fnr.resize(rep.fnr_grid.size());
    for (std::size_t g = 0; g < rep.fnr_grid.size(); ++g)
      lv.fnr[g] = lv.fnr_total[g] > 0.0 ? lv.fnr_hits[g] / lv.fnr_total[g] : kNaN;
  }
  return rep;
}

}  // namespace tvnet::sim
