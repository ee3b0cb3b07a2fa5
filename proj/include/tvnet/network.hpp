#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <set>
#include <vector>

#include "tvnet/bootstrap.hpp"
#include "tvnet/diffest.hpp"
#include "tvnet/errors.hpp"
#include "tvnet/lrv.hpp"

namespace tvnet {

/// Hypothesised curve g_z(t): constant, affine a + c t, or tabulated on an
/// increasing grid with linear interpolation (flat beyond the ends).
struct NullCurve {
  enum class Kind { constant, affine, table } kind = Kind::constant;
  double a = 0.0;
  double c = 0.0;
  std::vector<double> grid;
  std::vector<double> values;

  static NullCurve constant(double v) { return {Kind::constant, v, 0.0, {}, {}}; }
  static NullCurve affine(double a, double c) { return {Kind::affine, a, c, {}, {}}; }
  static NullCurve table(std::vector<double> t, std::vector<double> v) {
    if (t.size() != v.size() || t.empty()) throw ConfigError("tabulated null needs matching, non-empty columns");
    if (!std::is_sorted(t.begin(), t.end()) || std::adjacent_find(t.begin(), t.end()) != t.end())
      throw ConfigError("tabulated null grid must be strictly increasing");
    for (double x : v)
      if (!std::isfinite(x)) throw ConfigError("tabulated null values must be finite");
    return {Kind::table, 0.0, 0.0, std::move(t), std::move(v)};
  }

  [[nodiscard]] double operator()(double t) const {
    switch (kind) {
      case Kind::constant: return a;
      case Kind::affine: return a + c * t;
      case Kind::table: {
        if (t <= grid.front()) return values.front();
        if (t >= grid.back()) return values.back();
        const auto it = std::upper_bound(grid.begin(), grid.end(), t);
        const std::size_t hi = static_cast<std::size_t>(it - grid.begin()), lo = hi - 1;
        const double f = (t - grid[lo]) / (grid[hi] - grid[lo]);
        return values[lo] + f * (values[hi] - values[lo]);
      }
    }
    return a;
  }
};

/// One null curve per triple, in band-set order.
struct NullSpec {
  std::vector<NullCurve> curves;
  static NullSpec uniform(std::size_t count, const NullCurve& g) { return {std::vector<NullCurve>(count, g)}; }
};

/// Simultaneous bands on the evaluation domain, per triple and domain point.
struct SCBBand {
  EvalDomain domain;
  std::vector<LagTriple> triples;
  std::vector<double> bandwidths;
  double r_boot = 0.0;
  std::vector<std::vector<double>> center;  // rho
  std::vector<std::vector<double>> sd;      // Gamma
  std::vector<std::vector<double>> lower;
  std::vector<std::vector<double>> upper;

  [[nodiscard]] double half_width(std::size_t z, std::size_t pos) const {
    return r_boot * sd[z][pos] / std::sqrt(static_cast<double>(domain.n) * bandwidths[z]);
  }
};

/// Bands rho(t) +- r_boot Gamma(t) / sqrt(n b_z); no clipping to [-1, 1].
inline SCBBand build_scb(const CurveSet& curves, const std::vector<LrvCurve>& lrv, double r_boot,
                         const BandSet& bands) {
  SCBBand band;
  band.domain = curves.domain;
  band.triples = curves.triples;
  band.bandwidths = bands.bandwidths;
  band.r_boot = r_boot;
  const std::size_t Z = curves.triples.size(), T = curves.domain.size();
  band.center.assign(Z, std::vector<double>(T));
  band.sd = band.lower = band.upper = band.center;
  for (std::size_t z = 0; z < Z; ++z) {
    const double scale = std::sqrt(static_cast<double>(curves.domain.n) * bands.bandwidths[z]);
    for (std::size_t p = 0; p < T; ++p) {
      const long j = curves.domain.first + static_cast<long>(p);
      const double rho = curves.curves[z].rho[static_cast<std::size_t>(j - 1)];
      const double g = std::sqrt(lrv[z].at(j));
      const double hw = r_boot * g / scale;
      band.center[z][p] = rho;
      band.sd[z][p] = g;
      band.lower[z][p] = rho - hw;
      band.upper[z][p] = rho + hw;
    }
  }
  return band;
}

inline SCBBand build_scb(const CurveSet& curves, const std::vector<LrvCurve>& lrv, const QuantileResult& q,
                         const BandSet& bands) {
  return build_scb(curves, lrv, q.r_boot, bands);
}

struct Edge {
  std::size_t from = 0;
  std::size_t to = 0;
  std::vector<std::size_t> lags;  // triggering lags
  double max_deviation = 0.0;     // max over triggering lags of sqrt(n b_z)|g - rho|/Gamma
};

struct NetworkSnapshot {
  long index = 0;  // design index
  double t = 0.0;
  std::vector<Edge> edges;
};

/// Duality test: edge i -> l at t iff g_z(t) lies outside [lower, upper] for
/// some triple z = (i, l, k).
inline std::vector<NetworkSnapshot> connect(const SCBBand& band, const NullSpec& nulls) {
  if (nulls.curves.size() != band.triples.size()) throw ConfigError("one null curve per triple is required");
  std::vector<NetworkSnapshot> out;
  const double nd = static_cast<double>(band.domain.n);
  for (std::size_t p = 0; p < band.domain.size(); ++p) {
    NetworkSnapshot snap;
    snap.index = band.domain.first + static_cast<long>(p);
    snap.t = band.domain.t(snap.index);
    std::map<std::pair<std::size_t, std::size_t>, Edge> edges;
    for (std::size_t z = 0; z < band.triples.size(); ++z) {
      const double g = nulls.curves[z](snap.t);
      if (!(g < band.lower[z][p] || g > band.upper[z][p])) continue;
      const auto& tr = band.triples[z];
      auto& e = edges[{tr.i, tr.l}];
      e.from = tr.i;
      e.to = tr.l;
      e.lags.push_back(tr.k);
      const double sd = band.sd[z][p];
      const double dev = sd > 0.0 ? std::sqrt(nd * band.bandwidths[z]) * std::abs(g - band.center[z][p]) / sd
                                  : std::numeric_limits<double>::infinity();
      e.max_deviation = std::max(e.max_deviation, dev);
    }
    for (auto& [key, e] : edges) snap.edges.push_back(std::move(e));
    out.push_back(std::move(snap));
  }
  return out;
}

struct HeatmapCell {
  long index = 0;
  double t = 0.0;
  std::size_t i = 0;
  std::size_t l = 0;
  double level = 0.0;
  double statistic = 0.0;
};

/// Confidence level per series pair and time: the fraction of bootstrap draws
/// strictly below max_k sqrt(n b_z)|g_z(t) - rho_z(t)| / Gamma_z(t).
inline std::vector<HeatmapCell> confidence_heatmap(const SCBBand& band, const std::vector<double>& draws,
                                                   const NullSpec& nulls) {
  if (draws.empty()) throw ConfigError("heatmap needs the bootstrap draws");
  if (nulls.curves.size() != band.triples.size()) throw ConfigError("one null curve per triple is required");
  std::vector<double> sorted(draws);
  std::sort(sorted.begin(), sorted.end());
  const double nd = static_cast<double>(band.domain.n);
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& z : band.triples) pairs.insert({z.i, z.l});
  std::vector<HeatmapCell> out;
  for (std::size_t p = 0; p < band.domain.size(); ++p) {
    const long j = band.domain.first + static_cast<long>(p);
    const double t = band.domain.t(j);
    for (const auto& [i, l] : pairs) {
      double stat = 0.0;
      for (std::size_t z = 0; z < band.triples.size(); ++z) {
        if (band.triples[z].i != i || band.triples[z].l != l) continue;
        const double diff = std::abs(nulls.curves[z](t) - band.center[z][p]);
        const double sd = band.sd[z][p];
        const double v = sd > 0.0 ? std::sqrt(nd * band.bandwidths[z]) * diff / sd
                                  : (diff > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        stat = std::max(stat, v);
      }
      const auto below = static_cast<double>(std::lower_bound(sorted.begin(), sorted.end(), stat) - sorted.begin());
      out.push_back({j, t, i, l, below / static_cast<double>(sorted.size()), stat});
    }
  }
  return out;
}

}  // namespace tvnet
