#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "tvnet/diffest.hpp"
#include "tvnet/errors.hpp"
#include "tvnet/kernels.hpp"
#include "tvnet/smoother.hpp"

namespace tvnet {

// ---------------------------------------------------------------- grids

inline std::vector<double> scaled_grid(std::span<const double> mult, double base) {
  std::vector<double> g;
  for (double m : mult) g.push_back(m * base);
  return g;
}

/// Integer grid: round(mult * base), clipped to [lo, hi], deduplicated, sorted.
inline std::vector<long> integer_grid(std::span<const double> mult, double base, long lo, long hi) {
  std::vector<long> g;
  for (double m : mult) {
    const long v = std::clamp(std::lround(m * base), lo, hi);
    if (std::find(g.begin(), g.end(), v) == g.end()) g.push_back(v);
  }
  std::sort(g.begin(), g.end());
  return g;
}

struct GridDefaults {
  std::vector<double> b_mult{0.5, 0.625, 0.75, 0.875, 1.0, 1.125, 1.25, 1.375, 1.5, 1.625, 1.75, 1.875, 2.0};
  std::vector<double> w_mult{0.5, 0.75, 1.0, 1.5, 2.0};
  std::vector<double> eta_mult{0.5, 0.75, 1.0, 1.5, 2.0};
  std::vector<double> m_mult{0.5, 1.0, 1.5, 2.0, 3.0};
  std::vector<double> tau_mult{0.2, 0.3, 0.4, 0.5};

  /// Candidates that leave a non-empty domain; `trim` is the extra cut of the
  /// plug-in path, which also needs ceil(n b) > trim.
  [[nodiscard]] std::vector<double> bandwidths(std::size_t n, long trim = 0) const {
    std::vector<double> g;
    for (double v : scaled_grid(b_mult, std::pow(static_cast<double>(n), -0.2))) {
      const long nb = ceil_nb(n, v);
      if (v < 0.5 && nb > trim && static_cast<long>(n) - 2 * (nb + trim) >= 1) g.push_back(v);
    }
    return g;
  }
  [[nodiscard]] std::vector<long> windows(std::size_t n, long nb) const {
    return integer_grid(w_mult, std::floor(std::pow(static_cast<double>(n), 0.4)), 2, std::max(2L, nb - 1));
  }
  [[nodiscard]] std::vector<double> etas(std::size_t n) const {
    std::vector<double> g;
    for (double v : scaled_grid(eta_mult, std::pow(static_cast<double>(n), -1.0 / 7.0)))
      if (v < 0.5) g.push_back(v);
    return g;
  }
  [[nodiscard]] std::vector<long> blocks(std::size_t n) const {
    return integer_grid(m_mult, std::floor(std::pow(static_cast<double>(n), 2.0 / 7.0)), 1,
                        static_cast<long>(n / 3));
  }
  [[nodiscard]] std::vector<double> taus(std::size_t n) const {
    return scaled_grid(tau_mult, std::pow(static_cast<double>(n), -1.0 / 6.0));
  }
};

/// Default block length for the (w, eta) search: floor(n^{2/7}).
inline long default_block(std::size_t n) {
  return std::max(1L, static_cast<long>(std::floor(std::pow(static_cast<double>(n), 2.0 / 7.0))));
}

// ---------------------------------------------------------------- GCV

struct GcvResult {
  std::vector<double> grid;
  std::vector<double> score;  // NaN where the candidate was infeasible
  double selected = 0.0;
};

/// GCV(b) = m^{-1} |Y - Yhat|^2 / (1 - tr(Q)/m)^2 over the available design
/// points in [b, 1 - b] (m of them). Ties within 1e-10 times the response
/// variance go to the largest bandwidth.
template <KernelFunction K>
GcvResult gcv_select(std::span<const double> y, std::span<const double> grid, const K& kernel) {
  const std::size_t n = y.size();
  GcvResult out;
  out.grid.assign(grid.begin(), grid.end());
  out.score.assign(grid.size(), kNaN);
  double mean = 0.0, var = 0.0;
  std::size_t cnt = 0;
  for (double v : y)
    if (!std::isnan(v)) mean += v, ++cnt;
  mean /= static_cast<double>(std::max<std::size_t>(cnt, 1));
  for (double v : y)
    if (!std::isnan(v)) var += (v - mean) * (v - mean);
  var /= static_cast<double>(std::max<std::size_t>(cnt, 1));

  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double b = grid[g];
    if (!(b > 0.0 && b < 0.5)) continue;
    const long first = ceil_nb(n, b), last = static_cast<long>(n) - first;
    if (last < first) continue;
    try {
      const auto d = hat_diagnostics(y, b, kernel, first, last);
      const double m = static_cast<double>(d.count);
      const double denom = 1.0 - d.trace / m;
      if (d.count == 0 || !(denom > 0.0)) continue;
      out.score[g] = d.rss / m / (denom * denom);
    } catch (const SingularDesign&) {
    }
  }
  double best = std::numeric_limits<double>::infinity();
  for (double s : out.score)
    if (!std::isnan(s)) best = std::min(best, s);
  if (!std::isfinite(best)) throw AllSingular("no feasible bandwidth on the GCV grid");
  const double tol = 1e-10 * std::max(var, std::numeric_limits<double>::min());
  double pick = -1.0;
  for (std::size_t g = 0; g < grid.size(); ++g)
    if (!std::isnan(out.score[g]) && out.score[g] <= best + tol) pick = std::max(pick, grid[g]);
  out.selected = pick;
  return out;
}

/// GCV responses for triple z: y^i_k y^l_h for k != 0, y^i_h y^l_h for k = 0.
inline std::vector<double> gcv_responses(const Panel& panel, const LagTriple& z, long h) {
  const auto a = difference(panel, z.i, z.k == 0 ? static_cast<std::size_t>(h) : z.k);
  const auto b = difference(panel, z.l, static_cast<std::size_t>(h));
  return product(a, b);
}

/// Raises bandwidths below floor * max to that value.
inline std::vector<double> apply_ratio_floor(std::vector<double> bws, double floor) {
  const double b = *std::max_element(bws.begin(), bws.end());
  for (double& v : bws) v = std::max(v, floor * b);
  return bws;
}

// ---------------------------------------------------------------- MV

struct MvSelection {
  std::vector<long> w_grid;
  std::vector<double> eta_grid;
  std::vector<double> s2;  // [iw * eta_grid.size() + ie]
  std::vector<double> mv;  // NaN on the grid edge
  std::size_t w_index = 0;
  std::size_t eta_index = 0;

  [[nodiscard]] long w() const { return w_grid[w_index]; }
  [[nodiscard]] double eta() const { return eta_grid[eta_index]; }
};

inline double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

/// Minimum-volatility choice over an s^2 table: for each interior cell, the
/// sample SD of the cell and its axis neighbours; smallest wins, ties to the
/// lexicographically smallest index. An axis holding a single value (a fixed
/// parameter) contributes no neighbours.
inline MvSelection mv_select(std::vector<long> w_grid, std::vector<double> eta_grid, std::vector<double> s2) {
  const std::size_t A = w_grid.size(), E = eta_grid.size();
  if ((A < 3 && A != 1) || (E < 3 && E != 1))
    throw GridTooSmall("minimum-volatility grids need at least 3 values on each searched axis");
  if (s2.size() != A * E) throw ConfigError("s^2 table does not match the grids");
  MvSelection sel;
  sel.w_grid = std::move(w_grid);
  sel.eta_grid = std::move(eta_grid);
  sel.s2 = std::move(s2);
  sel.mv.assign(A * E, kNaN);
  if (A == 1 && E == 1) {
    sel.mv[0] = 0.0;
    return sel;
  }
  const std::size_t a0 = A == 1 ? 0 : 1, a1 = A == 1 ? 1 : A - 1;
  const std::size_t e0 = E == 1 ? 0 : 1, e1 = E == 1 ? 1 : E - 1;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = a0; a < a1; ++a)
    for (std::size_t e = e0; e < e1; ++e) {
      std::vector<double> cell{sel.s2[a * E + e]};
      if (E > 1) {
        cell.push_back(sel.s2[a * E + e - 1]);
        cell.push_back(sel.s2[a * E + e + 1]);
      }
      if (A > 1) {
        cell.push_back(sel.s2[(a - 1) * E + e]);
        cell.push_back(sel.s2[(a + 1) * E + e]);
      }
      const double v = sample_sd(cell);
      sel.mv[a * E + e] = v;
      if (v < best) {
        best = v;
        sel.w_index = a;
        sel.eta_index = e;
      }
    }
  return sel;
}

struct BlockSelection {
  std::vector<long> grid;
  std::vector<double> sd;  // NaN on the grid edge
  std::size_t index = 0;
  [[nodiscard]] long m() const { return grid[index]; }
};

/// Chooses m from Gamma^2 curves computed at each grid value: the interior m
/// whose three-point neighbourhood has the smallest mean SD over the domain.
inline BlockSelection block_select(std::vector<long> grid, const std::vector<std::vector<double>>& curves) {
  if (grid.size() < 3) throw GridTooSmall("block-length grid needs at least 3 values");
  if (curves.size() != grid.size()) throw ConfigError("one curve per block length is required");
  BlockSelection sel;
  sel.grid = std::move(grid);
  sel.sd.assign(sel.grid.size(), kNaN);
  double best = std::numeric_limits<double>::infinity();
  const std::size_t T = curves.front().size();
  for (std::size_t j = 1; j + 1 < sel.grid.size(); ++j) {
    double acc = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const double v[3] = {curves[j - 1][t], curves[j][t], curves[j + 1][t]};
      acc += sample_sd(v);
    }
    acc /= static_cast<double>(std::max<std::size_t>(T, 1));
    sel.sd[j] = acc;
    if (acc < best) {
      best = acc;
      sel.index = j;
    }
  }
  return sel;
}

}  // namespace tvnet
