#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "tvnet/diffest.hpp"
#include "tvnet/errors.hpp"
#include "tvnet/kernels.hpp"
#include "tvnet/lrv.hpp"
#include "tvnet/multiplier.hpp"
#include "tvnet/parallel.hpp"

namespace tvnet {

/// Where each bootstrap location s_l sits and which data indices its block
/// vector covers. Layout position q (1-based) of location l holds data index
/// s_l - H_l + q; positions run from max(1, trim) to 2 H_l - trim.
struct BlockLayout {
  std::size_t n = 0;
  long nb = 0;    // ceil(n b)
  long trim = 0;  // ceil(n tau) for the plug-in path, 0 otherwise
  std::vector<long> location;
  std::vector<long> half;

  [[nodiscard]] std::size_t size() const noexcept { return location.size(); }
  [[nodiscard]] long q_lo(std::size_t) const noexcept { return std::max(1L, trim); }
  [[nodiscard]] long q_hi(std::size_t l) const noexcept { return 2 * half[l] - trim; }
  [[nodiscard]] long data_index(std::size_t l, long q) const noexcept { return location[l] - half[l] + q; }
};

/// Compressed block vectors: entry (l, z, q) equals
///   c_z Kz((d - s_l) / (n b_z)) Xi_{z,d} / Gamma_z(s_l),  d = s_l - H_l + q,
/// where Kz is the base kernel (plain, plug-in) or the check kernel at the
/// local smoothing range (variance-reduced).
class BlockVectors {
 public:
  BlockLayout layout;
  std::size_t dim = 0;
  std::vector<std::vector<double>> xi;  // per triple, length n, unavailable entries zero
  std::vector<double> bandwidth;        // b_z
  std::vector<double> normalizer;       // c_z
  std::vector<double> divisor;          // Gamma_z(s_l), index l * dim + z
  std::function<double(std::size_t l, double u)> kernel_at;

  /// Kernel row without the divisor: c_z Kz((d - s_l)/(n b_z)) for q in [q_lo, q_hi].
  [[nodiscard]] std::span<const double> row(std::size_t l, std::size_t z) const {
    const std::size_t k = l * dim + z;
    return {rows_.data() + row_offset_[k], row_offset_[k + 1] - row_offset_[k]};
  }

  /// Entry by layout position.
  [[nodiscard]] double value(std::size_t l, std::size_t z, long q) const {
    const long d = layout.data_index(l, q);
    return row(l, z)[static_cast<std::size_t>(q - layout.q_lo(l))] * xi[z][static_cast<std::size_t>(d - 1)] /
           divisor[l * dim + z];
  }

  /// Entry by data index d and location index l, evaluated from the formula.
  [[nodiscard]] double value_at(long d, std::size_t l, std::size_t z) const {
    const double u = static_cast<double>(d - layout.location[l]) / (static_cast<double>(layout.n) * bandwidth[z]);
    return normalizer[z] * kernel_at(l, u) * xi[z][static_cast<std::size_t>(d - 1)] / divisor[l * dim + z];
  }

  void materialize_rows() {
    row_offset_.assign(layout.size() * dim + 1, 0);
    std::size_t total = 0;
    for (std::size_t l = 0; l < layout.size(); ++l)
      for (std::size_t z = 0; z < dim; ++z) {
        row_offset_[l * dim + z] = total;
        total += static_cast<std::size_t>(layout.q_hi(l) - layout.q_lo(l) + 1);
      }
    row_offset_.back() = total;
    rows_.assign(total, 0.0);
    const double nd = static_cast<double>(layout.n);
    for (std::size_t l = 0; l < layout.size(); ++l)
      for (std::size_t z = 0; z < dim; ++z) {
        double* r = rows_.data() + row_offset_[l * dim + z];
        for (long q = layout.q_lo(l); q <= layout.q_hi(l); ++q) {
          const double u = static_cast<double>(layout.data_index(l, q) - layout.location[l]) / (nd * bandwidth[z]);
          r[q - layout.q_lo(l)] = normalizer[z] * kernel_at(l, u);
        }
      }
  }

 private:
  std::vector<double> rows_;
  std::vector<std::size_t> row_offset_;
};

/// Bootstrap ingredients shared by all three algorithms.
struct BlockInputs {
  const XiSeries* xi = nullptr;              // raw form
  const std::vector<LrvCurve>* lrv = nullptr;  // one per triple, on `domain`
  EvalDomain domain;                          // bootstrap locations
  long trim = 0;
};

/// Builds the block vectors. For the variance-reduced variant the kernel at
/// location s is the check kernel with smoothing range delta(t_s); its wider
/// support widens that location's layout accordingly.
template <KernelFunction K>
BlockVectors build_block_vectors(const BlockInputs& in, const BandSet& bands, const K& base, Variant variant,
                                 const CheckKernelParams& params = {}) {
  const auto& xi = *in.xi;
  const auto& lrv = *in.lrv;
  const std::size_t n = in.domain.n;
  const long nb = ceil_nb(n, bands.b);
  if (static_cast<long>(n) - 2 * nb < 1) throw BandwidthTooLarge("n - 2 ceil(n b) must be at least 1");
  if (lrv.size() != bands.size() || xi.values.size() != bands.size())
    throw ConfigError("block vectors need one Xi series and one LRV curve per triple");

  BlockVectors bv;
  bv.dim = bands.size();
  bv.layout.n = n;
  bv.layout.nb = nb;
  bv.layout.trim = in.trim;
  bv.bandwidth = bands.bandwidths;
  bv.normalizer = bands.normalizers;
  bv.xi.resize(bv.dim);
  for (std::size_t z = 0; z < bv.dim; ++z) {
    bv.xi[z] = xi.values[z];
    for (double& v : bv.xi[z])
      if (std::isnan(v)) v = 0.0;
  }

  std::vector<double> dt;
  for (long s = in.domain.first; s <= in.domain.last; ++s) {
    bv.layout.location.push_back(s);
    long half = nb;
    if (variant == Variant::reduced) {
      const double d = delta_of_t(in.domain.t(s), bands.b, params);
      dt.push_back(d);
      const double radius = base.radius() + (1.0 + std::abs(params.r)) * d;
      const long need = static_cast<long>(std::ceil(static_cast<double>(n) * bands.b * radius - 1e-9));
      half = std::max(nb, std::min({need, s, static_cast<long>(n) - s}));
    }
    bv.layout.half.push_back(half);
  }
  if (bv.layout.q_hi(0) < bv.layout.q_lo(0)) throw ConfigError("bootstrap layout is empty");

  if (variant == Variant::reduced) {
    auto table = std::make_shared<std::map<double, CheckKernel<K>>>();
    auto index = std::make_shared<std::vector<const CheckKernel<K>*>>();
    for (double d : dt) {
      auto it = table->find(d);
      if (it == table->end()) it = table->emplace(d, CheckKernel<K>(base, {params.r, d})).first;
      index->push_back(&it->second);
    }
    bv.kernel_at = [table, index](std::size_t l, double u) { return (*(*index)[l])(u); };
  } else {
    bv.kernel_at = [base](std::size_t, double u) { return base(u); };
  }

  bv.divisor.resize(bv.layout.size() * bv.dim);
  std::vector<double> sd;
  for (std::size_t z = 0; z < bv.dim; ++z) {
    floored_sd(lrv[z], sd);
    for (std::size_t l = 0; l < bv.layout.size(); ++l) {
      const long s = bv.layout.location[l];
      bv.divisor[l * bv.dim + z] = sd[static_cast<std::size_t>(s - lrv[z].domain.first)];
    }
  }
  bv.materialize_rows();
  return bv;
}

/// Differenced window sums S_{l,j} = sum_{q=j-w+1}^{j} E_q - sum_{q=j+1}^{j+w} E_q
/// for j in [q_lo + w - 1, q_hi - w]; S_{l,j} is multiplied by the draw keyed
/// by data index s_l - H_l + j.
struct BlockSums {
  std::size_t dim = 0;
  long w = 0;
  double normalizer = 1.0;  // sqrt(2 w (ceil(n b) - trim))
  std::vector<std::size_t> offset;  // per location, into values
  std::vector<std::size_t> count;   // window positions per location
  std::vector<long> key_first;      // data index multiplying the first position
  std::vector<double> values;       // [offset_l + z * count_l + jpos]

  [[nodiscard]] std::size_t locations() const noexcept { return offset.size(); }
  [[nodiscard]] std::span<const double> at(std::size_t l, std::size_t z) const {
    return {values.data() + offset[l] + z * count[l], count[l]};
  }
  [[nodiscard]] long key(std::size_t l, std::size_t jpos) const { return key_first[l] + static_cast<long>(jpos); }
};

/// Window sums of the block vectors. With `divide` false the Gamma divisors
/// are left out, so the sums can be rescaled for several LRV curves.
inline BlockSums block_sums(const BlockVectors& bv, long w, bool divide = true) {
  const auto& lay = bv.layout;
  if (w < 1) throw WindowTooLarge("window size w must be at least 1");
  if (w > lay.nb - 1) throw WindowTooLarge("window size w must not exceed ceil(n b) - 1");
  BlockSums out;
  out.dim = bv.dim;
  out.w = w;
  out.normalizer = std::sqrt(2.0 * static_cast<double>(w) * static_cast<double>(lay.nb - lay.trim));
  std::size_t total = 0;
  for (std::size_t l = 0; l < lay.size(); ++l) {
    const long j_lo = lay.q_lo(l) + w - 1, j_hi = lay.q_hi(l) - w;
    if (j_hi < j_lo) throw WindowTooLarge("window size leaves no block sums");
    out.offset.push_back(total);
    out.count.push_back(static_cast<std::size_t>(j_hi - j_lo + 1));
    out.key_first.push_back(lay.data_index(l, j_lo));
    total += out.count.back() * bv.dim;
  }
  out.values.resize(total);
  std::vector<double> prefix;
  for (std::size_t l = 0; l < lay.size(); ++l) {
    const long q_lo = lay.q_lo(l), q_hi = lay.q_hi(l);
    const long j_lo = q_lo + w - 1;
    for (std::size_t z = 0; z < bv.dim; ++z) {
      const auto r = bv.row(l, z);
      const double scale = divide ? 1.0 / bv.divisor[l * bv.dim + z] : 1.0;
      prefix.assign(static_cast<std::size_t>(q_hi - q_lo + 2), 0.0);
      for (long q = q_lo; q <= q_hi; ++q) {
        const std::size_t pos = static_cast<std::size_t>(q - q_lo);
        const double e = r[pos] * bv.xi[z][static_cast<std::size_t>(lay.data_index(l, q) - 1)] * scale;
        prefix[pos + 1] = prefix[pos] + e;
      }
      // P(q) = sum of entries at positions q_lo..q, P(q_lo - 1) = 0.
      auto P = [&](long q) { return prefix[static_cast<std::size_t>(q - q_lo + 1)]; };
      double* dst = out.values.data() + out.offset[l] + z * out.count[l];
      for (std::size_t jp = 0; jp < out.count[l]; ++jp) {
        const long j = j_lo + static_cast<long>(jp);
        dst[jp] = (P(j) - P(j - w)) - (P(j + w) - P(j));
      }
    }
  }
  return out;
}

/// Bootstrap sample and its (1 - alpha) quantile.
struct QuantileResult {
  std::vector<double> draws;
  double alpha = 0.1;
  double r_boot = 0.0;
  std::uint64_t seed = 0;
  [[nodiscard]] std::size_t B() const noexcept { return draws.size(); }
};

/// ceil((1 - alpha) B)-th order statistic (1-based) of the draws.
inline double quantile_from_draws(std::vector<double> draws, double alpha) {
  if (draws.empty()) throw ConfigError("no bootstrap draws");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  const double B = static_cast<double>(draws.size());
  auto k = static_cast<std::size_t>(std::ceil((1.0 - alpha) * B - 1e-9));
  k = std::clamp<std::size_t>(k, 1, draws.size());
  std::nth_element(draws.begin(), draws.begin() + static_cast<long>(k - 1), draws.end());
  return draws[k - 1];
}

/// Z^{(r)} = max_l max_z |sum_j S_{l,j,z} R^{(r)}_{key(l,j)}| / normalizer, r = 0..B-1.
inline std::vector<double> bootstrap_draws(const BlockSums& sums, std::size_t B, std::uint64_t seed,
                                           std::size_t threads = 1) {
  long max_key = 0;
  for (std::size_t l = 0; l < sums.locations(); ++l)
    max_key = std::max(max_key, sums.key(l, sums.count[l] - 1));
  const GaussianMultipliers gen(seed);
  std::vector<double> draws(B, 0.0);
  parallel_for(B, threads, [&](std::size_t r) {
    std::vector<double> R(static_cast<std::size_t>(max_key) + 1);
    for (long k = 1; k <= max_key; ++k) R[static_cast<std::size_t>(k)] = gen(r, static_cast<std::uint64_t>(k));
    double best = 0.0;
    for (std::size_t l = 0; l < sums.locations(); ++l) {
      const double* mult = R.data() + sums.key_first[l];
      for (std::size_t z = 0; z < sums.dim; ++z) {
        const auto s = sums.at(l, z);
        double acc = 0.0;
        for (std::size_t j = 0; j < s.size(); ++j) acc += s[j] * mult[j];
        best = std::max(best, std::abs(acc));
      }
    }
    draws[r] = best / sums.normalizer;
  });
  return draws;
}

inline QuantileResult bootstrap_quantile(const BlockSums& sums, std::size_t B, double alpha, std::uint64_t seed,
                                         std::size_t threads = 1) {
  if (B < 1) throw ConfigError("boot.B must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("boot.alpha must lie in (0, 1)");
  QuantileResult q;
  q.alpha = alpha;
  q.seed = seed;
  q.draws = bootstrap_draws(sums, B, seed, threads);
  q.r_boot = quantile_from_draws(q.draws, alpha);
  return q;
}

/// Sum over window positions of S^T S per location, i.e. sum_z sum_j S_{l,j,z}^2
/// split by triple: result[l * dim + z].
inline std::vector<double> squared_sums(const BlockSums& sums) {
  std::vector<double> out(sums.locations() * sums.dim, 0.0);
  for (std::size_t l = 0; l < sums.locations(); ++l)
    for (std::size_t z = 0; z < sums.dim; ++z) {
      double acc = 0.0;
      for (double v : sums.at(l, z)) acc += v * v;
      out[l * sums.dim + z] = acc;
    }
  return out;
}

}  // namespace tvnet
