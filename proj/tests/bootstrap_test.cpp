#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "common.hpp"
#include "tvnet/bootstrap.hpp"
#include "tvnet/plugin.hpp"
#include "tvnet/simgen.hpp"

using namespace tvnet;

namespace {

struct Toy {
  Panel panel;
  BandSet bands;
  CurveSet curves;
  XiSeries raw;
  std::vector<LrvCurve> lrv;
  long trim = 0;
};

Toy make_toy(Variant v, std::size_t n = 60) {
  Toy t;
  const auto big = sim::simulate({.n = 200, .seed = 42});
  std::vector<std::vector<double>> cols(3);
  for (std::size_t i = 0; i < 3; ++i) cols[i].assign(big.series(i).begin(), big.series(i).begin() + static_cast<long>(n));
  t.panel = Panel::from_columns(cols);
  t.bands = BandSet::make(n, {{0, 2, 1}, {2, 1, 1}}, {0.2, 0.15}, {8, 3});
  FourthOrderKernel k;
  t.curves = estimate_curves(t.panel, t.bands, k, v);
  t.raw = xi_series(t.panel, t.curves, 8, XiForm::raw);
  const auto resid = xi_series(t.panel, t.curves, 8, XiForm::residual);
  const auto kap = kappa_profile(k, v, t.curves.domain, t.bands.b, CheckKernelParams{});
  for (std::size_t z = 0; z < 2; ++z)
    t.lrv.push_back(lrv_curve(resid.values[z], 3, 0.3, EpanechnikovKernel{}, kap, t.curves.domain));
  return t;
}

BlockVectors vectors(const Toy& t, Variant v) {
  BlockInputs in{&t.raw, &t.lrv, t.curves.domain, t.trim};
  return build_block_vectors(in, t.bands, FourthOrderKernel{}, v);
}

// Block vectors written by hand: one location, one coordinate, kernel 1.
BlockVectors manual(const std::vector<double>& xi, long nb) {
  BlockVectors bv;
  bv.dim = 1;
  bv.layout.n = xi.size();
  bv.layout.nb = nb;
  bv.layout.location = {nb};
  bv.layout.half = {nb};
  bv.xi = {xi};
  bv.bandwidth = {0.5};
  bv.normalizer = {1.0};
  bv.divisor = {1.0};
  bv.kernel_at = [](std::size_t, double) { return 1.0; };
  bv.materialize_rows();
  return bv;
}

}  // namespace

TEST(BlockOracle, DenseMaterialisationMatchesFormula) {
  for (Variant v : {Variant::plain, Variant::reduced}) {
    const auto t = make_toy(v);
    const auto bv = vectors(t, v);
    FourthOrderKernel k;
    const std::size_t n = 60;
    std::vector<double> sd0, sd1;
    floored_sd(t.lrv[0], sd0);
    floored_sd(t.lrv[1], sd1);
    for (std::size_t l = 0; l < bv.layout.size(); ++l) {
      const long s = bv.layout.location[l];
      const double dt = delta_of_t(static_cast<double>(s) / n, t.bands.b, CheckKernelParams{});
      const CheckKernel<FourthOrderKernel> ck(k, {CheckKernelParams{}.r, dt});
      for (std::size_t z = 0; z < 2; ++z) {
        const double bz = t.bands.bandwidths[z];
        const double cz = std::sqrt(t.bands.b / bz);
        const double gam = (z == 0 ? sd0 : sd1)[static_cast<std::size_t>(s - t.curves.domain.first)];
        for (long q = bv.layout.q_lo(l); q <= bv.layout.q_hi(l); ++q) {
          const long d = s - bv.layout.half[l] + q;
          const double u = static_cast<double>(d - s) / (static_cast<double>(n) * bz);
          const double kw = v == Variant::reduced ? ck(u) : k(u);
          const double x = t.raw.values[z][static_cast<std::size_t>(d - 1)];
          const double want = cz * kw * (std::isnan(x) ? 0.0 : x) / gam;
          EXPECT_NEAR(bv.value(l, z, q), want, 1e-12 * (1.0 + std::abs(want)));
          EXPECT_NEAR(bv.value_at(d, l, z), want, 1e-12 * (1.0 + std::abs(want)));
          if (v == Variant::plain && std::abs(u) >= 1.0) EXPECT_EQ(bv.value(l, z, q), 0.0);
        }
      }
    }
  }
}

TEST(BlockOracle, WindowSumsMatchDirectLoop) {
  for (Variant v : {Variant::plain, Variant::reduced}) {
    const auto t = make_toy(v);
    const auto bv = vectors(t, v);
    for (long w : {2L, 3L, 5L}) {
      const auto sums = block_sums(bv, w);
      EXPECT_DOUBLE_EQ(sums.normalizer, std::sqrt(2.0 * w * bv.layout.nb));
      for (std::size_t l = 0; l < bv.layout.size(); ++l) {
        const long j_lo = bv.layout.q_lo(l) + w - 1, j_hi = bv.layout.q_hi(l) - w;
        ASSERT_EQ(sums.count[l], static_cast<std::size_t>(j_hi - j_lo + 1));
        for (std::size_t z = 0; z < 2; ++z)
          for (long j = j_lo; j <= j_hi; ++j) {
            double s = 0.0;
            for (long q = j - w + 1; q <= j; ++q) s += bv.value(l, z, q);
            for (long q = j + 1; q <= j + w; ++q) s -= bv.value(l, z, q);
            EXPECT_NEAR(sums.at(l, z)[static_cast<std::size_t>(j - j_lo)], s, 1e-12);
          }
      }
    }
  }
}

TEST(BootstrapOracle, DrawsMatchStraightLineReference) {
  const auto t = make_toy(Variant::plain);
  // One triple, as in the reference setting.
  Toy one = t;
  one.bands = BandSet::make(60, {t.bands.triples[0]}, {0.2}, {8, 3});
  one.raw.values.resize(1);
  one.lrv.resize(1);
  const auto bv = vectors(one, Variant::plain);
  const auto sums = block_sums(bv, 3);
  const std::size_t B = 200;
  const std::uint64_t seed = 99;
  const auto draws = bootstrap_draws(sums, B, seed);

  const GaussianMultipliers gen(seed);
  const long keys = static_cast<long>(60);
  for (std::size_t r = 0; r < B; ++r) {
    std::vector<double> R(static_cast<std::size_t>(keys) + 1);
    for (long k = 1; k <= keys; ++k) R[static_cast<std::size_t>(k)] = gen(r, static_cast<std::uint64_t>(k));
    double best = 0.0;
    for (std::size_t l = 0; l < bv.layout.size(); ++l) {
      const long j_lo = bv.layout.q_lo(l) + 2;
      const auto s = sums.at(l, 0);
      double acc = 0.0;
      for (std::size_t jp = 0; jp < s.size(); ++jp)
        acc += s[jp] * R[static_cast<std::size_t>(bv.layout.data_index(l, j_lo + static_cast<long>(jp)))];
      best = std::max(best, std::abs(acc));
    }
    EXPECT_EQ(draws[r], best / std::sqrt(2.0 * 3.0 * bv.layout.nb)) << r;
  }
}

TEST(MultiplierInvariant, EqualLocationPlusPositionSharesTheDraw) {
  const auto t = make_toy(Variant::plain);
  const auto bv = vectors(t, Variant::plain);
  const auto sums = block_sums(bv, 2);
  // With a constant half-width the key is a fixed offset plus l + j.
  for (std::size_t l1 = 0; l1 < sums.locations(); ++l1)
    for (std::size_t l2 = 0; l2 < sums.locations(); ++l2)
      for (std::size_t j1 = 0; j1 < sums.count[l1]; ++j1) {
        const long j2 = static_cast<long>(l1 + j1) - static_cast<long>(l2);
        if (j2 < 0 || j2 >= static_cast<long>(sums.count[l2])) continue;
        EXPECT_EQ(sums.key(l1, j1), sums.key(l2, static_cast<std::size_t>(j2)));
      }
  const GaussianMultipliers gen(5);
  EXPECT_EQ(gen(3, 17), gen(3, 17));
  EXPECT_NE(gen(3, 17), gen(3, 18));
  EXPECT_NE(gen(3, 17), gen(4, 17));
}

TEST(Bootstrap, MultipliersAreStandardNormal) {
  const GaussianMultipliers gen(2024);
  double s = 0.0, s2 = 0.0;
  const int N = 200000;
  for (int k = 0; k < N; ++k) {
    const double x = gen(static_cast<std::uint64_t>(k % 7), static_cast<std::uint64_t>(k));
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / N, 0.0, 0.01);
  EXPECT_NEAR(s2 / N, 1.0, 0.015);
}

TEST(Bootstrap, ThreadCountDoesNotChangeDraws) {
  const auto t = make_toy(Variant::reduced);
  const auto sums = block_sums(vectors(t, Variant::reduced), 3);
  EXPECT_EQ(bootstrap_draws(sums, 300, 7, 1), bootstrap_draws(sums, 300, 7, 4));
}

TEST(Bootstrap, WindowDifferencing) {
  // Constant sequences are annihilated.
  const auto flat = block_sums(manual(std::vector<double>(20, 1.5), 10), 3);
  for (double v : flat.values) EXPECT_EQ(v, 0.0);
  // w = 1 on +a, -a, ... gives |S| = 2a.
  std::vector<double> alt(20);
  for (std::size_t j = 0; j < alt.size(); ++j) alt[j] = j % 2 ? -0.75 : 0.75;
  const auto s = block_sums(manual(alt, 10), 1);
  for (double v : s.values) EXPECT_DOUBLE_EQ(std::abs(v), 1.5);
  EXPECT_THROW(block_sums(manual(alt, 10), 0), WindowTooLarge);
  EXPECT_THROW(block_sums(manual(alt, 10), 10), WindowTooLarge);
}

TEST(Bootstrap, QuantileConvention) {
  std::vector<double> d(101);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<double>((i * 37) % 101);
  EXPECT_EQ(quantile_from_draws(d, 0.5), 50.0);  // 51st order statistic
  EXPECT_EQ(quantile_from_draws(d, 0.1), 90.0);  // ceil(90.9) = 91st
  double prev = 1e300;
  for (double a = 0.01; a < 0.99; a += 0.01) {
    const double q = quantile_from_draws(d, a);
    EXPECT_LE(q, prev);
    prev = q;
  }
  const auto zero = block_sums(manual(std::vector<double>(20, 0.0), 10), 2);
  const auto q = bootstrap_quantile(zero, 100, 0.1, 1);
  EXPECT_EQ(q.r_boot, 0.0);
  for (double v : q.draws) EXPECT_EQ(v, 0.0);
}

TEST(Bootstrap, LayoutWidensForTheCheckKernel) {
  const auto t = make_toy(Variant::reduced);
  const auto bv = vectors(t, Variant::reduced);
  long widest = 0;
  for (std::size_t l = 0; l < bv.layout.size(); ++l) {
    EXPECT_GE(bv.layout.half[l], bv.layout.nb);
    widest = std::max(widest, bv.layout.half[l]);
    // Every layout position maps to an observation.
    for (long q = bv.layout.q_lo(l); q <= bv.layout.q_hi(l); ++q) {
      const long d = bv.layout.data_index(l, q);
      EXPECT_GE(d, 1);
      EXPECT_LE(d, 60);
    }
  }
  EXPECT_GT(widest, bv.layout.nb);
}

TEST(Bootstrap, Errors) {
  const auto t = make_toy(Variant::plain);
  auto bad = t;
  bad.lrv.pop_back();
  BlockInputs in{&bad.raw, &bad.lrv, bad.curves.domain, 0};
  EXPECT_THROW(build_block_vectors(in, bad.bands, FourthOrderKernel{}, Variant::plain), ConfigError);
  EXPECT_THROW(quantile_from_draws({}, 0.1), ConfigError);
  EXPECT_THROW(quantile_from_draws({1.0}, 1.0), ConfigError);
}
