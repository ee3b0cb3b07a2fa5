#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "common.hpp"
#include "tvnet/lrv.hpp"
#include "tvnet/simgen.hpp"

using namespace tvnet;

namespace {

// Gamma^2(t) by a plain double loop over every block start s and every
// candidate weight, with no windowing or prefix sums.
template <class K>
std::vector<double> brute_lrv(const std::vector<double>& xi, std::size_t m, double eta, const K& k, double kappa,
                              const EvalDomain& d) {
  const std::size_t n = xi.size();
  std::vector<double> out;
  for (long c = d.first; c <= d.last; ++c) {
    const double t = static_cast<double>(c) / static_cast<double>(n);
    double num = 0.0, den = 0.0;
    for (std::size_t s = 1; s + m - 1 <= n; ++s) {
      double delta = 0.0;
      bool ok = true;
      for (std::size_t j = s; j <= s + m - 1; ++j) {
        if (std::isnan(xi[j - 1])) ok = false;
        delta += xi[j - 1];
      }
      if (!ok) continue;
      const double w = k((t - static_cast<double>(s) / static_cast<double>(n)) / eta);
      num += w * delta * delta;
      den += w;
    }
    out.push_back(kappa / static_cast<double>(m) * num / den);
  }
  return out;
}

}  // namespace

TEST(LrvOracle, MatchesBruteForceDoubleSum) {
  const std::size_t n = 40;
  auto xi = testing_util::gaussian(n, 12);
  xi[0] = xi[1] = std::nan("");
  const auto d = EvalDomain::interior(n, 0.2);
  const std::vector<double> kappa(d.size(), 1.25);
  const auto got = lrv_curve(xi, 4, 0.25, EpanechnikovKernel{}, kappa, d);
  const auto ref = brute_lrv(xi, 4, 0.25, EpanechnikovKernel{}, 1.25, d);
  ASSERT_EQ(got.gamma2.size(), ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(got.gamma2[i], ref[i], 1e-12) << i;
  EXPECT_EQ(got.clamped, 0u);
}

TEST(LrvOracle, SignedKernelMatchesBruteForceWherePositive) {
  const std::size_t n = 40;
  const auto xi = testing_util::gaussian(n, 13);
  const auto d = EvalDomain::interior(n, 0.2);
  const std::vector<double> kappa(d.size(), 1.0);
  FourthOrderKernel k;
  const auto got = lrv_curve(xi, 4, 0.25, k, kappa, d);
  const auto ref = brute_lrv(xi, 4, 0.25, k, 1.0, d);
  for (std::size_t i = 0; i < ref.size(); ++i)
    if (ref[i] >= 0.0) EXPECT_NEAR(got.gamma2[i], ref[i], 1e-12) << i;
    else EXPECT_GE(got.gamma2[i], 0.0);
}

TEST(Lrv, WeightsAreNormalised) {
  // Xi = 1 gives Delta_s = m for every block, so Gamma^2 = kappa m exactly when the weights sum to one.
  const std::size_t n = 120;
  const std::vector<double> xi(n, 1.0);
  const auto d = EvalDomain::interior(n, 0.2);
  const std::vector<double> kappa(d.size(), 1.0);
  for (double eta : {0.1, 0.25, 0.45}) {
    const auto c = lrv_curve(xi, 5, eta, EpanechnikovKernel{}, kappa, d);
    for (double v : c.gamma2) EXPECT_NEAR(v, 5.0, 1e-12);
    const auto c4 = lrv_curve(xi, 5, eta, FourthOrderKernel{}, kappa, d);
    for (double v : c4.gamma2) EXPECT_NEAR(v, 5.0, 1e-12);
  }
}

TEST(Lrv, ScaleEquivariance) {
  const std::size_t n = 100;
  const auto xi = testing_util::gaussian(n, 1);
  std::vector<double> xi2(xi);
  for (double& v : xi2) v *= 2.0;
  const auto d = EvalDomain::interior(n, 0.2);
  const std::vector<double> kappa(d.size(), 1.25);
  const auto a = lrv_curve(xi, 4, 0.3, EpanechnikovKernel{}, kappa, d);
  const auto b = lrv_curve(xi2, 4, 0.3, EpanechnikovKernel{}, kappa, d);
  for (std::size_t i = 0; i < a.gamma2.size(); ++i) EXPECT_EQ(b.gamma2[i], 4.0 * a.gamma2[i]);
}

TEST(Lrv, ZeroInputAndErrors) {
  const std::size_t n = 60;
  const std::vector<double> xi(n, 0.0);
  const auto d = EvalDomain::interior(n, 0.2);
  const std::vector<double> kappa(d.size(), 1.25);
  const auto c = lrv_curve(xi, 4, 0.3, EpanechnikovKernel{}, kappa, d);
  for (double v : c.gamma2) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(lrv_curve(xi, 21, 0.3, EpanechnikovKernel{}, kappa, d), BlockTooLong);
  EXPECT_THROW(lrv_curve(xi, 0, 0.3, EpanechnikovKernel{}, kappa, d), ConfigError);
  EXPECT_THROW(lrv_curve(xi, 4, 0.5, EpanechnikovKernel{}, kappa, d), ConfigError);
  std::vector<double> sd;
  EXPECT_EQ(floored_sd(c, sd), c.gamma2.size());
  for (double v : sd) EXPECT_GT(v, 0.0);
}

TEST(Lrv, WhiteNoiseLongRunVarianceIsTheMarginalVariance) {
  const std::size_t n = 4000;
  const auto xi = testing_util::gaussian(n, 2024);
  const auto d = EvalDomain::interior(n, 0.2);
  const double kappa = FourthOrderKernel{}.kappa();
  const std::vector<double> kap(d.size(), kappa);
  const auto m = static_cast<std::size_t>(std::floor(std::pow(4000.0, 2.0 / 7.0)));
  const auto c = lrv_curve(xi, m, std::pow(4000.0, -1.0 / 7.0), EpanechnikovKernel{}, kap, d);
  EXPECT_NEAR(c.at(2000) / kappa, 1.0, 0.2);
}

TEST(LrvOracle, XiMatchesTermByTermTransliteration) {
  const std::size_t n = 60;
  const auto panel = sim::simulate({.n = 100, .seed = 6});
  // Use the first 60 observations as a toy panel.
  std::vector<std::vector<double>> cols(3);
  for (std::size_t i = 0; i < 3; ++i) cols[i].assign(panel.series(i).begin(), panel.series(i).begin() + n);
  const Panel toy = Panel::from_columns(cols);
  const long h = 8;
  const auto bands = BandSet::make(n, {{0, 2, 1}, {2, 1, 2}}, {0.3, 0.3}, {h, 3});
  FourthOrderKernel k;
  for (Variant v : {Variant::plain, Variant::reduced}) {
    const auto cs = estimate_curves(toy, bands, k, v);
    const auto raw = xi_series(toy, cs, h, XiForm::raw);
    const auto res = xi_series(toy, cs, h, XiForm::residual);
    for (std::size_t z = 0; z < 2; ++z) {
      const auto [i, l, lag] = bands.triples[z];
      const auto& c = cs.curves[z];
      for (std::size_t j = 1; j <= n; ++j) {
        if (static_cast<long>(j) <= h) {
          EXPECT_TRUE(std::isnan(raw.values[z][j - 1]));
          continue;
        }
        auto Y = [&](std::size_t s, std::size_t t) { return toy.at(t, s); };
        const double yih = Y(i, j) - Y(i, j - h), ylh = Y(l, j) - Y(l, j - h), yik = Y(i, j) - Y(i, j - lag);
        const double sig = c.sigma[j - 1], rho = c.rho[j - 1], gi = c.gamma0_i[j - 1], gl = c.gamma0_l[j - 1];
        const double x_raw = 0.5 * yih * ylh / sig - yik * ylh / sig - rho / 4.0 * (yih * yih / gi + ylh * ylh / gl);
        const double x_res = 0.5 * (yih * ylh - c.beta_h[j - 1]) / sig - (yik * ylh - c.beta_k[j - 1]) / sig -
                             rho / 4.0 * ((yih * yih - c.beta_hi[j - 1]) / gi + (ylh * ylh - c.beta_hl[j - 1]) / gl);
        EXPECT_NEAR(raw.values[z][j - 1], x_raw, 1e-12 * (1.0 + std::abs(x_raw)));
        EXPECT_NEAR(res.values[z][j - 1], x_res, 1e-12 * (1.0 + std::abs(x_res)));
      }
    }
  }
}

TEST(Lrv, XiCollapsesAtLagZero) {
  const auto panel = testing_util::white_noise(200, 2, 3);
  const auto bands = BandSet::make(200, {{1, 1, 0}}, {0.2}, DifferencingLags::automatic(200, 1));
  FourthOrderKernel k;
  const auto cs = rho_plain(panel, bands, k);
  const auto raw = xi_series(panel, cs, bands.lags.h, XiForm::raw);
  // With rho = 1 and sigma = gamma0 the cross and self terms cancel.
  for (std::size_t j = static_cast<std::size_t>(bands.lags.h); j < 200; ++j) {
    const double scale = std::pow(panel.at(j + 1, 1) - panel.at(j + 1 - bands.lags.h, 1), 2) / cs.curves[0].sigma[j];
    EXPECT_NEAR(raw.values[0][j], 0.0, 1e-14 * (1.0 + scale));
  }
}

TEST(Lrv, ResidualXiVanishesOnNoiselessLinearPanel) {
  const std::size_t n = 200;
  std::vector<double> a(n), b(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double t = static_cast<double>(j + 1) / n;
    a[j] = 1.0 + 2.0 * t;
    b[j] = -3.0 + 0.5 * t;
  }
  const Panel panel = Panel::from_columns({a, b});
  const auto bands = BandSet::make(n, {{0, 1, 1}}, {0.2}, DifferencingLags::automatic(n, 1));
  FourthOrderKernel k;
  const auto cs = rho_plain(panel, bands, k);
  const auto res = xi_series(panel, cs, bands.lags.h, XiForm::residual);
  for (long j = cs.domain.first; j <= cs.domain.last; ++j) EXPECT_NEAR(res.values[0][static_cast<std::size_t>(j - 1)], 0.0, 1e-8);
}

TEST(Lrv, ZeroRangeReducedMatchesPlain) {
  const auto panel = sim::simulate({.n = 300, .seed = 10});
  const auto bands = BandSet::make(300, sim::cross_lag_one(), std::vector<double>(6, 0.25),
                                   DifferencingLags::automatic(300, 1));
  FourthOrderKernel k;
  EstimatorOptions opt;
  opt.check.delta = 0.0;
  const auto plain = rho_plain(panel, bands, k, opt);
  const auto red = rho_reduced(panel, bands, k, opt);
  const auto kp = kappa_profile(k, Variant::plain, plain.domain, bands.b, opt.check);
  const auto kr = kappa_profile(k, Variant::reduced, red.domain, bands.b, opt.check);
  EXPECT_EQ(kp, kr);
  const auto xp = xi_series(panel, plain, bands.lags.h, XiForm::residual);
  const auto xr = xi_series(panel, red, bands.lags.h, XiForm::residual);
  for (std::size_t z = 0; z < bands.size(); ++z) {
    const auto a = lrv_curve(xp.values[z], 4, 0.3, EpanechnikovKernel{}, kp, plain.domain);
    const auto b = lrv_curve(xr.values[z], 4, 0.3, EpanechnikovKernel{}, kr, red.domain);
    for (std::size_t i = 0; i < a.gamma2.size(); ++i) EXPECT_NEAR(a.gamma2[i], b.gamma2[i], 1e-10 * a.gamma2[i]);
  }
}

TEST(Lrv, KappaProfileUsesCheckKernelInTheInterior) {
  FourthOrderKernel k;
  const auto d = EvalDomain::interior(500, 0.2);
  const auto kr = kappa_profile(k, Variant::reduced, d, 0.2, CheckKernelParams{});
  EXPECT_NEAR(kr.front(), 1.25, 1e-12);
  EXPECT_LT(kr[d.size() / 2], 1.25);
  const long mid = d.first + static_cast<long>(d.size() / 2);
  CheckKernelParams at = CheckKernelParams{};
  at.delta = reduction_range(d.t(mid), 0.2, CheckKernelParams{});
  EXPECT_GT(at.delta, 0.0);
  EXPECT_NEAR(kr[d.size() / 2], build_check_kernel(k, at).kappa(), 1e-12);
}
