#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "common.hpp"
#include "tvnet/smoother.hpp"

using namespace tvnet;

namespace {

struct BoxKernel {
  double operator()(double u) const { return std::abs(u) < 1.0 ? 0.5 : 0.0; }
  double radius() const { return 1.0; }
};

// Dense weighted least squares of y on (1, t_j - t) with an explicit n x 2 design.
template <class K>
Eigen::Vector2d dense_fit(const std::vector<double>& y, double bw, const K& k, double t) {
  const auto n = static_cast<Eigen::Index>(y.size());
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd w(n), Y(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double x = static_cast<double>(j + 1) / static_cast<double>(n) - t;
    X(j, 0) = 1.0;
    X(j, 1) = x;
    w(j) = k(x / bw);
    Y(j) = y[static_cast<std::size_t>(j)];
  }
  const Eigen::Matrix2d A = X.transpose() * w.asDiagonal() * X;
  const Eigen::Vector2d r = X.transpose() * w.asDiagonal() * Y;
  return A.fullPivLu().solve(r);
}

// Row c of the dense smoother matrix: e1' (X'WX)^{-1} X'W.
template <class K>
Eigen::RowVectorXd hat_row(std::size_t n, double bw, const K& k, long c) {
  const auto N = static_cast<Eigen::Index>(n);
  const double t = static_cast<double>(c) / static_cast<double>(n);
  Eigen::MatrixXd X(N, 2);
  Eigen::VectorXd w(N);
  for (Eigen::Index j = 0; j < N; ++j) {
    const double x = static_cast<double>(j + 1) / static_cast<double>(n) - t;
    X(j, 0) = 1.0;
    X(j, 1) = x;
    w(j) = k(x / bw);
  }
  const Eigen::Matrix2d A = X.transpose() * w.asDiagonal() * X;
  const Eigen::MatrixXd S = A.inverse() * X.transpose() * w.asDiagonal();
  return S.row(0);
}

}  // namespace

TEST(Smoother, ReproducesLinearResponses) {
  const std::size_t n = 40;
  std::vector<double> y(n);
  for (std::size_t j = 0; j < n; ++j) y[j] = 2.0 + 3.0 * static_cast<double>(j + 1) / n;
  FourthOrderKernel k;
  const std::vector<double> grid{0.5};
  const auto fit = local_linear_fit(y, 0.2, k, grid);
  EXPECT_NEAR(fit.beta0[0], 3.5, 1e-12);
  EXPECT_NEAR(fit.beta1[0], 3.0, 1e-11);
  const auto d = hat_diagnostics(y, 0.15, k, 6, 34);
  EXPECT_NEAR(d.rss, 0.0, 1e-20);
}

TEST(Smoother, ConstantResponses) {
  std::vector<double> y(30, 1.75);
  FourthOrderKernel k;
  const std::vector<double> grid{0.2, 0.5, 0.77};
  const auto fit = local_linear_fit(y, 0.25, k, grid);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    EXPECT_NEAR(fit.beta0[g], 1.75, 1e-12);
    EXPECT_NEAR(fit.beta1[g], 0.0, 1e-10);
  }
}

TEST(SmootherOracle, MatchesDenseNormalEquations) {
  const std::size_t n = 20;
  const auto y = testing_util::uniform(n, 7);
  FourthOrderKernel k;
  std::vector<double> grid;
  for (double t = 0.3; t <= 0.7001; t += 0.05) grid.push_back(t);
  const auto fit = local_linear_fit(y, 0.3, k, grid);
  DesignSmoother sm(n, 0.3, k);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto ref = dense_fit(y, 0.3, k, grid[g]);
    EXPECT_NEAR(fit.beta0[g], ref(0), 1e-12) << grid[g];
    EXPECT_NEAR(fit.beta1[g], ref(1), 1e-11) << grid[g];
  }
  for (long c = 6; c <= 14; ++c) {
    const auto ref = dense_fit(y, 0.3, k, static_cast<double>(c) / n);
    const auto [b0, b1] = sm.fit(y, c);
    EXPECT_NEAR(b0, ref(0), 1e-12) << c;
    EXPECT_NEAR(b1, ref(1), 1e-11) << c;
  }
}

TEST(SmootherOracle, HatTraceMatchesDenseMatrix) {
  const std::size_t n = 50;
  const double b = 0.2;
  const auto y = testing_util::uniform(n, 11);
  FourthOrderKernel k;
  const long first = 10, last = 40;
  const auto d = hat_diagnostics(y, b, k, first, last);
  double trace = 0.0, rss = 0.0;
  for (long c = first; c <= last; ++c) {
    const auto row = hat_row(n, b, k, c);
    trace += row(c - 1);
    const double fit = row.dot(Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(n)));
    rss += (y[static_cast<std::size_t>(c - 1)] - fit) * (y[static_cast<std::size_t>(c - 1)] - fit);
  }
  EXPECT_NEAR(d.trace, trace, 1e-10);
  EXPECT_NEAR(d.rss, rss, 1e-10);
}

TEST(SmootherOracle, EquivalentWeightsMatchDenseRow) {
  const std::size_t n = 60;
  const auto y = testing_util::uniform(n, 3);
  FourthOrderKernel k;
  DesignSmoother sm(n, 0.15, k);
  for (long c : {9L, 30L, 52L}) {
    const auto l = sm.equivalent_weights(y, c);
    const auto row = hat_row(n, 0.15, k, c);
    for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(l[j], row(static_cast<Eigen::Index>(j)), 1e-12);
  }
}

TEST(Smoother, FullWindowBoxKernelIsOls) {
  const std::vector<double> y{1.0, 3.0, 2.0, 5.0, 4.0};
  // Box weights over all five points give the ordinary least-squares line.
  const auto fit = hat_diagnostics(y, 1.0, BoxKernel{}, 1, 5);
  Eigen::MatrixXd X(5, 2);
  Eigen::VectorXd Y(5);
  for (int j = 0; j < 5; ++j) {
    X(j, 0) = 1.0;
    X(j, 1) = (j + 1) / 5.0;
    Y(j) = y[static_cast<std::size_t>(j)];
  }
  const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(Y);
  for (int j = 0; j < 5; ++j) EXPECT_NEAR(fit.fitted[static_cast<std::size_t>(j)], beta(0) + beta(1) * X(j, 1), 1e-12);
}

TEST(Smoother, Linearity) {
  const std::size_t n = 80;
  const auto u = testing_util::uniform(n, 21), v = testing_util::uniform(n, 22);
  std::vector<double> mix(n);
  for (std::size_t j = 0; j < n; ++j) mix[j] = 2.5 * u[j] - 0.75 * v[j];
  FourthOrderKernel k;
  DesignSmoother sm(n, 0.2, k);
  for (long c = 16; c <= 64; ++c)
    EXPECT_NEAR(sm.level(mix, c), 2.5 * sm.level(u, c) - 0.75 * sm.level(v, c), 1e-12);
}

TEST(Smoother, MissingLeadingResponsesAreSkipped) {
  const std::size_t n = 60;
  auto y = testing_util::uniform(n, 5);
  for (std::size_t j = 0; j < 4; ++j) y[j] = std::nan("");
  FourthOrderKernel k;
  DesignSmoother sm(n, 0.2, k);
  // With the leading entries dropped the fit equals a dense fit on the rest.
  const long c = 12;
  const auto l = sm.equivalent_weights(y, c);
  double direct = 0.0;
  for (std::size_t j = 4; j < n; ++j) direct += l[j] * y[j];
  EXPECT_NEAR(sm.level(y, c), direct, 1e-12);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(l[j], 0.0);
}

TEST(Smoother, NoSingularityInsideTheDomain) {
  FourthOrderKernel k;
  for (std::size_t n : {50u, 100u, 333u})
    for (double b : {10.0 / static_cast<double>(n), 0.2, 0.4}) {
      const auto y = testing_util::uniform(n, n);
      DesignSmoother sm(n, b, k);
      const long first = static_cast<long>(std::ceil(n * b - 1e-9)), last = static_cast<long>(n) - first;
      for (long c = first; c <= last; ++c) EXPECT_NO_THROW((void)sm.level(y, c));
    }
}

TEST(Smoother, TinyBandwidthIsSingular) {
  const auto y = testing_util::uniform(100, 1);
  FourthOrderKernel k;
  const std::vector<double> grid{0.5};
  EXPECT_THROW(local_linear_fit(y, 0.005, k, grid), SingularDesign);
}
