#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "rvol/kernel.hpp"
#include "rvol/numerics.hpp"

using namespace rvol;

namespace {

// ∫_lo^hi s^{a-1} e^{-s} ds by plain quadrature.
double gamma_density_integral(double a, double lo, double hi) {
  return integrate([a](double s) { return std::pow(s, a - 1.0) * std::exp(-s); }, lo, hi);
}

Eigen::MatrixXd random_psd(int n, int rank, std::mt19937_64& gen) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd A(n, rank);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < rank; ++j) A(i, j) = z(gen);
  return A * A.transpose();
}

}  // namespace

TEST(GammaFn, KnownValues) {
  EXPECT_NEAR(gamma_fn(1.0), 1.0, 1e-14);
  EXPECT_NEAR(gamma_fn(0.5), std::sqrt(std::numbers::pi), 1e-13);
  EXPECT_NEAR(gamma_fn(0.75), std::tgamma(0.75), 1e-12);
  EXPECT_NEAR(gamma_fn(0.75), 1.2254167024651776, 1e-12);
}

TEST(GammaFn, RejectsNonPositive) {
  EXPECT_THROW(gamma_fn(0.0), std::domain_error);
  EXPECT_THROW(gamma_fn(-1.0), std::domain_error);
}

TEST(LowerIncompleteGamma, ClosedForms) {
  EXPECT_NEAR(lower_incomplete_gamma(1.0, 2.0), 1.0 - std::exp(-2.0), 1e-14);
  EXPECT_EQ(lower_incomplete_gamma(0.6, 0.0), 0.0);
  EXPECT_EQ(lower_incomplete_gamma(0.95, 0.0), 0.0);
}

TEST(LowerIncompleteGamma, MatchesQuadrature) {
  EXPECT_NEAR(lower_incomplete_gamma(0.6, 1.5), gamma_density_integral(0.6, 0.0, 1.5), 1e-10);
  for (double a : {0.55, 0.75, 0.95}) {
    for (double x : {0.01, 0.3, 2.0, 7.5, 30.0}) {
      EXPECT_NEAR(lower_incomplete_gamma(a, x), gamma_density_integral(a, 0.0, x), 1e-10) << a << ' ' << x;
    }
  }
}

TEST(LowerIncompleteGamma, PlusUpperTailIsGamma) {
  for (double a : {0.55, 0.75, 0.95}) {
    for (double x : {0.1, 1.0, 10.0}) {
      // e^{-s} beyond x + 80 is below double precision
      const double upper = gamma_density_integral(a, x, x + 80.0);
      EXPECT_NEAR(lower_incomplete_gamma(a, x) + upper, gamma_fn(a), 1e-10) << a << ' ' << x;
    }
  }
}

TEST(LowerIncompleteGamma, NondecreasingInX) {
  for (double a : {0.55, 0.75, 0.95}) {
    double prev = 0.0;
    for (int i = 1; i <= 400; ++i) {
      const double x = 0.05 * i;
      const double v = lower_incomplete_gamma(a, x);
      EXPECT_GE(v, prev);
      prev = v;
    }
  }
}

TEST(MinimizeScalar, Parabola) {
  const auto r = minimize_scalar([](double x) { return (x - 2.0) * (x - 2.0); }, 0.0, 5.0, 1e-8);
  EXPECT_NEAR(r.argmin, 2.0, 1e-6);
  EXPECT_NEAR(r.min, 0.0, 1e-12);
}

TEST(MinimizeScalar, MonotoneReturnsBoundary) {
  const auto r = minimize_scalar([](double x) { return x; }, 0.0, 1.0, 1e-10);
  EXPECT_EQ(r.argmin, 0.0);
  const auto s = minimize_scalar([](double x) { return -x; }, 0.0, 1.0, 1e-10);
  EXPECT_EQ(s.argmin, 1.0);
}

TEST(MinimizeScalar, MatchesDenseGrid) {
  const auto f = [](double x) { return std::cosh(x - 0.37) + 0.1 * x * x; };
  const auto r = minimize_scalar(f, -3.0, 4.0, 1e-9);
  double best = -3.0;
  for (int i = 0; i <= 100000; ++i) {
    const double x = -3.0 + 7.0 * i / 100000.0;
    if (f(x) < f(best)) best = x;
  }
  EXPECT_NEAR(r.argmin, best, 1e-4);
}

TEST(Integrate, Basics) {
  EXPECT_NEAR(integrate([](double) { return 1.0; }, 0.0, 1.0), 1.0, 1e-14);
  EXPECT_NEAR(integrate([](double t) { return std::pow(t, -0.4); }, 0.0, 1.0), 1.0 / 0.6, 1e-11);
  EXPECT_NEAR(integrate([](double t) { return std::exp(t); }, -1.0, 2.0), std::exp(2.0) - std::exp(-1.0), 1e-12);
}

TEST(Integrate, SquaredRoughKernel) {
  const RoughKernelSpec spec(0.25);
  const double v = integrate([&](double t) { return std::pow(rough_kernel_eval(spec, t), 2); }, 0.0, 1.0);
  EXPECT_NEAR(v, 1.0 / (0.5 * std::pow(std::tgamma(0.75), 2)), 1e-10);
}

TEST(Integrate, RejectsBadInterval) {
  EXPECT_THROW(integrate([](double) { return 1.0; }, 1.0, 0.0), std::invalid_argument);
  QuadTolerance bad;
  bad.rel_tol = -1.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(PsdFactorize, HandCases) {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_TRUE(psd_factorize(I).isApprox(I));
  Eigen::MatrixXd S(2, 2);
  S << 4, 2, 2, 2;
  Eigen::MatrixXd L(2, 2);
  L << 2, 0, 1, 1;
  EXPECT_LT((psd_factorize(S) - L).norm(), 1e-14);
}

TEST(PsdFactorize, RoundTripRandom) {
  std::mt19937_64 gen(11);
  for (int n : {1, 5, 40, 200}) {
    for (int rank : {n, std::max(1, n / 2)}) {
      const Eigen::MatrixXd S = random_psd(n, rank, gen);
      const Eigen::MatrixXd L = psd_factorize(S);
      EXPECT_TRUE(L.isLowerTriangular());
      EXPECT_LE((L * L.transpose() - S).norm(), 1e-8 * S.norm()) << n << ' ' << rank;
    }
  }
}

TEST(PsdFactorize, JointCovariance) {
  const RoughKernelSpec spec(0.25);
  std::vector<double> rates;
  for (int i = 0; i < 10; ++i) rates.push_back(0.5 * i * i);
  const JointCovariance c = build_joint_covariance(spec, std::span<const double>(rates), 1.0);
  const Eigen::MatrixXd L = psd_factorize(c.matrix);
  EXPECT_LE((L * L.transpose() - c.matrix).norm(), 1e-8 * c.matrix.norm());
}

TEST(PsdFactorize, RejectsIndefinite) {
  Eigen::MatrixXd S(2, 2);
  S << 1, 2, 2, 1;
  EXPECT_THROW(psd_factorize(S), NotPsdError);
}

TEST(BlockPsdFactorize, RoundTripAndLeadStructure) {
  std::mt19937_64 gen(5);
  for (int n : {4, 30}) {
    // full-rank lead block, rank-deficient remainder
    Eigen::MatrixXd S = random_psd(n, n / 2 + 1, gen);
    S.topLeftCorner(2, 2) += Eigen::Matrix2d::Identity();
    const Eigen::MatrixXd B = block_psd_factorize(S, 2);
    EXPECT_LE((B * B.transpose() - S).norm(), 1e-8 * S.norm());
    EXPECT_EQ(B.topRightCorner(2, n - 2).norm(), 0.0);
    EXPECT_TRUE(B.topLeftCorner(2, 2).isLowerTriangular());
  }
}

TEST(BlockPsdFactorize, RejectsIndefiniteSchur) {
  Eigen::MatrixXd S(3, 3);
  S << 1, 0, 0, 0, 1, 2, 0, 2, 1;
  EXPECT_THROW(block_psd_factorize(S, 1), NotPsdError);
}
