#include <cmath>
#include <random>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include "rvol/bergomi.hpp"
#include "rvol/mc.hpp"
#include "rvol/numerics.hpp"
#include "rvol/quadrature.hpp"

using namespace rvol;

namespace {

// ∫_0^{min(s,t)} (s-u)^e (t-u)^e du straight from Boost tanh-sinh.
double cross_cov_oracle(double H, double s, double t) {
  boost::math::quadrature::tanh_sinh<double> ts;
  const double e = H - 0.5;
  const double top = std::min(s, t);
  // near the upper end, xc carries top - u exactly
  return ts.integrate(
      [&](double u, double xc) {
        const double d = xc > 0 ? xc : top - u;
        return std::pow(s - top + d, e) * std::pow(t - top + d, e);
      },
      0.0, top);
}

struct Running {
  double n = 0, sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
  void add(double x, double y) {
    n += 1;
    sx += x;
    sy += y;
    sxy += x * y;
    sxx += x * x;
    syy += y * y;
  }
  double cov() const { return (sxy - sx * sy / n) / (n - 1); }
  double var_x() const { return (sxx - sx * sx / n) / (n - 1); }
  double var_y() const { return (syy - sy * sy / n) / (n - 1); }
  // standard error of the sample covariance for a Gaussian pair
  double cov_se() const { return std::sqrt((var_x() * var_y() + cov() * cov()) / n); }
};

const ExpSumKernel kSmall({0.6, 1.0, 0.8}, {0.5, 5.0, 50.0});

}  // namespace

TEST(FactorSampler, ZeroRateFactorIsBrownianMotion) {
  const GridSpec grid{1.0, 12};
  const FactorSampler s(ExpSumKernel({1.0}, {0.0}), grid);
  const FactorDraw d = s.sample(CounterRng(3), 17);
  double w = 0.0;
  for (int l = 0; l < 12; ++l) {
    w += d.dW[l];
    EXPECT_NEAR(d.factors(l, 0), w, 1e-14);
  }
}

TEST(FactorSampler, StepCovariance) {
  const double dt = 0.1;
  const FactorSampler s(kSmall, GridSpec{1.0, 10});
  const Eigen::MatrixXd& c = s.step_covariance();
  EXPECT_NEAR(c(0, 0), dt, 1e-16);
  for (int i = 0; i < 3; ++i) {
    const double ri = kSmall.rates()[i];
    EXPECT_NEAR(c(0, i + 1), (1 - std::exp(-ri * dt)) / ri, 1e-15);
    for (int j = 0; j < 3; ++j) {
      const double rs = ri + kSmall.rates()[j];
      EXPECT_NEAR(c(i + 1, j + 1), (1 - std::exp(-rs * dt)) / rs, 1e-15);
    }
  }
}

TEST(FactorSampler, MarginalMomentsMatchClosedForm) {
  const GridSpec grid{1.0, 10};
  const FactorSampler s(kSmall, grid);
  const CounterRng rng(1);
  const int paths = 100000;
  std::vector<Running> at_T(3), at_3(3);
  for (int p = 0; p < paths; ++p) {
    const FactorDraw d = s.sample(rng, static_cast<std::uint64_t>(p));
    const double W = d.dW.sum();
    for (int i = 0; i < 3; ++i) {
      at_T[i].add(d.factors(9, i), W);
      at_3[i].add(d.factors(2, i), d.factors(2, i));
    }
  }
  for (int i = 0; i < 3; ++i) {
    const double r = kSmall.rates()[i];
    const double var_T = (1 - std::exp(-2 * r * 1.0)) / (2 * r);
    const double var_3 = (1 - std::exp(-2 * r * 0.3)) / (2 * r);
    EXPECT_NEAR(at_T[i].var_x(), var_T, 3 * var_T * std::sqrt(2.0 / paths)) << i;
    EXPECT_NEAR(at_3[i].var_x(), var_3, 3 * var_3 * std::sqrt(2.0 / paths)) << i;
    EXPECT_NEAR(at_T[i].cov(), (1 - std::exp(-r)) / r, 3 * at_T[i].cov_se()) << i;
  }
}

TEST(Fractional, CovarianceEntries) {
  const double H = 0.07;
  const GridSpec grid{0.041, 6};
  const Eigen::MatrixXd c = fractional_covariance(H, grid);
  for (int l = 1; l <= 6; ++l) {
    const double tl = grid.t(l);
    EXPECT_NEAR(c(6 + l - 1, 6 + l - 1), std::pow(tl, 2 * H) / (2 * H), 1e-14);
    for (int m = 1; m <= 6; ++m) {
      const double tm = grid.t(m);
      EXPECT_EQ(c(l - 1, m - 1), std::min(tl, tm));
      boost::math::quadrature::tanh_sinh<double> ts;
      const double top = std::min(tl, tm);
      // xc > 0 is the exact distance to the upper end, avoiding tl - u cancellation
      const double wi = ts.integrate(
          [&](double u, double xc) { return std::pow(xc > 0 && top == tl ? xc : tl - u, H - 0.5); }, 0.0, top);
      EXPECT_NEAR(c(6 + l - 1, m - 1), wi, 1e-11);
      if (l != m) EXPECT_NEAR(c(6 + l - 1, 6 + m - 1), cross_cov_oracle(H, tl, tm), 1e-9);
    }
  }
}

TEST(Fractional, NearHalfBehavesLikeBrownianMotion) {
  const GridSpec grid{1.0, 4};
  const Eigen::MatrixXd c = fractional_covariance(0.4999, grid);
  for (int l = 1; l <= 4; ++l)
    for (int m = 1; m <= 4; ++m) EXPECT_NEAR(c(4 + l - 1, 4 + m - 1), std::min(grid.t(l), grid.t(m)), 1e-3);
}

TEST(Fractional, SamplerCovarianceByMonteCarlo) {
  const double H = 0.1;
  const GridSpec grid{1.0, 4};
  const FractionalSampler s(H, grid);
  const CounterRng rng(2);
  const int paths = 100000;
  Running i1i3, i2w4, i4i4;
  for (int p = 0; p < paths; ++p) {
    const FractionalDraw d = s.sample(rng, static_cast<std::uint64_t>(p));
    i1i3.add(d.fracint[0], d.fracint[2]);
    i2w4.add(d.fracint[1], d.dW.sum());
    i4i4.add(d.fracint[3], d.fracint[3]);
  }
  EXPECT_NEAR(i1i3.cov(), cross_cov_oracle(H, 0.25, 0.75), 3 * i1i3.cov_se());
  const double a = H + 0.5;
  EXPECT_NEAR(i2w4.cov(), std::pow(0.5, a) / a, 3 * i2w4.cov_se());
  EXPECT_NEAR(i4i4.var_x(), 1.0 / (2 * H), 3 * (1.0 / (2 * H)) * std::sqrt(2.0 / paths));
}

TEST(CoupledFractional, SharesBrownianPathWithFactors) {
  const GridSpec grid{0.041, 20};
  const ExpSumKernel k = build_systematic(RoughKernelSpec(0.07), 20, grid.T);
  const CoupledFractionalSampler c(0.07, k, grid);
  const FactorSampler f(k, grid);
  const CounterRng rng(5);
  for (std::uint64_t p : {0ull, 9ull, 123456ull}) EXPECT_EQ(c.sample(rng, p).dW, f.sample(rng, p).dW);
}

TEST(CoupledFractional, CovarianceAndMoments) {
  const double H = 0.1;
  const GridSpec grid{1.0, 5};
  const CoupledFractionalSampler c(H, kSmall, grid);
  const Eigen::MatrixXd& S = c.covariance();
  // I-block equals the plain fractional covariance
  const Eigen::MatrixXd plain = fractional_covariance(H, grid);
  EXPECT_LE((S.bottomRightCorner(5, 5) - plain.bottomRightCorner(5, 5)).norm(), 1e-14);
  // Cov(I_l, X_m) against quadrature
  for (int l = 1; l <= 5; ++l) {
    for (int m = 1; m <= 5; ++m) {
      const double tl = grid.t(l), tm = grid.t(m);
      boost::math::quadrature::tanh_sinh<double> ts;
      const double want = ts.integrate(
          [&](double u) { return std::pow(tl - u, H - 0.5) * expsum_eval(kSmall, tm - u); }, 0.0, std::min(tl, tm));
      EXPECT_NEAR(S(10 + l - 1, 5 + m - 1), want, 1e-9) << l << ' ' << m;
    }
  }
  const CounterRng rng(6);
  const int paths = 100000;
  Running i5, i2w;
  for (int p = 0; p < paths; ++p) {
    const FractionalDraw d = c.sample(rng, static_cast<std::uint64_t>(p));
    i5.add(d.fracint[4], d.fracint[4]);
    i2w.add(d.fracint[1], d.dW.head(2).sum());
  }
  EXPECT_NEAR(i5.var_x(), 1.0 / (2 * H), 3 * (1.0 / (2 * H)) * std::sqrt(2.0 / paths));
  EXPECT_NEAR(i2w.cov(), plain(6, 1), 3 * i2w.cov_se());
}

TEST(Compensator, EnergyMatchesQuadrature) {
  const ExpSumKernel k = build_systematic(RoughKernelSpec(0.07), 20, 0.041);
  for (double t : {0.002, 0.041, 1.0}) {
    boost::math::quadrature::tanh_sinh<double> ts;
    const double q = ts.integrate([&](double s) { return std::pow(expsum_eval(k, s), 2); }, 0.0, t);
    EXPECT_NEAR(expsum_energy(k, t), q, 1e-10 * std::max(1.0, q)) << t;
  }
}

TEST(BergomiSimulator, ZeroVolOfVolIsBlackScholes) {
  BergomiParams p;
  p.eta = 1e-300;  // η must be positive; this is η = 0 to double precision
  const GridSpec grid{0.5, 10};
  const ExpSumKernel k = build_systematic(RoughKernelSpec(p.H), 10, grid.T);
  const BergomiSimulator sim(p, grid, k);
  const CounterRng rng(4);
  const SchemePath path = sim.simulate(rng, 3);
  const FactorDraw d = FactorSampler(k, grid).sample(rng, 3);
  const double rp = std::sqrt(1 - p.rho * p.rho);
  double ls = std::log(p.S0);
  for (int l = 0; l < 10; ++l) {
    EXPECT_NEAR(path.states(l + 1, 1), p.v0, 1e-15);
    const double dwp = std::sqrt(grid.dt()) * rng.normal(3, static_cast<std::uint32_t>(l), 1);
    ls += std::sqrt(p.v0) * (p.rho * d.dW[l] + rp * dwp) - 0.5 * p.v0 * grid.dt();
    EXPECT_NEAR(path.states(l + 1, 0), std::exp(ls), 1e-13);
  }
}

TEST(BergomiSimulator, VarianceIsMartingaleInEveryMode) {
  const BergomiParams p;
  const GridSpec grid{0.041, 20};
  const ExpSumKernel k = build_systematic(RoughKernelSpec(p.H), 20, grid.T);
  const BergomiSimulator modes[] = {BergomiSimulator(p, grid), BergomiSimulator(p, grid, k),
                                    BergomiSimulator::exact_coupled(p, grid, k)};
  const CounterRng rng(1);
  const int paths = 20000;
  for (int m = 0; m < 3; ++m) {
    std::vector<Running> nu(21);
    for (int q = 0; q < paths; ++q) {
      const SchemePath s = modes[m].simulate(rng, static_cast<std::uint64_t>(q));
      for (int l = 0; l <= 20; ++l) nu[l].add(s.states(l, 1), 0.0);
    }
    for (int l = 1; l <= 20; ++l) {
      const double mean = nu[l].sx / paths;
      EXPECT_NEAR(mean, p.v0, 3 * std::sqrt(nu[l].var_x() / paths)) << "mode " << m << " l " << l;
    }
  }
}

TEST(BergomiSimulator, NegativeSkewInBothModes) {
  const BergomiParams p;
  const GridSpec grid{0.041, 20};
  for (BergomiMode mode : {BergomiMode::exact, BergomiMode::multifactor}) {
    BergomiModel m;
    m.params = p;
    m.mode = mode;
    const auto smile = implied_smile(prepare(m, grid), 1.0, grid.T, {-0.05, 0.03}, McConfig{20000, 1, 1});
    const double hw_lo = 0.5 * (smile[0].iv_hi - smile[0].iv_lo);
    const double hw_hi = 0.5 * (smile[1].iv_hi - smile[1].iv_lo);
    EXPECT_GT(smile[0].implied_vol - smile[1].implied_vol, hw_lo + hw_hi) << mode_name(mode);
  }
}

TEST(BergomiParams, Validation) {
  BergomiParams p;
  EXPECT_NO_THROW(p.validate());
  EXPECT_NEAR(p.c_bar(), 1.9 * std::sqrt(0.14) * std::tgamma(0.57), 1e-14);
  p.H = 0.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = BergomiParams{};
  p.rho = -1.1;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(ImpliedVol, RoundTrips) {
  EXPECT_NEAR(implied_vol(bs_call(1.0, 1.0, 1.0, 0.2), 1.0, 1.0, 1.0), 0.2, 1e-8);
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> vol(0.05, 1.5), logk(-0.4, 0.4), mat(0.02, 3.0);
  for (int i = 0; i < 500; ++i) {
    const double v = vol(gen), K = std::exp(logk(gen)), T = mat(gen);
    const double price = bs_call(1.0, K, T, v);
    if (price - std::max(1.0 - K, 0.0) < 1e-12) continue;  // no vega left to invert
    EXPECT_NEAR(implied_vol(price, 1.0, K, T), v, 1e-6) << v << ' ' << K << ' ' << T;
  }
}

TEST(ImpliedVol, BoundaryAndErrors) {
  EXPECT_NEAR(implied_vol(0.0, 1.0, 1.2, 1.0), 0.0, 1e-8);
  // deep in the money the price sits on its intrinsic value for every small
  // vol in double precision, so only the price round trip is determined
  EXPECT_NEAR(bs_call(1.0, 0.8, 0.5, implied_vol(0.2, 1.0, 0.8, 0.5)), 0.2, 1e-15);
  EXPECT_THROW(implied_vol(0.19, 1.0, 0.8, 0.5), std::domain_error);
  EXPECT_THROW(implied_vol(1.0, 1.0, 0.8, 0.5), std::domain_error);
  // at-the-money closed form
  const double v = 0.3, T = 0.7;
  EXPECT_NEAR(bs_call(1.0, 1.0, T, v), std::erf(v * std::sqrt(T) / (2 * std::sqrt(2.0))), 1e-14);
}
