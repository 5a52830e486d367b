#include "rvol/bergomi.hpp"

#include <cmath>
#include <stdexcept>

#include "rvol/numerics.hpp"

namespace rvol {

void BergomiParams::validate() const {
  if (!(S0 > 0.0 && v0 > 0.0 && eta > 0.0))
    throw std::invalid_argument("BergomiParams: S0, v0, eta must be > 0");
  if (!(std::abs(rho) <= 1.0)) throw std::invalid_argument("BergomiParams: |rho| must be <= 1");
  if (!(H > 0.0 && H < 0.5)) throw std::invalid_argument("BergomiParams: H must lie in (0, 1/2)");
}

double BergomiParams::c_bar() const { return eta * std::sqrt(2.0 * H) * gamma_fn(H + 0.5); }

FactorSampler::FactorSampler(const ExpSumKernel& k, const GridSpec& grid) : k_(k), grid_(grid) {
  grid_.validate();
  const Eigen::Index n = k_.size();
  const double dt = grid_.dt();
  const Eigen::VectorXd& r = k_.rates();
  cov_.resize(n + 1, n + 1);
  cov_(0, 0) = dt;
  for (Eigen::Index i = 0; i < n; ++i) {
    cov_(0, i + 1) = cov_(i + 1, 0) = exp_pair_integral(r[i], dt);
    for (Eigen::Index j = 0; j <= i; ++j) {
      cov_(i + 1, j + 1) = cov_(j + 1, i + 1) = exp_pair_integral(r[i] + r[j], dt);
    }
  }
  factor_ = block_psd_factorize(cov_, 1);
  decay_ = (-r.array() * dt).exp();
}

FactorDraw FactorSampler::sample(const CounterRng& rng, std::uint64_t path) const {
  const int N = grid_.N;
  const Eigen::Index n = k_.size();
  FactorDraw out{Eigen::MatrixXd(N, n), Eigen::VectorXd(N)};
  Eigen::VectorXd z(n + 1);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  for (int l = 0; l < N; ++l) {
    const auto step = static_cast<std::uint32_t>(l);
    z[0] = rng.normal(path, step, 0);
    for (Eigen::Index i = 0; i < n; ++i) z[i + 1] = rng.normal(path, step, static_cast<std::uint32_t>(2 + i));
    const Eigen::VectorXd x = factor_ * z;
    out.dW[l] = x[0];
    f = decay_.cwiseProduct(f) + x.tail(n);
    out.factors.row(l) = f.transpose();
  }
  return out;
}

double fractional_cross_covariance(double H, double s, double t) {
  if (!(H > 0.0 && H < 0.5)) throw std::invalid_argument("fractional_cross_covariance: bad H");
  if (!(s > 0.0 && t > 0.0)) throw std::invalid_argument("fractional_cross_covariance: times must be > 0");
  const double lo = std::min(s, t);
  const double d = std::abs(t - s);
  const double e = H - 0.5;
  if (d == 0.0) return std::pow(lo, 2.0 * H) / (2.0 * H);
  // With u the distance to min(s,t), the integrand u^e (u+d)^e is singular at
  // u = 0; v = u^a absorbs u^e du = dv / a.
  const double a = H + 0.5;
  return integrate([&](double v) { return std::pow(std::pow(v, 1.0 / a) + d, e); }, 0.0, std::pow(lo, a)) / a;
}

Eigen::MatrixXd fractional_covariance(double H, const GridSpec& grid) {
  if (!(H > 0.0 && H < 0.5)) throw std::invalid_argument("fractional_covariance: H must lie in (0, 1/2)");
  grid.validate();
  const int N = grid.N;
  const double a = H + 0.5;
  Eigen::MatrixXd cov(2 * N, 2 * N);
  for (int l = 1; l <= N; ++l) {
    const double tl = grid.t(l);
    for (int m = 1; m <= N; ++m) {
      const double tm = grid.t(m);
      const double lo = std::min(tl, tm);
      cov(l - 1, m - 1) = lo;
      // Cov(I_l, W_m)
      const double c = (std::pow(tl, a) - std::pow(tl - lo, a)) / a;
      cov(N + l - 1, m - 1) = c;
      cov(m - 1, N + l - 1) = c;
      if (m <= l) {
        const double v = fractional_cross_covariance(H, tl, tm);
        cov(N + l - 1, N + m - 1) = cov(N + m - 1, N + l - 1) = v;
      }
    }
  }
  return cov;
}

FractionalSampler::FractionalSampler(double H, const GridSpec& grid) : H_(H), grid_(grid) {
  cov_ = fractional_covariance(H, grid_);
  factor_ = block_psd_factorize(cov_, grid_.N);
}

FractionalDraw FractionalSampler::sample(const CounterRng& rng, std::uint64_t path) const {
  const int N = grid_.N;
  Eigen::VectorXd z(2 * N);
  for (int l = 0; l < N; ++l) {
    const auto step = static_cast<std::uint32_t>(l);
    z[l] = rng.normal(path, step, 0);
    z[N + l] = rng.normal(path, step, 2);
  }
  const Eigen::VectorXd x = factor_ * z;
  FractionalDraw out{x.tail(N), Eigen::VectorXd(N)};
  double prev = 0.0;
  for (int l = 0; l < N; ++l) {
    out.dW[l] = x[l] - prev;
    prev = x[l];
  }
  return out;
}

CoupledFractionalSampler::CoupledFractionalSampler(double H, const ExpSumKernel& k, const GridSpec& grid)
    : factors_(k, grid) {
  const int N = grid.N;
  const Eigen::VectorXd& w = k.weights();
  const Eigen::VectorXd& r = k.rates();
  const Eigen::MatrixXd frac = fractional_covariance(H, grid);
  const double a = H + 0.5;
  cov_.resize(3 * N, 3 * N);
  cov_.topLeftCorner(N, N) = frac.topLeftCorner(N, N);
  cov_.bottomRightCorner(N, N) = frac.bottomRightCorner(N, N);
  cov_.block(2 * N, 0, N, N) = frac.bottomLeftCorner(N, N);
  cov_.block(0, 2 * N, N, N) = frac.topRightCorner(N, N);
  for (int l = 1; l <= N; ++l) {
    const double tl = grid.t(l);
    for (int m = 1; m <= N; ++m) {
      const double tm = grid.t(m);
      const double lo = std::min(tl, tm);
      // Cov(W_l, X_m)
      double wx = 0.0;
      for (Eigen::Index i = 0; i < k.size(); ++i) wx += w[i] * std::exp(-r[i] * (tm - lo)) * exp_pair_integral(r[i], lo);
      cov_(l - 1, N + m - 1) = cov_(N + m - 1, l - 1) = wx;
      // Cov(X_l, X_m)
      if (m <= l) {
        double xx = 0.0;
        for (Eigen::Index i = 0; i < k.size(); ++i)
          for (Eigen::Index j = 0; j < k.size(); ++j)
            xx += w[i] * w[j] * std::exp(-r[i] * (tl - lo) - r[j] * (tm - lo)) * exp_pair_integral(r[i] + r[j], lo);
        cov_(N + l - 1, N + m - 1) = cov_(N + m - 1, N + l - 1) = xx;
      }
      // Cov(I_l, X_m) = Σ α_i ∫_0^{lo} (t_l - s)^{H-1/2} e^{-ρ_i (t_m - s)} ds
      double ix = 0.0;
      for (Eigen::Index i = 0; i < k.size(); ++i) {
        double v;
        if (l <= m) {
          v = r[i] == 0.0 ? std::pow(tl, a) / a
                          : std::exp(-r[i] * (tm - tl)) * std::pow(r[i], -a) * lower_incomplete_gamma(a, r[i] * tl);
        } else {
          const double d = tl - tm;
          v = integrate([&](double x) { return std::pow(d + x, H - 0.5) * std::exp(-r[i] * x); }, 0.0, tm);
        }
        ix += w[i] * v;
      }
      cov_(2 * N + l - 1, N + m - 1) = cov_(N + m - 1, 2 * N + l - 1) = ix;
    }
  }
  const Eigen::MatrixXd B = block_psd_factorize(cov_, 2 * N);
  // B = [L 0; C R] with L L^T the (W, X) block, so I = C L^{-1} (W, X) + R z.
  const Eigen::MatrixXd L = B.topLeftCorner(2 * N, 2 * N);
  gain_ = L.triangularView<Eigen::Lower>()
              .solve<Eigen::OnTheRight>(B.bottomLeftCorner(N, 2 * N));
  residual_ = B.bottomRightCorner(N, N);
}

FractionalDraw CoupledFractionalSampler::sample(const CounterRng& rng, std::uint64_t path) const {
  const GridSpec& grid = factors_.grid();
  const int N = grid.N;
  const ExpSumKernel& k = factors_.kernel();
  FactorDraw d = factors_.sample(rng, path);
  Eigen::VectorXd lead(2 * N);
  double w = 0.0;
  for (int l = 0; l < N; ++l) {
    w += d.dW[l];
    lead[l] = w;
  }
  lead.tail(N) = d.factors * k.weights();
  Eigen::VectorXd z(N);
  const auto comp = static_cast<std::uint32_t>(2 + k.size());
  for (int l = 0; l < N; ++l) z[l] = rng.normal(path, static_cast<std::uint32_t>(l), comp);
  return FractionalDraw{gain_ * lead + residual_ * z, std::move(d.dW)};
}

FactorDraw sample_factors_exact(const ExpSumKernel& k, const GridSpec& grid, const CounterRng& rng,
                                std::uint64_t path) {
  return FactorSampler(k, grid).sample(rng, path);
}

FractionalDraw sample_fractional_exact(const RoughKernelSpec& spec, const GridSpec& grid,
                                       const CounterRng& rng, std::uint64_t path) {
  return FractionalSampler(spec.H(), grid).sample(rng, path);
}

double expsum_energy(const ExpSumKernel& k, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("expsum_energy: t must be >= 0");
  const Eigen::VectorXd& a = k.weights();
  const Eigen::VectorXd& r = k.rates();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < k.size(); ++i) {
    sum += a[i] * a[i] * exp_pair_integral(2.0 * r[i], t);
    for (Eigen::Index j = 0; j < i; ++j) sum += 2.0 * a[i] * a[j] * exp_pair_integral(r[i] + r[j], t);
  }
  return sum;
}

BergomiSimulator::BergomiSimulator(const BergomiParams& p, const GridSpec& grid,
                                   std::optional<ExpSumKernel> kernel)
    : p_(p), grid_(grid) {
  p_.validate();
  grid_.validate();
  compensator_.resize(grid_.N);
  if (kernel) {
    factors_.emplace(*kernel, grid_);
    const double c = p_.c_bar();
    for (int l = 1; l <= grid_.N; ++l) compensator_[l - 1] = 0.5 * c * c * expsum_energy(*kernel, grid_.t(l));
  } else {
    fractional_.emplace(p_.H, grid_);
    for (int l = 1; l <= grid_.N; ++l)
      compensator_[l - 1] = 0.5 * p_.eta * p_.eta * std::pow(grid_.t(l), 2.0 * p_.H);
  }
}

BergomiSimulator BergomiSimulator::exact_coupled(const BergomiParams& p, const GridSpec& grid,
                                                 const ExpSumKernel& k) {
  BergomiSimulator sim(p, grid);
  sim.fractional_.reset();
  sim.coupled_.emplace(p.H, k, sim.grid_);
  return sim;
}

SchemePath BergomiSimulator::simulate(const CounterRng& rng, std::uint64_t path) const {
  const int N = grid_.N;
  const double dt = grid_.dt();
  Eigen::VectorXd dW;
  Eigen::VectorXd log_nu(N);
  if (factors_) {
    FactorDraw d = factors_->sample(rng, path);
    const Eigen::VectorXd drive = d.factors * factors_->kernel().weights();
    log_nu = p_.c_bar() * drive - compensator_;
    dW = std::move(d.dW);
  } else {
    FractionalDraw d = coupled_ ? coupled_->sample(rng, path) : fractional_->sample(rng, path);
    log_nu = p_.eta * std::sqrt(2.0 * p_.H) * d.fracint - compensator_;
    dW = std::move(d.dW);
  }
  const double rho_perp = std::sqrt(1.0 - p_.rho * p_.rho);
  Eigen::MatrixXd states(N + 1, 2);
  double log_s = std::log(p_.S0);
  double nu = p_.v0;
  states(0, 0) = p_.S0;
  states(0, 1) = nu;
  for (int l = 0; l < N; ++l) {
    const double dw_perp = std::sqrt(dt) * rng.normal(path, static_cast<std::uint32_t>(l), 1);
    log_s += std::sqrt(nu) * (p_.rho * dW[l] + rho_perp * dw_perp) - 0.5 * nu * dt;
    nu = p_.v0 * std::exp(log_nu[l]);
    states(l + 1, 0) = std::exp(log_s);
    states(l + 1, 1) = nu;
  }
  return SchemePath{grid_, std::move(states), std::nullopt};
}

SchemePath simulate_bergomi(const BergomiParams& p, const std::optional<ExpSumKernel>& kernel,
                            const GridSpec& grid, const CounterRng& rng, std::uint64_t path) {
  return BergomiSimulator(p, grid, kernel).simulate(rng, path);
}

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

double bs_call(double S0, double K, double T, double vol) {
  if (!(S0 > 0.0 && K > 0.0 && T > 0.0)) throw std::invalid_argument("bs_call: S0, K, T must be > 0");
  if (!(vol >= 0.0)) throw std::invalid_argument("bs_call: vol must be >= 0");
  if (vol == 0.0) return std::max(S0 - K, 0.0);
  const double sd = vol * std::sqrt(T);
  const double d1 = std::log(S0 / K) / sd + 0.5 * sd;
  return S0 * norm_cdf(d1) - K * norm_cdf(d1 - sd);
}

double implied_vol(double price, double S0, double K, double T) {
  const double lower = std::max(S0 - K, 0.0);
  if (!(price >= lower && price < S0))
    throw std::domain_error("implied_vol: price outside the no-arbitrage bounds");
  double lo = 0.0;
  double hi = 1.0;
  while (bs_call(S0, K, T, hi) < price) {
    hi *= 2.0;
    if (hi > 1e4) throw std::domain_error("implied_vol: no volatility reproduces the price");
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (bs_call(S0, K, T, mid) < price ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace rvol
