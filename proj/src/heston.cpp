#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "rvol/schemes.hpp"

namespace rvol {

void HestonParams::validate() const {
  if (!(V0 >= 0.0 && theta >= 0.0 && lam >= 0.0 && sigma >= 0.0))
    throw std::invalid_argument("HestonParams: V0, theta, lam, sigma must be >= 0");
  if (!(std::abs(rho) <= 1.0)) throw std::invalid_argument("HestonParams: |rho| must be <= 1");
  if (!(S0 > 0.0)) throw std::invalid_argument("HestonParams: S0 must be > 0");
}

namespace {

double pos(double x) { return x > 0.0 ? x : 0.0; }

void check_len(const Eigen::VectorXd& v, int N, const char* what) {
  if (v.size() != N) throw std::invalid_argument(std::string(what) + " must have N entries");
}

void check_inputs(const HestonParams& p, const GridSpec& grid, const BrownianIncrements& inc) {
  p.validate();
  grid.validate();
  check_len(inc.dW, grid.N, "dW");
  check_len(inc.dW_perp, grid.N, "dW_perp");
}

void check_inputs(const HestonParams& p, const GridSpec& grid, const NormalPairs& Z) {
  p.validate();
  grid.validate();
  check_len(Z.Z, grid.N, "Z");
  check_len(Z.Z_perp, grid.N, "Z_perp");
}

double log_step(const HestonParams& p, double v, double dt, double dw, double dw_perp) {
  const double vp = pos(v);
  const double rho_perp = std::sqrt(1.0 - p.rho * p.rho);
  return -0.5 * vp * dt + std::sqrt(vp) * (p.rho * dw + rho_perp * dw_perp);
}

// Running max, martingale increments and log-price for the integrated schemes.
struct IntegratedState {
  double xbar = 0.0;
  double M = 0.0;
  double M_perp = 0.0;

  void advance(double x_next, double z, double z_perp) {
    const double prev = xbar;
    xbar = std::max(xbar, x_next);
    const double dq = std::sqrt(xbar - prev);
    M += dq * z;
    M_perp += dq * z_perp;
  }
};

void write_integrated_row(Eigen::MatrixXd& states, int row, const HestonParams& p, double x,
                          const IntegratedState& s) {
  const double rho_perp = std::sqrt(1.0 - p.rho * p.rho);
  states(row, 0) = std::log(p.S0) - 0.5 * s.xbar + p.rho * s.M + rho_perp * s.M_perp;
  states(row, 1) = x;
  states(row, 2) = s.M;
  states(row, 3) = s.M_perp;
}

}  // namespace

Eigen::VectorXd kernel_lags(const RoughKernelSpec& spec, const GridSpec& grid) {
  grid.validate();
  Eigen::VectorXd g(grid.N);
  for (int k = 1; k <= grid.N; ++k) g[k - 1] = rough_kernel_eval(spec, grid.t(k));
  return g;
}

Eigen::VectorXd kernel_lags(const ExpSumKernel& k, const GridSpec& grid) {
  grid.validate();
  Eigen::VectorXd g(grid.N);
  for (int j = 1; j <= grid.N; ++j) g[j - 1] = expsum_eval(k, grid.t(j));
  return g;
}

Eigen::Matrix2d hybrid_step_covariance(const RoughKernelSpec& spec, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("hybrid_step_covariance: dt must be > 0");
  const double a = spec.H() + 0.5;
  Eigen::Matrix2d c;
  c(0, 0) = dt;
  c(0, 1) = c(1, 0) = std::pow(dt, a) / (a * spec.gamma_h());
  c(1, 1) = fractional_energy(spec, dt);
  return c;
}

SchemePath heston_volterra_euler(const HestonParams& p, const RoughKernelSpec& spec,
                                 const GridSpec& grid, const BrownianIncrements& inc) {
  grid.validate();
  return heston_volterra_euler(p, kernel_lags(spec, grid), grid, inc);
}

SchemePath heston_volterra_euler(const HestonParams& p, const Eigen::VectorXd& lags,
                                 const GridSpec& grid, const BrownianIncrements& inc) {
  check_inputs(p, grid, inc);
  check_len(lags, grid.N, "lags");
  const int N = grid.N;
  const double dt = grid.dt();
  Eigen::MatrixXd states(N + 1, 2);
  states(0, 0) = std::log(p.S0);
  states(0, 1) = p.V0;
  std::vector<double> incr(N);
  for (int k = 0; k < N; ++k) {
    const double v = pos(states(k, 1));
    incr[k] = (p.theta - p.lam * v) * dt + p.sigma * std::sqrt(v) * inc.dW[k];
    double next = p.V0;
    for (int j = 0; j <= k; ++j) next += lags[k - j] * incr[j];
    states(k + 1, 1) = next;
    states(k + 1, 0) = states(k, 0) + log_step(p, states(k, 1), dt, inc.dW[k], inc.dW_perp[k]);
  }
  return SchemePath{grid, std::move(states), std::nullopt};
}

SchemePath heston_multifactor_euler(const HestonParams& p, const ExpSumKernel& k,
                                    const GridSpec& grid, const BrownianIncrements& inc,
                                    bool store_factors) {
  check_inputs(p, grid, inc);
  const int N = grid.N;
  const Eigen::Index n = k.size();
  const double dt = grid.dt();
  std::vector<double> decay(n), f(n, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) decay[i] = std::exp(-k.rates()[i] * dt);
  const double* alpha = k.weights().data();

  Eigen::MatrixXd states(N + 1, 2);
  states(0, 0) = std::log(p.S0);
  states(0, 1) = p.V0;
  std::optional<Eigen::MatrixXd> factors;
  if (store_factors) factors = Eigen::MatrixXd::Zero(N + 1, n);
  for (int s = 0; s < N; ++s) {
    const double v = pos(states(s, 1));
    const double incr = (p.theta - p.lam * v) * dt + p.sigma * std::sqrt(v) * inc.dW[s];
    double next = p.V0;
    for (Eigen::Index i = 0; i < n; ++i) {
      f[i] = decay[i] * (f[i] + incr);
      next += alpha[i] * f[i];
    }
    states(s + 1, 1) = next;
    states(s + 1, 0) = states(s, 0) + log_step(p, states(s, 1), dt, inc.dW[s], inc.dW_perp[s]);
    if (factors) {
      for (Eigen::Index i = 0; i < n; ++i) (*factors)(s + 1, i) = f[i];
    }
  }
  return SchemePath{grid, std::move(states), std::move(factors)};
}

SchemePath heston_hybrid_multifactor(const HestonParams& p, const RoughKernelSpec& spec,
                                     const ExpSumKernel& k, const GridSpec& grid,
                                     const HybridIncrements& inc) {
  p.validate();
  grid.validate();
  check_len(inc.dW, grid.N, "dW");
  check_len(inc.dW_perp, grid.N, "dW_perp");
  check_len(inc.dI, grid.N, "dI");
  const int N = grid.N;
  const Eigen::Index n = k.size();
  const double dt = grid.dt();
  const double a = spec.H() + 0.5;
  const double g_int = std::pow(dt, a) / (a * spec.gamma_h());
  std::vector<double> damp(n), decay(n), f(n, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    damp[i] = 1.0 / (1.0 + k.rates()[i] * dt);
    decay[i] = std::exp(-k.rates()[i] * dt);
  }
  const double* alpha = k.weights().data();

  Eigen::MatrixXd states(N + 1, 2);
  states(0, 0) = std::log(p.S0);
  states(0, 1) = p.V0;
  for (int s = 0; s < N; ++s) {
    const double v = pos(states(s, 1));
    const double sv = std::sqrt(v);
    const double drift = p.theta - p.lam * v;
    // The multifactor part uses the factors at t_s, before their update.
    double next = p.V0;
    for (Eigen::Index i = 0; i < n; ++i) next += alpha[i] * decay[i] * f[i];
    next += drift * g_int + p.sigma * sv * inc.dI[s];
    const double incr = drift * dt + p.sigma * sv * inc.dW[s];
    for (Eigen::Index i = 0; i < n; ++i) f[i] = damp[i] * (f[i] + incr);
    states(s + 1, 1) = next;
    states(s + 1, 0) = states(s, 0) + log_step(p, states(s, 1), dt, inc.dW[s], inc.dW_perp[s]);
  }
  return SchemePath{grid, std::move(states), std::nullopt};
}

SchemePath heston_integrated_volterra(const HestonParams& p, const RoughKernelSpec& spec,
                                      const GridSpec& grid, const NormalPairs& Z) {
  grid.validate();
  return heston_integrated_volterra(p, kernel_lags(spec, grid), grid, Z);
}

SchemePath heston_integrated_volterra(const HestonParams& p, const Eigen::VectorXd& lags,
                                      const GridSpec& grid, const NormalPairs& Z) {
  check_inputs(p, grid, Z);
  check_len(lags, grid.N, "lags");
  const int N = grid.N;
  const double dt = grid.dt();
  Eigen::MatrixXd states(N + 1, 4);
  IntegratedState st;
  write_integrated_row(states, 0, p, 0.0, st);
  std::vector<double> incr(N);
  for (int k = 0; k < N; ++k) {
    incr[k] = (p.theta * grid.t(k) - p.lam * st.xbar + p.sigma * st.M) * dt;
    double x = p.V0 * grid.t(k + 1);
    for (int j = 0; j <= k; ++j) x += lags[k - j] * incr[j];
    st.advance(x, Z.Z[k], Z.Z_perp[k]);
    write_integrated_row(states, k + 1, p, x, st);
  }
  return SchemePath{grid, std::move(states), std::nullopt};
}

SchemePath heston_integrated_multifactor(const HestonParams& p, const ExpSumKernel& k,
                                         const GridSpec& grid, const NormalPairs& Z) {
  check_inputs(p, grid, Z);
  const int N = grid.N;
  const Eigen::Index n = k.size();
  const double dt = grid.dt();
  std::vector<double> decay(n), f(n, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) decay[i] = std::exp(-k.rates()[i] * dt);
  const double* alpha = k.weights().data();

  Eigen::MatrixXd states(N + 1, 4);
  IntegratedState st;
  write_integrated_row(states, 0, p, 0.0, st);
  for (int s = 0; s < N; ++s) {
    const double incr = (p.theta * grid.t(s) - p.lam * st.xbar + p.sigma * st.M) * dt;
    double x = p.V0 * grid.t(s + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      f[i] = decay[i] * (f[i] + incr);
      x += alpha[i] * f[i];
    }
    st.advance(x, Z.Z[s], Z.Z_perp[s]);
    write_integrated_row(states, s + 1, p, x, st);
  }
  return SchemePath{grid, std::move(states), std::nullopt};
}

}  // namespace rvol
