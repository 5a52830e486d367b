#include "rvol/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>

#include "rvol/numerics.hpp"

namespace rvol {

void RiemannConfig::validate() const {
  if (n < 1) throw std::invalid_argument("RiemannConfig: n must be >= 1");
  if (!(K > 0.0)) throw std::invalid_argument("RiemannConfig: K must be > 0");
}

void NewtonCotesConfig::validate() const {
  if (n < 1) throw std::invalid_argument("NewtonCotesConfig: n must be >= 1");
  if (!(K > 1.0)) throw std::invalid_argument("NewtonCotesConfig: K must be > 1");
  if (!(beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("NewtonCotesConfig: beta must lie in (0, 1)");
  if (J < 2 || J % 2 != 0) throw std::invalid_argument("NewtonCotesConfig: J must be even and >= 2");
}

void GeometricConfig::validate() const {
  if (n < 1) throw std::invalid_argument("GeometricConfig: n must be >= 1");
  if (!(K > 0.0)) throw std::invalid_argument("GeometricConfig: K must be > 0");
  if (!(A > 1.0)) throw std::invalid_argument("GeometricConfig: A must be > 1");
}

std::vector<Rational> newton_cotes_rational(int J) {
  if (J < 1) throw std::invalid_argument("newton_cotes_rational: J must be >= 1");
  const int m = J + 1;
  // Augmented moment system: row r reads Σ_j (j/J)^r c_j = 1/(r+1).
  std::vector<std::vector<Rational>> a(m, std::vector<Rational>(m + 1));
  for (int r = 0; r < m; ++r) {
    for (int j = 0; j < m; ++j) {
      Rational node(j, J);
      Rational p(1);
      for (int e = 0; e < r; ++e) p *= node;
      a[r][j] = p;
    }
    a[r][m] = Rational(1, r + 1);
  }
  for (int col = 0; col < m; ++col) {
    int pivot = col;
    while (pivot < m && a[pivot][col] == 0) ++pivot;
    if (pivot == m) throw std::runtime_error("newton_cotes_rational: singular moment system");
    std::swap(a[pivot], a[col]);
    for (int r = 0; r < m; ++r) {
      if (r == col || a[r][col] == 0) continue;
      const Rational f = a[r][col] / a[col][col];
      for (int c = col; c <= m; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<Rational> coeffs(m);
  for (int j = 0; j < m; ++j) coeffs[j] = a[j][m] / a[j][j];
  return coeffs;
}

std::vector<double> newton_cotes_coefficients(int J) {
  static std::mutex mutex;
  static std::map<int, std::vector<double>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(J);
  if (it != cache.end()) return it->second;
  std::vector<double> out;
  for (const auto& c : newton_cotes_rational(J)) out.push_back(static_cast<double>(c));
  cache.emplace(J, out);
  return out;
}

namespace {

double node_in(const RoughKernelSpec& spec, double a, double b, NodeRule rule) {
  return rule == NodeRule::midpoint ? 0.5 * (a + b) : barycenter(spec, a, b);
}

// Uniform partition of [0, upper) into n cells with λ_H masses as weights.
void append_riemann(const RoughKernelSpec& spec, int n, double upper, NodeRule rule,
                    std::vector<double>& weights, std::vector<double>& rates) {
  for (int i = 1; i <= n; ++i) {
    const double a = upper * (i - 1) / n;
    const double b = upper * i / n;
    weights.push_back(lambda_mass(spec, a, b));
    rates.push_back(node_in(spec, a, b, rule));
  }
}

}  // namespace

ExpSumKernel build_riemann(const RoughKernelSpec& spec, const RiemannConfig& cfg) {
  cfg.validate();
  std::vector<double> weights;
  std::vector<double> rates;
  append_riemann(spec, cfg.n, cfg.K, cfg.node_rule, weights, rates);
  return ExpSumKernel(weights, rates);
}

ExpSumKernel build_newton_cotes(const RoughKernelSpec& spec, const NewtonCotesConfig& cfg) {
  cfg.validate();
  std::vector<double> weights;
  std::vector<double> rates;
  const double Kb = std::pow(cfg.K, cfg.beta);
  append_riemann(spec, cfg.n, Kb, cfg.node_rule, weights, rates);

  const std::vector<double> c = newton_cotes_coefficients(cfg.J);
  const double width = (cfg.K - Kb) / cfg.n;
  const double scale = spec.c_H() * width;
  const double exponent = -spec.H() - 0.5;
  // Panel endpoints shared by neighbours evaluate to the same double, so an
  // ordered map merges them by summing their weights.
  std::map<double, double> tail;
  for (int i = 1; i <= cfg.n; ++i) {
    for (int j = 0; j <= cfg.J; ++j) {
      const double rho = Kb + width * ((i - 1) + static_cast<double>(j) / cfg.J);
      tail[rho] += scale * c[j] * std::pow(rho, exponent);
    }
  }
  for (const auto& [rho, w] : tail) {
    rates.push_back(rho);
    weights.push_back(w);
  }
  return ExpSumKernel(weights, rates);
}

ExpSumKernel build_simpson(const RoughKernelSpec& spec, const NewtonCotesConfig& cfg) {
  if (cfg.J != 2) throw std::invalid_argument("build_simpson: J must be 2");
  return build_newton_cotes(spec, cfg);
}

ExpSumKernel build_geometric(const RoughKernelSpec& spec, const GeometricConfig& cfg) {
  cfg.validate();
  std::vector<double> weights;
  std::vector<double> rates;
  append_riemann(spec, cfg.n, cfg.K, NodeRule::barycentric, weights, rates);
  double a = cfg.K;
  for (int i = 1; i <= cfg.n; ++i) {
    const double b = cfg.K * std::pow(cfg.A, i);
    weights.push_back(lambda_mass(spec, a, b));
    rates.push_back(barycenter(spec, a, b));
    a = b;
  }
  return ExpSumKernel(weights, rates);
}

OptimizedRatio optimize_A(const RoughKernelSpec& spec, int n, double K, double T,
                          std::pair<double, double> bracket) {
  if (!(bracket.first > 1.0)) throw std::invalid_argument("optimize_A: bracket must start above 1");
  if (!(bracket.first < bracket.second)) throw std::invalid_argument("optimize_A: empty bracket");
  auto objective = [&](double log_a) {
    return l2_error_exact(spec, build_geometric(spec, {n, K, std::exp(log_a)}), T);
  };
  const ScalarMinimum m =
      minimize_scalar(objective, std::log(bracket.first), std::log(bracket.second), 1e-9);
  return OptimizedRatio{std::exp(m.argmin), m.min};
}

Rescaled rescale_xi(const RoughKernelSpec& spec, const ExpSumKernel& k, double T) {
  const InnerProducts ip = expsum_inner_products(spec, k, T);
  if (!(ip.gg > 0.0)) throw std::invalid_argument("rescale_xi: kernel has zero L2 norm");
  const double xi = ip.gG / ip.gg;
  return Rescaled{k.scaled(xi), xi};
}

ExpSumKernel build_systematic(const RoughKernelSpec& spec, int n_total, double T) {
  if (n_total < 2 || n_total % 2 != 0)
    throw std::invalid_argument("build_systematic: n_total must be even and >= 2");
  const int n = n_total / 2;
  const double K = rules::barycentric_K(n);
  const OptimizedRatio opt = optimize_A(spec, n, K, T);
  return rescale_xi(spec, build_geometric(spec, {n, K, opt.A_star}), T).kernel;
}

Truncated truncate_factors(const ExpSumKernel& k, double T, int N, double beta) {
  if (!(T > 0.0) || N < 1) throw std::invalid_argument("truncate_factors: need T > 0 and N >= 1");
  if (!(beta > 0.0)) throw std::invalid_argument("truncate_factors: beta must be > 0");
  const double dt = T / N;
  const double threshold = std::pow(dt, beta);
  const Eigen::Index n = k.size();
  // tail[m] = Σ_{i ≥ m} α_i e^{-ρ_i dt} (0-based), tail[n] = 0.
  std::vector<double> tail(static_cast<std::size_t>(n) + 1, 0.0);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    tail[i] = tail[i + 1] + k.weights()[i] * std::exp(-k.rates()[i] * dt);
  }
  int n_tilde = static_cast<int>(n);
  for (Eigen::Index m = 1; m <= n; ++m) {
    if (tail[m] <= threshold) {
      n_tilde = static_cast<int>(m);
      break;
    }
  }
  return Truncated{k.head(n_tilde), n_tilde};
}

namespace rules {

double riemann_midpoint_K(int n) { return std::pow(n, 2.0 / 3.0); }

double barycentric_K(int n) { return std::pow(n, 0.8); }

std::pair<double, double> newton_cotes_midpoint(int n, int J, double H) {
  const double c = 2.0 * (J + 1) * H;
  const double beta = (2.0 * (J + 3) - c) / (3.0 * J + 7 - c);
  const double K = std::pow(n, (3.0 * J + 7 - c) / (3.0 * J + 9 - c));
  return {K, beta};
}

std::pair<double, double> newton_cotes_barycentric(int n, int J, double H) {
  const double beta = (4.0 * J + 12 - 2.0 * H * J) / (5.0 * J + 12 - 2.0 * H * J);
  const double K = std::pow(n, 4.0 / (5.0 * beta + 2.0 * H * (1.0 - beta)));
  return {K, beta};
}

}  // namespace rules

}  // namespace rvol
