#include "rvol/kernel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "rvol/numerics.hpp"

namespace rvol {

namespace {

// Neumaier compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

void require_interval(double a, double b, const char* who) {
  if (!(a >= 0.0)) throw std::invalid_argument(std::string(who) + ": require a >= 0");
  if (!(a < b)) throw std::invalid_argument(std::string(who) + ": require a < b");
}

void require_sorted_rates(std::span<const double> rates) {
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (!(rates[i] >= 0.0)) throw std::invalid_argument("rates must be nonnegative");
    if (i > 0 && !(rates[i] > rates[i - 1]))
      throw std::invalid_argument("rates must be strictly increasing");
  }
}

}  // namespace

RoughKernelSpec::RoughKernelSpec(double hurst) : hurst_(hurst) {
  if (!(hurst > 0.0 && hurst < 0.5))
    throw std::invalid_argument("RoughKernelSpec: H must lie in (0, 1/2)");
  gamma_h_ = gamma_fn(hurst + 0.5);
  c_h_ = 1.0 / (gamma_h_ * gamma_fn(0.5 - hurst));
}

ExpSumKernel::ExpSumKernel(Eigen::VectorXd weights, Eigen::VectorXd rates)
    : weights_(std::move(weights)), rates_(std::move(rates)) {
  if (weights_.size() != rates_.size())
    throw std::invalid_argument("ExpSumKernel: weights and rates differ in length");
  if (weights_.size() < 1) throw std::invalid_argument("ExpSumKernel: at least one factor needed");
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    if (!(weights_[i] >= 0.0) || !std::isfinite(weights_[i]))
      throw std::invalid_argument("ExpSumKernel: weights must be finite and nonnegative");
  }
  require_sorted_rates(std::span<const double>(rates_.data(), static_cast<std::size_t>(rates_.size())));
}

ExpSumKernel::ExpSumKernel(const std::vector<double>& weights, const std::vector<double>& rates)
    : ExpSumKernel(Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size())),
                   Eigen::Map<const Eigen::VectorXd>(rates.data(), static_cast<Eigen::Index>(rates.size()))) {}

ExpSumKernel ExpSumKernel::head(Eigen::Index count) const {
  if (count < 1 || count > size()) throw std::invalid_argument("ExpSumKernel::head: bad count");
  return ExpSumKernel(weights_.head(count), rates_.head(count));
}

ExpSumKernel ExpSumKernel::scaled(double factor) const {
  if (!(factor > 0.0)) throw std::invalid_argument("ExpSumKernel::scaled: factor must be > 0");
  return ExpSumKernel(weights_ * factor, rates_);
}

bool ExpSumKernel::operator==(const ExpSumKernel& other) const {
  return weights_.size() == other.weights_.size() && weights_ == other.weights_ &&
         rates_ == other.rates_;
}

double rough_kernel_eval(const RoughKernelSpec& spec, double t) {
  if (!(t > 0.0)) throw std::domain_error("rough_kernel_eval: kernel is singular at t <= 0");
  return std::pow(t, spec.H() - 0.5) / spec.gamma_h();
}

double expsum_eval(const ExpSumKernel& k, double t) {
  return (k.weights().array() * (-k.rates().array() * t).exp()).sum();
}

double lambda_mass(const RoughKernelSpec& spec, double a, double b) {
  require_interval(a, b, "lambda_mass");
  const double p = 0.5 - spec.H();
  return spec.c_H() * (std::pow(b, p) - std::pow(a, p)) / p;
}

double barycenter(const RoughKernelSpec& spec, double a, double b) {
  require_interval(a, b, "barycenter");
  const double p = 0.5 - spec.H();
  const double q = 1.5 - spec.H();
  return (p / q) * (std::pow(b, q) - std::pow(a, q)) / (std::pow(b, p) - std::pow(a, p));
}

double truncation_bound_rK(const RoughKernelSpec& spec, double K) {
  if (!(K > 0.0)) throw std::invalid_argument("truncation_bound_rK: K must be > 0");
  const double tail = spec.c_H() * std::pow(K, -spec.H()) / spec.H();
  return 0.5 * tail * tail;
}

double exp_pair_integral(double s, double t) {
  if (s == 0.0) return t;
  return -std::expm1(-s * t) / s;
}

double exp_fractional_integral(const RoughKernelSpec& spec, double rho, double t) {
  const double a = spec.H() + 0.5;
  if (rho == 0.0) return std::pow(t, a) / (a * spec.gamma_h());
  return std::pow(rho, -a) * lower_incomplete_gamma(a, rho * t) / spec.gamma_h();
}

double fractional_energy(const RoughKernelSpec& spec, double t) {
  const double H = spec.H();
  return std::pow(t, 2.0 * H) / (2.0 * H * spec.gamma_h() * spec.gamma_h());
}

JointCovariance build_joint_covariance(const RoughKernelSpec& spec, std::span<const double> rates,
                                       double t) {
  if (!(t > 0.0)) throw std::invalid_argument("build_joint_covariance: t must be > 0");
  require_sorted_rates(rates);
  const auto n = static_cast<Eigen::Index>(rates.size());
  Eigen::MatrixXd S(n + 1, n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      S(i, j) = S(j, i) = exp_pair_integral(rates[i] + rates[j], t);
    }
    S(i, n) = S(n, i) = exp_fractional_integral(spec, rates[i], t);
  }
  S(n, n) = fractional_energy(spec, t);
  return JointCovariance{std::move(S), Eigen::Map<const Eigen::VectorXd>(rates.data(), n), spec.H(),
                         t};
}

JointCovariance build_joint_covariance(const RoughKernelSpec& spec, const Eigen::VectorXd& rates,
                                       double t) {
  return build_joint_covariance(
      spec, std::span<const double>(rates.data(), static_cast<std::size_t>(rates.size())), t);
}

double l2_error_exact(const RoughKernelSpec& spec, const ExpSumKernel& k, double t) {
  const JointCovariance cov = build_joint_covariance(spec, k.rates(), t);
  const Eigen::Index n = k.size();
  Eigen::VectorXd v(n + 1);
  v.head(n) = k.weights();
  v[n] = -1.0;
  CompensatedSum acc;
  for (Eigen::Index i = 0; i <= n; ++i) {
    acc.add(v[i] * v[i] * cov.matrix(i, i));
    for (Eigen::Index j = 0; j < i; ++j) acc.add(2.0 * v[i] * v[j] * cov.matrix(i, j));
  }
  return std::max(acc.value(), 0.0);
}

double l2_error_discrete(const RoughKernelSpec& spec, const ExpSumKernel& k, double T, int N) {
  if (!(T > 0.0)) throw std::invalid_argument("l2_error_discrete: T must be > 0");
  if (N < 1) throw std::invalid_argument("l2_error_discrete: N must be >= 1");
  const double dt = T / N;
  CompensatedSum acc;
  for (int i = 1; i <= N; ++i) {
    const double t = i * dt;
    const double diff = expsum_eval(k, t) - rough_kernel_eval(spec, t);
    acc.add(diff * diff);
  }
  return std::sqrt(dt * acc.value());
}

InnerProducts expsum_inner_products(const RoughKernelSpec& spec, const ExpSumKernel& k, double T) {
  if (!(T > 0.0)) throw std::invalid_argument("expsum_inner_products: T must be > 0");
  const auto& a = k.weights();
  const auto& r = k.rates();
  CompensatedSum gg;
  CompensatedSum gG;
  for (Eigen::Index i = 0; i < k.size(); ++i) {
    gg.add(a[i] * a[i] * exp_pair_integral(2.0 * r[i], T));
    for (Eigen::Index j = 0; j < i; ++j) gg.add(2.0 * a[i] * a[j] * exp_pair_integral(r[i] + r[j], T));
    gG.add(a[i] * exp_fractional_integral(spec, r[i], T));
  }
  return InnerProducts{gg.value(), gG.value(), fractional_energy(spec, T)};
}

}  // namespace rvol
