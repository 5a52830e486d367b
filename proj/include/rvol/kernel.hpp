#pragma once

#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace rvol {

/// The fractional kernel G(t) = t^{H-1/2} / Γ(H+1/2) and its Laplace
/// measure λ_H(dρ) = c_H ρ^{-H-1/2} dρ, with c_H = 1/(Γ(H+1/2) Γ(1/2-H)).
class RoughKernelSpec {
 public:
  explicit RoughKernelSpec(double hurst);

  double H() const noexcept { return hurst_; }
  double c_H() const noexcept { return c_h_; }
  /// Γ(H+1/2).
  double gamma_h() const noexcept { return gamma_h_; }

 private:
  double hurst_;
  double gamma_h_;
  double c_h_;
};

/// Ĝ(t) = Σ α_i e^{-ρ_i t} with α_i ≥ 0 and 0 ≤ ρ_1 < ... < ρ_n.
class ExpSumKernel {
 public:
  ExpSumKernel(Eigen::VectorXd weights, Eigen::VectorXd rates);
  ExpSumKernel(const std::vector<double>& weights, const std::vector<double>& rates);
  ExpSumKernel(std::initializer_list<double> weights, std::initializer_list<double> rates)
      : ExpSumKernel(std::vector<double>(weights), std::vector<double>(rates)) {}

  Eigen::Index size() const noexcept { return weights_.size(); }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  const Eigen::VectorXd& rates() const noexcept { return rates_; }

  /// First `count` factors (count in [1, size()]).
  ExpSumKernel head(Eigen::Index count) const;
  /// All weights multiplied by `factor` (> 0).
  ExpSumKernel scaled(double factor) const;

  bool operator==(const ExpSumKernel& other) const;

 private:
  Eigen::VectorXd weights_;
  Eigen::VectorXd rates_;
};

/// Covariance of (∫_0^t e^{-ρ_i(t-s)} dW_s)_{i≤n} together with the
/// fractional integral ∫_0^t G(t-s) dW_s as the last component.
struct JointCovariance {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd rates;
  double H;
  double t;
};

struct InnerProducts {
  double gg;  ///< ∫_0^T Ĝ²
  double gG;  ///< ∫_0^T Ĝ G
  double GG;  ///< ∫_0^T G²
};

double rough_kernel_eval(const RoughKernelSpec& spec, double t);
double expsum_eval(const ExpSumKernel& k, double t);

/// λ_H([a, b)) = c_H (b^{1/2-H} - a^{1/2-H}) / (1/2-H).
double lambda_mass(const RoughKernelSpec& spec, double a, double b);

/// λ_H-weighted mean of ρ over [a, b].
double barycenter(const RoughKernelSpec& spec, double a, double b);

/// Upper bound ½ (∫_K^∞ ρ^{-1/2} λ_H(dρ))² on the truncation error r(K).
double truncation_bound_rK(const RoughKernelSpec& spec, double K);

/// ∫_0^t e^{-s u} du = (1 - e^{-s t}) / s, equal to t at s = 0.
double exp_pair_integral(double s, double t);

/// ∫_0^t e^{-ρ u} G(u) du = ρ^{-H-1/2} γ(H+1/2, ρ t) / Γ(H+1/2),
/// equal to t^{H+1/2} / ((H+1/2) Γ(H+1/2)) at ρ = 0.
double exp_fractional_integral(const RoughKernelSpec& spec, double rho, double t);

/// ∫_0^t G² = t^{2H} / (2H Γ(H+1/2)²).
double fractional_energy(const RoughKernelSpec& spec, double t);

JointCovariance build_joint_covariance(const RoughKernelSpec& spec, std::span<const double> rates,
                                       double t);
JointCovariance build_joint_covariance(const RoughKernelSpec& spec, const Eigen::VectorXd& rates,
                                       double t);

/// ζ = ∫_0^t (G - Ĝ)², evaluated as vᵀ Σ v with v = (α, -1).
double l2_error_exact(const RoughKernelSpec& spec, const ExpSumKernel& k, double t);

/// sqrt((T/N) Σ_{k=1}^N (Ĝ(t_k) - G(t_k))²) on t_k = kT/N.
double l2_error_discrete(const RoughKernelSpec& spec, const ExpSumKernel& k, double T, int N);

InnerProducts expsum_inner_products(const RoughKernelSpec& spec, const ExpSumKernel& k, double T);

// CSV with header `alpha,rho`, one factor per row, 17 significant digits.
void write_kernel_csv(std::ostream& out, const ExpSumKernel& k);
void write_kernel_csv(const std::filesystem::path& path, const ExpSumKernel& k);
ExpSumKernel read_kernel_csv(std::istream& in);
ExpSumKernel read_kernel_csv(const std::filesystem::path& path);

}  // namespace rvol
