#pragma once

#include <functional>
#include <optional>

#include <Eigen/Dense>

#include "rvol/kernel.hpp"

namespace rvol {

/// Regular grid t_k = k T / N, k = 0..N.
struct GridSpec {
  double T = 1.0;
  int N = 1;

  void validate() const;
  double dt() const noexcept { return T / N; }
  double t(int k) const noexcept { return k * T / N; }
};

/// Coefficients of X_t = x0 + ∫ G1(t-s) b(X_s) ds + ∫ G2(t-s) σ(X_s) dW_s.
struct SvePlant {
  Eigen::VectorXd x0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> drift;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> diffusion;

  Eigen::Index dim() const noexcept { return x0.size(); }
  void validate() const;
};

/// Discretized trajectory. Row k of `states` is the state at t_k.
struct SchemePath {
  GridSpec grid;
  Eigen::MatrixXd states;
  /// Row k holds the factor values at t_k when requested.
  std::optional<Eigen::MatrixXd> factors;
};

using ScalarKernel = std::function<double(double)>;

/// Volterra Euler scheme, O(N²): every step re-sums the full history.
/// `dW` is d × N, column k holding W_{t_{k+1}} - W_{t_k}.
SchemePath volterra_euler(const SvePlant& plant, const ScalarKernel& G1, const ScalarKernel& G2,
                          const GridSpec& grid, const Eigen::MatrixXd& dW);

/// Multifactor Euler scheme, O(nN). When k1 == k2 the single-factor-set
/// recursion is used; otherwise k1 and k2 must share their rates and two
/// factor sets (drift and noise) are propagated.
SchemePath multifactor_euler(const SvePlant& plant, const ExpSumKernel& k1, const ExpSumKernel& k2,
                             const GridSpec& grid, const Eigen::MatrixXd& dW,
                             bool store_factors = false);

// --- rough Heston --------------------------------------------------------

struct HestonParams {
  double V0 = 0.02;
  double theta = 0.02;
  double lam = 0.3;
  double sigma = 0.3;
  double rho = -0.7;
  double S0 = 1.0;

  void validate() const;
};

/// Brownian increments of (W, W⊥) over each step, length N each.
struct BrownianIncrements {
  Eigen::VectorXd dW;
  Eigen::VectorXd dW_perp;
};

/// Per-step (ΔW, ΔW⊥, ΔI) with ΔI = ∫_{t_k}^{t_{k+1}} G(t_{k+1}-s) dW_s.
struct HybridIncrements {
  Eigen::VectorXd dW;
  Eigen::VectorXd dW_perp;
  Eigen::VectorXd dI;
};

/// Standard normals (Z_j, Z⊥_j), j = 1..N stored at index j-1.
struct NormalPairs {
  Eigen::VectorXd Z;
  Eigen::VectorXd Z_perp;
};

/// Kernel values G(t_k), k = 1..N, stored at index k-1.
Eigen::VectorXd kernel_lags(const RoughKernelSpec& spec, const GridSpec& grid);
Eigen::VectorXd kernel_lags(const ExpSumKernel& k, const GridSpec& grid);

/// Exact covariance of (ΔW, ΔI) over one step of length dt.
Eigen::Matrix2d hybrid_step_covariance(const RoughKernelSpec& spec, double dt);

// Heston paths carry columns (Y, V) with Y = log S.

SchemePath heston_volterra_euler(const HestonParams& p, const RoughKernelSpec& spec,
                                 const GridSpec& grid, const BrownianIncrements& inc);
/// Same scheme with precomputed kernel lags (any kernel, e.g. an exponential sum).
SchemePath heston_volterra_euler(const HestonParams& p, const Eigen::VectorXd& lags,
                                 const GridSpec& grid, const BrownianIncrements& inc);

SchemePath heston_multifactor_euler(const HestonParams& p, const ExpSumKernel& k,
                                    const GridSpec& grid, const BrownianIncrements& inc,
                                    bool store_factors = false);

/// Hybrid multifactor scheme (κ = 1): rational factor damping 1/(1+ρ_i dt)
/// and an exact treatment of the most recent step's kernel integral.
SchemePath heston_hybrid_multifactor(const HestonParams& p, const RoughKernelSpec& spec,
                                     const ExpSumKernel& k, const GridSpec& grid,
                                     const HybridIncrements& inc);

// Integrated-variance paths carry columns (Y, X, M, M⊥).

SchemePath heston_integrated_volterra(const HestonParams& p, const RoughKernelSpec& spec,
                                      const GridSpec& grid, const NormalPairs& Z);
SchemePath heston_integrated_volterra(const HestonParams& p, const Eigen::VectorXd& lags,
                                      const GridSpec& grid, const NormalPairs& Z);
SchemePath heston_integrated_multifactor(const HestonParams& p, const ExpSumKernel& k,
                                         const GridSpec& grid, const NormalPairs& Z);

}  // namespace rvol
