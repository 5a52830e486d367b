#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

#include "rvol/kernel.hpp"
#include "rvol/rng.hpp"
#include "rvol/schemes.hpp"

namespace rvol {

struct BergomiParams {
  double S0 = 1.0;
  double v0 = 0.235 * 0.235;
  double eta = 1.9;
  double rho = -0.9;
  double H = 0.07;

  void validate() const;
  /// η √(2H) Γ(H + 1/2)
  double c_bar() const;
};

/// F_i(t_l) = ∫_0^{t_l} e^{-ρ_i (t_l - s)} dW_s together with the increments of W.
struct FactorDraw {
  Eigen::MatrixXd factors;  ///< N × n, row l-1 at t_l
  Eigen::VectorXd dW;       ///< N
};

/// I_l = ∫_0^{t_l} (t_l - s)^{H-1/2} dW_s together with the increments of W.
struct FractionalDraw {
  Eigen::VectorXd fracint;  ///< N
  Eigen::VectorXd dW;       ///< N
};

// Normals are drawn as rng.normal(path, step, comp). Component 0 drives W,
// component 1 is reserved for the independent W⊥, components 2.. feed the
// remaining Gaussian coordinates. Both samplers put W first in the
// factorization, so they see the same W for the same (seed, path).

/// Exact per-step sampler: (ΔW, ε_1..ε_n) is a fixed (n+1)-Gaussian and
/// F_i(t_{l+1}) = e^{-ρ_i Δ} F_i(t_l) + ε_i.
class FactorSampler {
 public:
  FactorSampler(const ExpSumKernel& k, const GridSpec& grid);

  FactorDraw sample(const CounterRng& rng, std::uint64_t path) const;
  const Eigen::MatrixXd& step_covariance() const noexcept { return cov_; }
  const ExpSumKernel& kernel() const noexcept { return k_; }
  const GridSpec& grid() const noexcept { return grid_; }

 private:
  ExpSumKernel k_;
  GridSpec grid_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd factor_;
  Eigen::VectorXd decay_;
};

/// Exact joint sampler of (W_{t_1..t_N}, I_1..I_N) from a 2N × 2N covariance.
class FractionalSampler {
 public:
  FractionalSampler(double H, const GridSpec& grid);

  FractionalDraw sample(const CounterRng& rng, std::uint64_t path) const;
  /// Order: W_{t_1..t_N} then I_1..I_N.
  const Eigen::MatrixXd& covariance() const noexcept { return cov_; }
  const GridSpec& grid() const noexcept { return grid_; }

 private:
  double H_;
  GridSpec grid_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd factor_;
};

/// Exact (W, I) sampler that shares its Brownian path with a FactorSampler
/// on the same kernel: the factors are drawn from the same normals, and I is
/// drawn given W and the drive X_l = Σ α_i F_i(t_l) with one extra normal per
/// step (component 2 + n). The law of (W, I) is the exact one; only the
/// coupling with the multifactor run changes.
class CoupledFractionalSampler {
 public:
  CoupledFractionalSampler(double H, const ExpSumKernel& k, const GridSpec& grid);

  FractionalDraw sample(const CounterRng& rng, std::uint64_t path) const;
  /// Order: W_{t_1..t_N}, X_1..X_N, I_1..I_N.
  const Eigen::MatrixXd& covariance() const noexcept { return cov_; }

 private:
  FactorSampler factors_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd gain_;      ///< N × 2N, maps (W, X) to E[I | W, X]
  Eigen::MatrixXd residual_;  ///< N × N
};

/// ∫_0^{min(s,t)} (s-u)^{H-1/2} (t-u)^{H-1/2} du.
double fractional_cross_covariance(double H, double s, double t);

/// Covariance of (W_{t_1..t_N}, I_1..I_N).
Eigen::MatrixXd fractional_covariance(double H, const GridSpec& grid);

FactorDraw sample_factors_exact(const ExpSumKernel& k, const GridSpec& grid, const CounterRng& rng,
                                std::uint64_t path);
FractionalDraw sample_fractional_exact(const RoughKernelSpec& spec, const GridSpec& grid,
                                       const CounterRng& rng, std::uint64_t path);

/// ∫_0^t Ĝ(t-s)² ds for an exponential sum.
double expsum_energy(const ExpSumKernel& k, double t);

/// Rough Bergomi paths. With a kernel, ν is driven by the exponential
/// factors and compensated exactly; without one, the exact fractional
/// sampler is used. Paths carry columns (S, ν).
class BergomiSimulator {
 public:
  BergomiSimulator(const BergomiParams& p, const GridSpec& grid,
                   std::optional<ExpSumKernel> kernel = std::nullopt);

  /// Exact mode on the Brownian path a multifactor run on `k` would see.
  static BergomiSimulator exact_coupled(const BergomiParams& p, const GridSpec& grid, const ExpSumKernel& k);

  SchemePath simulate(const CounterRng& rng, std::uint64_t path) const;
  bool exact_mode() const noexcept { return !factors_; }
  const GridSpec& grid() const noexcept { return grid_; }

 private:
  BergomiParams p_;
  GridSpec grid_;
  std::optional<FactorSampler> factors_;
  std::optional<FractionalSampler> fractional_;
  std::optional<CoupledFractionalSampler> coupled_;
  Eigen::VectorXd compensator_;  ///< half the log-variance at t_1..t_N
};

SchemePath simulate_bergomi(const BergomiParams& p, const std::optional<ExpSumKernel>& kernel,
                            const GridSpec& grid, const CounterRng& rng, std::uint64_t path);

/// Black–Scholes call price with zero rates.
double bs_call(double S0, double K, double T, double vol);

/// Inverts bs_call in vol by bisection; throws outside the no-arbitrage bounds.
double implied_vol(double price, double S0, double K, double T);

}  // namespace rvol
