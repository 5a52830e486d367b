#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "rvol/bergomi.hpp"
#include "rvol/rng.hpp"
#include "rvol/schemes.hpp"

namespace rvol {

struct McConfig {
  std::int64_t paths = 100000;
  std::uint64_t seed = 1;
  int workers = 1;

  void validate() const;
};

struct McReport {
  double mean = 0.0;
  double half_width_95 = 0.0;
  std::int64_t paths = 0;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  std::string descriptor;

  std::string to_json() const;
};

struct Payoff {
  enum class Kind { euro_call, lookback_call };
  Kind kind = Kind::euro_call;
  double strike = 1.0;

  static Payoff euro_call(double K) { return {Kind::euro_call, K}; }
  static Payoff lookback_call(double K) { return {Kind::lookback_call, K}; }
  /// `spot` holds S at t_0..t_N.
  double operator()(const Eigen::VectorXd& spot) const;
  std::string name() const;
};

enum class HestonScheme {
  volterra,
  multifactor,
  multifactor_truncated,
  hybrid,
  integrated_volterra,
  integrated_multifactor
};

enum class BergomiMode { exact, multifactor };

struct HestonModel {
  HestonParams params;
  double H = 0.1;
  HestonScheme scheme = HestonScheme::multifactor_truncated;
  /// Total factor count of the systematic kernel (n in the kernel tables).
  int n = 100;
  /// Replaces the systematic kernel when set (truncation still applies
  /// for the truncated schemes).
  std::optional<ExpSumKernel> kernel;
};

struct BergomiModel {
  BergomiParams params;
  BergomiMode mode = BergomiMode::multifactor;
  int n = 20;
  std::optional<ExpSumKernel> kernel;
  /// Exact mode only: run on the Brownian path the multifactor mode sees
  /// for the same seed, so the two modes can be compared path by path.
  bool coupled = false;
};

using ModelDescriptor = std::variant<HestonModel, BergomiModel>;

std::string scheme_name(HestonScheme s);
std::string mode_name(BergomiMode m);
HestonScheme parse_heston_scheme(const std::string& s);
BergomiMode parse_bergomi_mode(const std::string& s);
std::string describe(const ModelDescriptor& d);

/// Layout of the random numbers a model consumes: steps × components.
struct StreamShape {
  int steps = 0;
  int components = 0;
  bool operator==(const StreamShape&) const = default;
};

/// A model with its kernels and factorizations built once. spot_path is
/// safe to call concurrently.
struct PreparedModel {
  std::string descriptor;
  StreamShape shape;
  /// Number of exponential factors actually simulated (0 if none).
  int factors = 0;
  std::function<SchemePath(const CounterRng&, std::uint64_t)> state_path;
  /// S at t_0..t_N.
  std::function<Eigen::VectorXd(const CounterRng&, std::uint64_t)> spot_path;
};

PreparedModel prepare(const ModelDescriptor& d, const GridSpec& grid);

McReport price(const ModelDescriptor& d, const Payoff& payoff, const GridSpec& grid, const McConfig& cfg);
std::vector<McReport> price_many(const PreparedModel& m, const std::vector<Payoff>& payoffs,
                                 const McConfig& cfg);

struct PairedDiff {
  double diff_mean = 0.0;
  double diff_half_width = 0.0;
};

/// E[payoff_A - payoff_B] with both models driven by the same normals.
PairedDiff paired_compare(const PreparedModel& a, const PreparedModel& b, const Payoff& payoff,
                          const McConfig& cfg);
PairedDiff paired_compare(const ModelDescriptor& a, const ModelDescriptor& b, const Payoff& payoff,
                          const GridSpec& grid, const McConfig& cfg);

struct SmilePoint {
  double k = 0.0;  ///< log-strike, K = S0 e^k
  double price = 0.0;
  double half_width = 0.0;
  double implied_vol = 0.0;
  /// Implied vols of price ∓ half_width; NaN when outside the arbitrage bounds.
  double iv_lo = 0.0;
  double iv_hi = 0.0;
};

/// Call prices for strikes S0 e^k from one set of paths, with implied vols.
std::vector<SmilePoint> implied_smile(const PreparedModel& m, double S0, double T,
                                      const std::vector<double>& log_strikes, const McConfig& cfg);

/// log(ζ_n / ζ_2n) / (2H log 2)
double rate_estimator_gamma_hat(double zeta_n, double zeta_2n, double H);

}  // namespace rvol
