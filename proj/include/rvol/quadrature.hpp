#pragma once

#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "rvol/kernel.hpp"

namespace rvol {

enum class NodeRule { midpoint, barycentric };

struct RiemannConfig {
  int n = 1;
  double K = 1.0;
  NodeRule node_rule = NodeRule::midpoint;

  void validate() const;
};

/// Riemann part with n intervals on [0, K^β], composite Newton–Cotes of
/// order J (even) with n panels on [K^β, K].
struct NewtonCotesConfig {
  int n = 1;
  double K = 2.0;
  double beta = 0.5;
  int J = 2;
  NodeRule node_rule = NodeRule::midpoint;

  void validate() const;
};

/// n uniform intervals on [0, K) followed by n geometric intervals
/// [K A^{i-1}, K A^i), i = 1..n; barycentric nodes throughout.
struct GeometricConfig {
  int n = 1;
  double K = 1.0;
  double A = 3.0;

  void validate() const;
};

struct OptimizedRatio {
  double A_star;
  double error;  ///< ζ at A_star
};

struct Rescaled {
  ExpSumKernel kernel;
  double xi_star;
};

struct Truncated {
  ExpSumKernel kernel;
  int n_tilde;
};

using Rational = boost::multiprecision::cpp_rational;

/// Closed Newton–Cotes coefficients c_j (j = 0..J) on [0, 1], obtained by
/// solving Σ_j c_j (j/J)^m = 1/(m+1), m = 0..J, in exact arithmetic.
std::vector<Rational> newton_cotes_rational(int J);
std::vector<double> newton_cotes_coefficients(int J);

ExpSumKernel build_riemann(const RoughKernelSpec& spec, const RiemannConfig& cfg);
ExpSumKernel build_newton_cotes(const RoughKernelSpec& spec, const NewtonCotesConfig& cfg);
/// build_newton_cotes with J = 2; throws if cfg.J != 2.
ExpSumKernel build_simpson(const RoughKernelSpec& spec, const NewtonCotesConfig& cfg);
ExpSumKernel build_geometric(const RoughKernelSpec& spec, const GeometricConfig& cfg);

/// Minimizes A ↦ ζ_T(build_geometric(n, K, A)) by golden section on log A.
OptimizedRatio optimize_A(const RoughKernelSpec& spec, int n, double K, double T,
                          std::pair<double, double> bracket = {1.05, 50.0});

/// Scales the weights by ξ* = ∫Ĝ G / ∫Ĝ², the L2-optimal factor on [0, T].
Rescaled rescale_xi(const RoughKernelSpec& spec, const ExpSumKernel& k, double T);

/// Geometric kernel with n = n_total/2, K = n^{4/5}, optimal A and ξ.
ExpSumKernel build_systematic(const RoughKernelSpec& spec, int n_total, double T);

/// Keeps the first ñ factors, ñ being the smallest count whose discarded tail
/// satisfies Σ_{i>ñ} α_i e^{-ρ_i T/N} ≤ (T/N)^β.
Truncated truncate_factors(const ExpSumKernel& k, double T, int N, double beta = 1.0);

// Asymptotic parameter rules for the convergence tables.
namespace rules {
/// K = n^{2/3} (midpoint Riemann).
double riemann_midpoint_K(int n);
/// K = n^{4/5} (barycentric Riemann, geometric, systematic).
double barycentric_K(int n);
/// (K, β) for composite Newton–Cotes with midpoint nodes on [0, K^β].
std::pair<double, double> newton_cotes_midpoint(int n, int J, double H);
/// (K, β) for composite Newton–Cotes with barycentric nodes on [0, K^β].
std::pair<double, double> newton_cotes_barycentric(int n, int J, double H);
}  // namespace rules

}  // namespace rvol
