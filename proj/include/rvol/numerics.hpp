#pragma once

#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace rvol {

struct QuadTolerance {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  int max_subdivisions = 15;

  void validate() const;
};

/// Raised when adaptive quadrature stops before meeting its tolerance.
/// Carries the best estimate reached so callers can still inspect it.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double best_estimate, double error_estimate)
      : std::runtime_error(what), best_estimate_(best_estimate), error_estimate_(error_estimate) {}

  double best_estimate() const noexcept { return best_estimate_; }
  double error_estimate() const noexcept { return error_estimate_; }

 private:
  double best_estimate_;
  double error_estimate_;
};

class NotPsdError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double gamma_fn(double a);

/// Lower incomplete gamma γ(a,x) = ∫_0^x s^{a-1} e^{-s} ds (unnormalized).
///
/// Series expansion for x < a+1, Lentz continued fraction for the upper tail
/// otherwise. Relative accuracy is about 1e-14 for a in (0, 2].
double lower_incomplete_gamma(double a, double x);

struct ScalarMinimum {
  double argmin;
  double min;
};

/// Golden-section search on [lo, hi]. Stops when the bracket is narrower than
/// tol or after 200 iterations. For non-unimodal f the result is a local
/// minimizer; the endpoints are included in the comparison so monotone
/// objectives return the boundary.
ScalarMinimum minimize_scalar(const std::function<double(double)>& f, double lo, double hi,
                              double tol);

/// Adaptive tanh-sinh quadrature. Integrable endpoint singularities such as
/// s^β with β > -1 at either end are handled natively.
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 const QuadTolerance& tol = {});

/// Lower-triangular L with L Lᵀ ≈ S for a symmetric, nearly PSD matrix.
///
/// Rank-deficient input is fine. Eigenvalues down to -1e-6·max|eigenvalue|
/// are clipped to zero, lower ones throw NotPsdError.
Eigen::MatrixXd psd_factorize(const Eigen::MatrixXd& S);

/// B with B Bᵀ ≈ S whose first `lead` rows only involve the first `lead`
/// columns: Cholesky of the leading block (which must be positive definite),
/// then a symmetric eigen square root of the Schur complement. Suited to
/// nearly singular trailing blocks where plain Cholesky breaks down.
/// Eigenvalues down to -1e-6·max|eigenvalue| are clipped to zero, lower
/// ones throw NotPsdError.
Eigen::MatrixXd block_psd_factorize(const Eigen::MatrixXd& S, Eigen::Index lead);

}  // namespace rvol
