#include "rvol/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace rvol {

void QuadTolerance::validate() const {
  if (!(abs_tol > 0.0)) throw std::invalid_argument("QuadTolerance: abs_tol must be > 0");
  if (!(rel_tol > 0.0)) throw std::invalid_argument("QuadTolerance: rel_tol must be > 0");
  if (max_subdivisions < 1)
    throw std::invalid_argument("QuadTolerance: max_subdivisions must be >= 1");
}

double gamma_fn(double a) {
  if (!(a > 0.0)) throw std::domain_error("gamma_fn: argument must be positive");
  return std::tgamma(a);
}

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// γ(a,x) by the power series e^{-x} x^a Σ x^k / (a (a+1) ... (a+k)).
double incomplete_gamma_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int k = 0; k < 1000; ++k) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x));
}

// Γ(a,x) by the modified Lentz continued fraction.
double upper_incomplete_gamma_cf(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x)) * h;
}

}  // namespace

double lower_incomplete_gamma(double a, double x) {
  if (!(a > 0.0)) throw std::domain_error("lower_incomplete_gamma: a must be positive");
  if (!(x >= 0.0)) throw std::domain_error("lower_incomplete_gamma: x must be nonnegative");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return std::tgamma(a);
  if (x < a + 1.0) return incomplete_gamma_series(a, x);
  return std::tgamma(a) - upper_incomplete_gamma_cf(a, x);
}

ScalarMinimum minimize_scalar(const std::function<double(double)>& f, double lo, double hi,
                              double tol) {
  if (!(lo < hi)) throw std::invalid_argument("minimize_scalar: require lo < hi");
  if (!(tol > 0.0)) throw std::invalid_argument("minimize_scalar: tol must be > 0");

  constexpr int kMaxIter = 200;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;

  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < kMaxIter && (b - a) > tol; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }

  ScalarMinimum best = fc < fd ? ScalarMinimum{c, fc} : ScalarMinimum{d, fd};
  // A minimum sitting on the bracket boundary is never evaluated by the
  // interior probes; compare against the ends explicitly.
  for (double x : {lo, hi}) {
    const double fx = f(x);
    if (fx < best.min) best = {x, fx};
  }
  return best;
}

double integrate(const std::function<double(double)>& f, double lo, double hi,
                 const QuadTolerance& tol) {
  tol.validate();
  if (!(lo < hi)) throw std::invalid_argument("integrate: require lo < hi");

  boost::math::quadrature::tanh_sinh<double> integrator(
      static_cast<std::size_t>(tol.max_subdivisions));
  double error = 0.0;
  double l1 = 0.0;
  std::size_t levels = 0;
  // Boost's tolerance is relative; the absolute target is checked below.
  const double value =
      integrator.integrate(f, lo, hi, tol.rel_tol, &error, &l1,
                           &levels);
  if (!std::isfinite(value)) {
    throw QuadratureError("integrate: non-finite result", value, error);
  }
  const double target = std::max(tol.abs_tol, tol.rel_tol * std::abs(value));
  // tanh-sinh reports the difference between the last two levels, which
  // overstates the true error once the rule has converged; accept a result
  // whose estimate is within the L1-scaled round-off floor.
  const double floor = 100.0 * kEps * l1;
  if (error > target && error > floor) {
    // The estimate can stay above target on converged, mildly irregular
    // integrands. Accept if an independent Gauss-Kronrod pass agrees.
    double gk_error = 0.0;
    const double gk = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, lo, hi, static_cast<unsigned>(tol.max_subdivisions), tol.rel_tol, &gk_error);
    if (std::isfinite(gk) && std::abs(gk - value) <= target) return value;
    std::ostringstream os;
    os << "integrate: no convergence after " << levels << " refinements (error estimate "
       << error << ", target " << target << ")";
    throw QuadratureError(os.str(), value, error);
  }
  return value;
}

Eigen::MatrixXd psd_factorize(const Eigen::MatrixXd& S) {
  if (S.rows() != S.cols()) throw std::invalid_argument("psd_factorize: matrix must be square");
  const Eigen::Index n = S.rows();
  if (n == 0) return Eigen::MatrixXd(0, 0);
  if ((S - S.transpose()).norm() > 1e-12 * S.norm())
    throw std::invalid_argument("psd_factorize: matrix must be symmetric");

  // Plain Cholesky loses positivity on numerically rank-deficient inputs
  // (Cauchy-like factor covariances), so take the clipped eigen square root
  // A and recover the triangular factor from A^T = QR: A A^T = R^T R.
  const Eigen::MatrixXd sym = 0.5 * (S + S.transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) throw NotPsdError("psd_factorize: eigen solver failed");
  const Eigen::VectorXd& d = eig.eigenvalues();
  const double scale = std::max(d.cwiseAbs().maxCoeff(), sym.diagonal().cwiseAbs().maxCoeff());
  if (d.minCoeff() < -1e-6 * scale) {
    std::ostringstream os;
    os << "matrix not PSD within tolerance (eigenvalue " << d.minCoeff() << ")";
    throw NotPsdError(os.str());
  }
  const Eigen::MatrixXd A = eig.eigenvectors() * d.cwiseMax(0.0).cwiseSqrt().asDiagonal();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(A.transpose());
  Eigen::MatrixXd L = qr.matrixQR().triangularView<Eigen::Upper>().toDenseMatrix().transpose();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (L(j, j) < 0.0) L.col(j) = -L.col(j);
  }
  return L;
}

Eigen::MatrixXd block_psd_factorize(const Eigen::MatrixXd& S, Eigen::Index lead) {
  if (S.rows() != S.cols()) throw std::invalid_argument("block_psd_factorize: matrix must be square");
  const Eigen::Index n = S.rows();
  if (lead < 0 || lead > n) throw std::invalid_argument("block_psd_factorize: bad lead size");
  if ((S - S.transpose()).norm() > 1e-12 * S.norm())
    throw std::invalid_argument("block_psd_factorize: matrix must be symmetric");
  const Eigen::Index m = n - lead;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd schur = S.bottomRightCorner(m, m);
  if (lead > 0) {
    const Eigen::LLT<Eigen::MatrixXd> llt(S.topLeftCorner(lead, lead));
    if (llt.info() != Eigen::Success) throw NotPsdError("block_psd_factorize: leading block not positive definite");
    const Eigen::MatrixXd L = llt.matrixL();
    B.topLeftCorner(lead, lead) = L;
    // Rows of the trailing block regressed on the leading normals.
    const Eigen::MatrixXd C = L.triangularView<Eigen::Lower>().solve(S.topRightCorner(lead, m)).transpose();
    B.bottomLeftCorner(m, lead) = C;
    schur -= C * C.transpose();
  }
  if (m > 0) {
    schur = 0.5 * (schur + schur.transpose());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(schur);
    if (eig.info() != Eigen::Success) throw NotPsdError("block_psd_factorize: eigen solver failed");
    const Eigen::VectorXd& d = eig.eigenvalues();
    const double scale = std::max(d.cwiseAbs().maxCoeff(), S.diagonal().cwiseAbs().maxCoeff());
    if (d.minCoeff() < -1e-6 * scale) {
      std::ostringstream os;
      os << "matrix not PSD within tolerance (eigenvalue " << d.minCoeff() << ")";
      throw NotPsdError(os.str());
    }
    B.bottomRightCorner(m, m) = eig.eigenvectors() * d.cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }
  return B;
}

}  // namespace rvol
