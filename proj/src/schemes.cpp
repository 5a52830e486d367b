#include "rvol/schemes.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace rvol {

void GridSpec::validate() const {
  if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("GridSpec: T must be > 0");
  if (N < 1) throw std::invalid_argument("GridSpec: N must be >= 1");
}

void SvePlant::validate() const {
  if (x0.size() < 1) throw std::invalid_argument("SvePlant: empty initial state");
  if (!drift || !diffusion) throw std::invalid_argument("SvePlant: drift and diffusion required");
}

namespace {

void check_noise(const SvePlant& plant, const GridSpec& grid, const Eigen::MatrixXd& dW) {
  plant.validate();
  grid.validate();
  if (dW.cols() != grid.N) throw std::invalid_argument("dW must have N columns");
}

// σ(x) dW, checking the diffusion output shape once per call.
Eigen::VectorXd noise_term(const SvePlant& plant, const Eigen::VectorXd& x, const Eigen::VectorXd& dw) {
  const Eigen::MatrixXd s = plant.diffusion(x);
  if (s.rows() != plant.dim() || s.cols() != dw.size())
    throw std::invalid_argument("diffusion returned a matrix of the wrong shape");
  return s * dw;
}

Eigen::VectorXd drift_term(const SvePlant& plant, const Eigen::VectorXd& x) {
  Eigen::VectorXd b = plant.drift(x);
  if (b.size() != plant.dim()) throw std::invalid_argument("drift returned a vector of the wrong size");
  return b;
}

}  // namespace

SchemePath volterra_euler(const SvePlant& plant, const ScalarKernel& G1, const ScalarKernel& G2,
                          const GridSpec& grid, const Eigen::MatrixXd& dW) {
  check_noise(plant, grid, dW);
  if (!G1 || !G2) throw std::invalid_argument("volterra_euler: kernels required");
  const int N = grid.N;
  const Eigen::Index d = plant.dim();
  const double dt = grid.dt();

  std::vector<double> g1(N), g2(N);
  for (int k = 1; k <= N; ++k) {
    g1[k - 1] = G1(k * dt);
    g2[k - 1] = G2(k * dt);
  }

  Eigen::MatrixXd states(N + 1, d);
  states.row(0) = plant.x0.transpose();
  std::vector<Eigen::VectorXd> drift_hist, noise_hist;
  drift_hist.reserve(N);
  noise_hist.reserve(N);
  for (int k = 0; k < N; ++k) {
    const Eigen::VectorXd x = states.row(k).transpose();
    drift_hist.push_back(drift_term(plant, x) * dt);
    noise_hist.push_back(noise_term(plant, x, dW.col(k)));
    Eigen::VectorXd next = plant.x0;
    for (int j = 0; j <= k; ++j) {
      next += g1[k - j] * drift_hist[j] + g2[k - j] * noise_hist[j];
    }
    states.row(k + 1) = next.transpose();
  }
  return SchemePath{grid, std::move(states), std::nullopt};
}

SchemePath multifactor_euler(const SvePlant& plant, const ExpSumKernel& k1, const ExpSumKernel& k2,
                             const GridSpec& grid, const Eigen::MatrixXd& dW, bool store_factors) {
  check_noise(plant, grid, dW);
  const bool same = k1 == k2;
  if (!same && k1.rates() != k2.rates())
    throw std::invalid_argument("multifactor_euler: kernels must share their rates");
  const int N = grid.N;
  const Eigen::Index d = plant.dim();
  const Eigen::Index n = k1.size();
  const double dt = grid.dt();
  const Eigen::ArrayXd decay = (-k1.rates().array() * dt).exp();

  // Factor i of component c lives in column i of row c.
  Eigen::MatrixXd fx = Eigen::MatrixXd::Zero(d, n);
  Eigen::MatrixXd fy = Eigen::MatrixXd::Zero(d, same ? 0 : n);
  const Eigen::Index width = same ? n * d : 2 * n * d;

  Eigen::MatrixXd states(N + 1, d);
  states.row(0) = plant.x0.transpose();
  std::optional<Eigen::MatrixXd> factors;
  if (store_factors) factors = Eigen::MatrixXd::Zero(N + 1, width);

  for (int k = 0; k < N; ++k) {
    const Eigen::VectorXd x = states.row(k).transpose();
    const Eigen::VectorXd b = drift_term(plant, x) * dt;
    const Eigen::VectorXd s = noise_term(plant, x, dW.col(k));
    Eigen::VectorXd next = plant.x0;
    if (same) {
      fx = ((fx.colwise() + (b + s)).array().rowwise() * decay.transpose()).matrix();
      next += fx * k1.weights();
    } else {
      fx = ((fx.colwise() + b).array().rowwise() * decay.transpose()).matrix();
      fy = ((fy.colwise() + s).array().rowwise() * decay.transpose()).matrix();
      next += fx * k1.weights() + fy * k2.weights();
    }
    states.row(k + 1) = next.transpose();
    if (factors) {
      factors->row(k + 1).head(n * d) = Eigen::Map<const Eigen::RowVectorXd>(fx.data(), n * d);
      if (!same) factors->row(k + 1).tail(n * d) = Eigen::Map<const Eigen::RowVectorXd>(fy.data(), n * d);
    }
  }
  return SchemePath{grid, std::move(states), std::move(factors)};
}

}  // namespace rvol
