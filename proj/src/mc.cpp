#include "rvol/mc.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "rvol/numerics.hpp"
#include "rvol/quadrature.hpp"

namespace rvol {

void McConfig::validate() const {
  if (paths < 1) throw std::invalid_argument("McConfig: paths must be >= 1");
  if (workers < 1) throw std::invalid_argument("McConfig: workers must be >= 1");
}

std::string McReport::to_json() const {
  nlohmann::ordered_json j;
  j["mean"] = mean;
  j["half_width_95"] = half_width_95;
  j["paths"] = paths;
  j["wall_seconds"] = wall_seconds;
  j["seed"] = seed;
  j["descriptor"] = descriptor;
  return j.dump();
}

double Payoff::operator()(const Eigen::VectorXd& spot) const {
  const double s = kind == Kind::euro_call ? spot[spot.size() - 1] : spot.maxCoeff();
  return std::max(s - strike, 0.0);
}

std::string Payoff::name() const {
  return (kind == Kind::euro_call ? "euro_call(" : "lookback_call(") + std::to_string(strike) + ")";
}

std::string scheme_name(HestonScheme s) {
  switch (s) {
    case HestonScheme::volterra: return "volterra";
    case HestonScheme::multifactor: return "multifactor";
    case HestonScheme::multifactor_truncated: return "multifactor-truncated";
    case HestonScheme::hybrid: return "hybrid";
    case HestonScheme::integrated_volterra: return "integrated-volterra";
    case HestonScheme::integrated_multifactor: return "integrated-multifactor";
  }
  return "?";
}

std::string mode_name(BergomiMode m) { return m == BergomiMode::exact ? "exact" : "multifactor"; }

HestonScheme parse_heston_scheme(const std::string& s) {
  for (auto v : {HestonScheme::volterra, HestonScheme::multifactor, HestonScheme::multifactor_truncated,
                 HestonScheme::hybrid, HestonScheme::integrated_volterra, HestonScheme::integrated_multifactor}) {
    if (scheme_name(v) == s) return v;
  }
  throw std::invalid_argument("unknown heston scheme '" + s + "'");
}

BergomiMode parse_bergomi_mode(const std::string& s) {
  if (s == "exact") return BergomiMode::exact;
  if (s == "multifactor") return BergomiMode::multifactor;
  throw std::invalid_argument("unknown bergomi mode '" + s + "'");
}

std::string describe(const ModelDescriptor& d) {
  if (const auto* h = std::get_if<HestonModel>(&d)) {
    return "heston/" + scheme_name(h->scheme) + " H=" + std::to_string(h->H) + " n=" + std::to_string(h->n);
  }
  const auto& b = std::get<BergomiModel>(d);
  return "bergomi/" + mode_name(b.mode) + (b.mode == BergomiMode::exact && b.coupled ? "-coupled" : "") + " H=" + std::to_string(b.params.H) + " n=" + std::to_string(b.n);
}

namespace {

Eigen::VectorXd spot_from_log(const SchemePath& path) { return path.states.col(0).array().exp(); }

PreparedModel prepare_heston(const HestonModel& m, const GridSpec& grid) {
  const HestonParams p = m.params;
  p.validate();
  const RoughKernelSpec spec(m.H);
  const int N = grid.N;
  const double sq = std::sqrt(grid.dt());
  PreparedModel out{describe(m), StreamShape{N, 2}, 0, {}, {}};

  const bool needs_kernel = m.scheme != HestonScheme::volterra && m.scheme != HestonScheme::integrated_volterra;
  std::optional<ExpSumKernel> k;
  if (needs_kernel) {
    k = m.kernel ? *m.kernel : build_systematic(spec, m.n, grid.T);
    if (m.scheme != HestonScheme::multifactor) k = truncate_factors(*k, grid.T, N).kernel;
    out.factors = static_cast<int>(k->size());
  }

  auto brownian = [N, sq](const CounterRng& rng, std::uint64_t path) {
    BrownianIncrements inc{Eigen::VectorXd(N), Eigen::VectorXd(N)};
    for (int s = 0; s < N; ++s) {
      inc.dW[s] = sq * rng.normal(path, static_cast<std::uint32_t>(s), 0);
      inc.dW_perp[s] = sq * rng.normal(path, static_cast<std::uint32_t>(s), 1);
    }
    return inc;
  };
  auto normals = [N](const CounterRng& rng, std::uint64_t path) {
    NormalPairs z{Eigen::VectorXd(N), Eigen::VectorXd(N)};
    for (int s = 0; s < N; ++s) {
      z.Z[s] = rng.normal(path, static_cast<std::uint32_t>(s), 0);
      z.Z_perp[s] = rng.normal(path, static_cast<std::uint32_t>(s), 1);
    }
    return z;
  };

  switch (m.scheme) {
    case HestonScheme::volterra: {
      const Eigen::VectorXd lags = kernel_lags(spec, grid);
      out.state_path = [=](const CounterRng& rng, std::uint64_t path) {
        return heston_volterra_euler(p, lags, grid, brownian(rng, path));
      };
      break;
    }
    case HestonScheme::multifactor:
    case HestonScheme::multifactor_truncated:
      out.state_path = [=, k = *k](const CounterRng& rng, std::uint64_t path) {
        return heston_multifactor_euler(p, k, grid, brownian(rng, path));
      };
      break;
    case HestonScheme::hybrid: {
      out.shape.components = 3;
      const Eigen::Matrix2d L = psd_factorize(hybrid_step_covariance(spec, grid.dt()));
      out.state_path = [=, k = *k](const CounterRng& rng, std::uint64_t path) {
        HybridIncrements inc{Eigen::VectorXd(N), Eigen::VectorXd(N), Eigen::VectorXd(N)};
        for (int s = 0; s < N; ++s) {
          const auto step = static_cast<std::uint32_t>(s);
          const double z0 = rng.normal(path, step, 0);
          const double z2 = rng.normal(path, step, 2);
          inc.dW[s] = L(0, 0) * z0;
          inc.dI[s] = L(1, 0) * z0 + L(1, 1) * z2;
          inc.dW_perp[s] = sq * rng.normal(path, step, 1);
        }
        return heston_hybrid_multifactor(p, spec, k, grid, inc);
      };
      break;
    }
    case HestonScheme::integrated_volterra: {
      const Eigen::VectorXd lags = kernel_lags(spec, grid);
      out.state_path = [=](const CounterRng& rng, std::uint64_t path) {
        return heston_integrated_volterra(p, lags, grid, normals(rng, path));
      };
      break;
    }
    case HestonScheme::integrated_multifactor:
      out.state_path = [=, k = *k](const CounterRng& rng, std::uint64_t path) {
        return heston_integrated_multifactor(p, k, grid, normals(rng, path));
      };
      break;
  }
  out.spot_path = [state = out.state_path](const CounterRng& rng, std::uint64_t path) {
    return spot_from_log(state(rng, path));
  };
  return out;
}

PreparedModel prepare_bergomi(const BergomiModel& m, const GridSpec& grid) {
  const bool coupled = m.mode == BergomiMode::exact && m.coupled;
  std::optional<ExpSumKernel> k;
  if (m.mode == BergomiMode::multifactor || coupled) {
    k = m.kernel ? *m.kernel : build_systematic(RoughKernelSpec(m.params.H), m.n, grid.T);
  }
  std::shared_ptr<const BergomiSimulator> sim;
  StreamShape shape{grid.N, 3};
  if (coupled) {
    sim = std::make_shared<const BergomiSimulator>(BergomiSimulator::exact_coupled(m.params, grid, *k));
    shape.components = 3 + static_cast<int>(k->size());
  } else {
    sim = std::make_shared<const BergomiSimulator>(m.params, grid, k);
    if (k) shape.components = 2 + static_cast<int>(k->size());
  }
  PreparedModel out{describe(m), shape, m.mode == BergomiMode::multifactor ? static_cast<int>(k->size()) : 0, {}, {}};
  out.state_path = [sim](const CounterRng& rng, std::uint64_t path) { return sim->simulate(rng, path); };
  out.spot_path = [sim](const CounterRng& rng, std::uint64_t path) -> Eigen::VectorXd {
    return sim->simulate(rng, path).states.col(0);
  };
  return out;
}

// Running mean and sum of squared deviations; merged with Chan's formula.
struct Moments {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    count += 1.0;
    const double d = x - mean;
    mean += d / count;
    m2 += d * (x - mean);
  }
  void merge(const Moments& o) {
    if (o.count == 0.0) return;
    const double total = count + o.count;
    const double d = o.mean - mean;
    mean += d * o.count / total;
    m2 += o.m2 + d * d * count * o.count / total;
    count = total;
  }
  double half_width() const {
    if (count < 2.0) return 0.0;
    return 1.96 * std::sqrt(m2 / (count - 1.0)) / std::sqrt(count);
  }
};

constexpr std::int64_t kBlock = 1024;

// Evaluates `per_path(path, out)` for every path, accumulating `width`
// statistics per fixed-size block; blocks are merged in order so the result
// does not depend on the worker count.
std::vector<Moments> run_blocks(std::int64_t paths, int workers, std::size_t width,
                                const std::function<void(std::uint64_t, std::vector<double>&)>& per_path) {
  const std::int64_t blocks = (paths + kBlock - 1) / kBlock;
  std::vector<std::vector<Moments>> acc(static_cast<std::size_t>(blocks), std::vector<Moments>(width));
  std::atomic<std::int64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    std::vector<double> values(width);
    try {
      for (std::int64_t b = next++; b < blocks; b = next++) {
        auto& slot = acc[static_cast<std::size_t>(b)];
        const std::int64_t end = std::min(paths, (b + 1) * kBlock);
        for (std::int64_t p = b * kBlock; p < end; ++p) {
          per_path(static_cast<std::uint64_t>(p), values);
          for (std::size_t i = 0; i < width; ++i) slot[i].add(values[i]);
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = blocks;
    }
  };
  const int n_threads = static_cast<int>(std::min<std::int64_t>(workers, blocks));
  if (n_threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<Moments> total(width);
  for (const auto& block : acc) {
    for (std::size_t i = 0; i < width; ++i) total[i].merge(block[i]);
  }
  return total;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

PreparedModel prepare(const ModelDescriptor& d, const GridSpec& grid) {
  grid.validate();
  if (const auto* h = std::get_if<HestonModel>(&d)) return prepare_heston(*h, grid);
  return prepare_bergomi(std::get<BergomiModel>(d), grid);
}

std::vector<McReport> price_many(const PreparedModel& m, const std::vector<Payoff>& payoffs,
                                 const McConfig& cfg) {
  cfg.validate();
  if (payoffs.empty()) throw std::invalid_argument("price_many: no payoffs");
  const CounterRng rng(cfg.seed);
  const auto start = std::chrono::steady_clock::now();
  const auto stats = run_blocks(cfg.paths, cfg.workers, payoffs.size(), [&](std::uint64_t p, std::vector<double>& v) {
    const Eigen::VectorXd spot = m.spot_path(rng, p);
    for (std::size_t i = 0; i < payoffs.size(); ++i) v[i] = payoffs[i](spot);
  });
  const double wall = seconds_since(start);
  std::vector<McReport> out;
  for (std::size_t i = 0; i < payoffs.size(); ++i) {
    out.push_back(McReport{stats[i].mean, stats[i].half_width(), cfg.paths, wall, cfg.seed,
                           m.descriptor + " " + payoffs[i].name()});
  }
  return out;
}

McReport price(const ModelDescriptor& d, const Payoff& payoff, const GridSpec& grid, const McConfig& cfg) {
  return price_many(prepare(d, grid), {payoff}, cfg).front();
}

PairedDiff paired_compare(const PreparedModel& a, const PreparedModel& b, const Payoff& payoff,
                          const McConfig& cfg) {
  cfg.validate();
  if (!(a.shape == b.shape))
    throw std::invalid_argument("paired_compare: models consume differently shaped random streams");
  const CounterRng rng(cfg.seed);
  const auto stats = run_blocks(cfg.paths, cfg.workers, 1, [&](std::uint64_t p, std::vector<double>& v) {
    v[0] = payoff(a.spot_path(rng, p)) - payoff(b.spot_path(rng, p));
  });
  return PairedDiff{stats[0].mean, stats[0].half_width()};
}

PairedDiff paired_compare(const ModelDescriptor& a, const ModelDescriptor& b, const Payoff& payoff,
                          const GridSpec& grid, const McConfig& cfg) {
  return paired_compare(prepare(a, grid), prepare(b, grid), payoff, cfg);
}

std::vector<SmilePoint> implied_smile(const PreparedModel& m, double S0, double T,
                                      const std::vector<double>& log_strikes, const McConfig& cfg) {
  std::vector<Payoff> payoffs;
  for (double k : log_strikes) payoffs.push_back(Payoff::euro_call(S0 * std::exp(k)));
  const auto reports = price_many(m, payoffs, cfg);
  auto iv_or_nan = [&](double price, double K) {
    try {
      return implied_vol(price, S0, K, T);
    } catch (const std::domain_error&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  std::vector<SmilePoint> out;
  for (std::size_t i = 0; i < log_strikes.size(); ++i) {
    const double K = payoffs[i].strike;
    const McReport& r = reports[i];
    out.push_back(SmilePoint{log_strikes[i], r.mean, r.half_width_95, iv_or_nan(r.mean, K),
                             iv_or_nan(r.mean - r.half_width_95, K), iv_or_nan(r.mean + r.half_width_95, K)});
  }
  return out;
}

double rate_estimator_gamma_hat(double zeta_n, double zeta_2n, double H) {
  if (!(zeta_n > 0.0 && zeta_2n > 0.0)) throw std::invalid_argument("gamma_hat: zeta values must be > 0");
  if (!(H > 0.0)) throw std::invalid_argument("gamma_hat: H must be > 0");
  return std::log(zeta_n / zeta_2n) / (2.0 * H * std::log(2.0));
}

}  // namespace rvol
