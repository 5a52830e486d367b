#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "rvol/cli.hpp"
#include "rvol/mc.hpp"
#include "rvol/quadrature.hpp"

namespace rvol::cli {

namespace {

const double kHursts[] = {0.45, 0.25, 0.05};

double zeta_riemann(double H, int n, bool midpoint) {
  const RoughKernelSpec spec(H);
  RiemannConfig cfg{n, midpoint ? rules::riemann_midpoint_K(n) : rules::barycentric_K(n),
                    midpoint ? NodeRule::midpoint : NodeRule::barycentric};
  return l2_error_exact(spec, build_riemann(spec, cfg), 1.0);
}

double zeta_newton_cotes(double H, int n, bool midpoint) {
  const RoughKernelSpec spec(H);
  const auto [K, beta] = midpoint ? rules::newton_cotes_midpoint(n, 2, H) : rules::newton_cotes_barycentric(n, 2, H);
  NewtonCotesConfig cfg{n, K, beta, 2, midpoint ? NodeRule::midpoint : NodeRule::barycentric};
  return l2_error_exact(spec, build_simpson(spec, cfg), 1.0);
}

void convergence_table(std::ostream& out, int n, double (*zeta)(double, int, bool), bool midpoint) {
  out << "H,n,zeta_n,zeta_2n,gamma_hat\n";
  for (double H : kHursts) {
    const double a = zeta(H, n, midpoint);
    const double b = zeta(H, 2 * n, midpoint);
    out << H << ',' << n << ',' << a << ',' << b << ',' << rate_estimator_gamma_hat(a, b, H) << '\n';
  }
}

void geometric_table(std::ostream& out) {
  out << "H,zeta_50,zeta_200,zeta_400,gamma_hat\n";
  for (double H : kHursts) {
    const RoughKernelSpec spec(H);
    double z[3];
    const int ns[3] = {50, 200, 400};
    for (int i = 0; i < 3; ++i) {
      z[i] = l2_error_exact(spec, build_geometric(spec, {ns[i], rules::barycentric_K(ns[i]), 3.0}), 1.0);
    }
    out << H << ',' << z[0] << ',' << z[1] << ',' << z[2] << ',' << rate_estimator_gamma_hat(z[1], z[2], H)
        << '\n';
  }
}

void systematic_table(std::ostream& out) {
  out << "H,n,A_star,xi_star,l2\n";
  const std::pair<double, int> rows[] = {{0.45, 10}, {0.45, 20}, {0.25, 20}, {0.25, 40}, {0.05, 40}, {0.05, 80}};
  for (const auto& [H, n] : rows) {
    const RoughKernelSpec spec(H);
    const int half = n / 2;
    const double K = rules::barycentric_K(half);
    const OptimizedRatio opt = optimize_A(spec, half, K, 1.0);
    const Rescaled r = rescale_xi(spec, build_geometric(spec, {half, K, opt.A_star}), 1.0);
    out << H << ',' << n << ',' << opt.A_star << ',' << r.xi_star << ','
        << std::sqrt(l2_error_exact(spec, r.kernel, 1.0)) << '\n';
  }
}

void heston_table(std::ostream& out, std::ostream* log, const TableOptions& opt,
                  const std::vector<HestonScheme>& schemes, const Payoff& payoff, int max_N) {
  const double H = 0.1;
  const ExpSumKernel k = build_systematic(RoughKernelSpec(H), 100, 1.0);
  out << "N,scheme,mean,half_width_95,seconds\n";
  for (int N = 10; N <= std::min(max_N, opt.max_steps); N *= 2) {
    for (HestonScheme s : schemes) {
      HestonModel m;
      m.H = H;
      m.scheme = s;
      m.kernel = k;
      const McReport r = price(m, payoff, GridSpec{1.0, N}, McConfig{opt.paths, opt.seed, opt.workers});
      out << N << ',' << scheme_name(s) << ',' << r.mean << ',' << r.half_width_95 << ',' << r.wall_seconds
          << '\n';
      out.flush();
      if (log) *log << "  N=" << N << ' ' << scheme_name(s) << " done in " << r.wall_seconds << "s\n";
    }
  }
}

}  // namespace

bool is_table_id(const std::string& id) {
  if (id.size() < 2 || id[0] != 'T') return false;
  try {
    const int v = std::stoi(id.substr(1));
    return v >= 1 && v <= 10 && id == "T" + std::to_string(v);
  } catch (const std::exception&) {
    return false;
  }
}

void write_table(const std::string& id, const TableOptions& opt, std::ostream& out, std::ostream* log) {
  if (!is_table_id(id)) throw std::invalid_argument("unknown table id '" + id + "'");
  out << std::setprecision(8);
  const std::vector<HestonScheme> vol = {HestonScheme::multifactor_truncated, HestonScheme::volterra,
                                         HestonScheme::hybrid};
  const std::vector<HestonScheme> integrated = {HestonScheme::integrated_multifactor,
                                                HestonScheme::integrated_volterra};
  const int t = std::stoi(id.substr(1));
  switch (t) {
    case 1: convergence_table(out, 50, zeta_riemann, true); break;
    case 2: convergence_table(out, 50, zeta_riemann, false); break;
    case 3: convergence_table(out, 16, zeta_newton_cotes, true); break;
    case 4: convergence_table(out, 16, zeta_newton_cotes, false); break;
    case 5: geometric_table(out); break;
    case 6: systematic_table(out); break;
    case 7: heston_table(out, log, opt, vol, Payoff::euro_call(1.0), 320); break;
    case 8: heston_table(out, log, opt, vol, Payoff::lookback_call(1.0), 320); break;
    case 9: heston_table(out, log, opt, integrated, Payoff::euro_call(1.0), 160); break;
    case 10: heston_table(out, log, opt, integrated, Payoff::lookback_call(1.0), 320); break;
  }
}

}  // namespace rvol::cli
