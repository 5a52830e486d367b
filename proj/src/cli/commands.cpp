#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rvol/cli.hpp"
#include "rvol/mc.hpp"
#include "rvol/quadrature.hpp"

namespace rvol::cli {

namespace {

using nlohmann::ordered_json;

struct KernelArgs {
  std::string method = "systematic";
  double H = 0.1;
  int n = 100;
  double T = 1.0;
  double K = 0.0;
  double A = 3.0;
  int J = 2;
  std::string nodes = "bary";
  int N = 160;
  std::string out;
  std::string config;
};

// Fills options the user did not pass on the command line from a JSON object.
void apply_json_config(CLI::App& app, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  const nlohmann::json cfg = nlohmann::json::parse(in);
  if (!cfg.is_object()) throw std::runtime_error("config must be a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    CLI::Option* opt = nullptr;
    try {
      opt = app.get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      throw std::runtime_error("config: unknown key '" + key + "'");
    }
    if (opt->count() > 0) continue;
    const std::string text = value.is_string() ? value.get<std::string>() : value.dump();
    opt->add_result(text);
    opt->run_callback();
  }
}

ExpSumKernel build_kernel(const KernelArgs& a, ordered_json& report) {
  const RoughKernelSpec spec(a.H);
  const bool has_K = a.K > 0.0;
  if (a.method == "riemann-mid" || a.method == "riemann-bary") {
    const bool mid = a.method == "riemann-mid";
    const double K = has_K ? a.K : (mid ? rules::riemann_midpoint_K(a.n) : rules::barycentric_K(a.n));
    report["K"] = K;
    return build_riemann(spec, {a.n, K, mid ? NodeRule::midpoint : NodeRule::barycentric});
  }
  if (a.method == "simpson" || a.method == "newton-cotes") {
    const int J = a.method == "simpson" ? 2 : a.J;
    const bool mid = a.method == "simpson" ? true : a.nodes == "mid";
    if (a.nodes != "mid" && a.nodes != "bary") throw std::invalid_argument("--nodes must be mid or bary");
    auto [K, beta] = mid ? rules::newton_cotes_midpoint(a.n, J, a.H) : rules::newton_cotes_barycentric(a.n, J, a.H);
    if (has_K) K = a.K;
    report["K"] = K;
    report["beta"] = beta;
    report["J"] = J;
    return build_newton_cotes(spec, {a.n, K, beta, J, mid ? NodeRule::midpoint : NodeRule::barycentric});
  }
  if (a.method == "geometric") {
    const double K = has_K ? a.K : rules::barycentric_K(a.n);
    report["K"] = K;
    report["A"] = a.A;
    return build_geometric(spec, {a.n, K, a.A});
  }
  if (a.method == "systematic") {
    if (a.n < 2 || a.n % 2 != 0) throw std::invalid_argument("systematic kernel needs an even n >= 2");
    const int half = a.n / 2;
    const double K = rules::barycentric_K(half);
    const OptimizedRatio opt = optimize_A(spec, half, K, a.T);
    const Rescaled r = rescale_xi(spec, build_geometric(spec, {half, K, opt.A_star}), a.T);
    report["K"] = K;
    report["A_star"] = opt.A_star;
    report["xi_star"] = r.xi_star;
    return r.kernel;
  }
  throw std::invalid_argument("unknown method '" + a.method + "'");
}

int cmd_kernel(const KernelArgs& a) {
  ordered_json report;
  report["method"] = a.method;
  report["H"] = a.H;
  report["n"] = a.n;
  report["T"] = a.T;
  const ExpSumKernel k = build_kernel(a, report);
  const RoughKernelSpec spec(a.H);
  const double zeta = l2_error_exact(spec, k, a.T);
  report["factors"] = k.size();
  report["zeta"] = zeta;
  report["l2"] = std::sqrt(zeta);
  report["N"] = a.N;
  report["l2_discrete"] = l2_error_discrete(spec, k, a.T, a.N);
  const Truncated tr = truncate_factors(k, a.T, a.N);
  report["n_tilde"] = tr.n_tilde;
  report["l2_discrete_truncated"] = l2_error_discrete(spec, tr.kernel, a.T, a.N);
  if (!a.out.empty()) {
    write_kernel_csv(std::filesystem::path(a.out), k);
    report["out"] = a.out;
  }
  std::cout << report.dump(2) << '\n';
  return 0;
}

struct ModelArgs {
  std::string model = "heston";
  std::string scheme;
  double H = 0.1;
  int n = 100;
  int N = 160;
  double T = 1.0;
  // heston
  double V0 = 0.02, theta = 0.02, lam = 0.3, sigma = 0.3;
  // bergomi
  double v0 = 0.235 * 0.235, eta = 1.9;
  double rho = -0.7;
  double S0 = 1.0;
  std::string kernel_csv;
};

struct ModelOptions {
  CLI::Option* H = nullptr;
  CLI::Option* n = nullptr;
  CLI::Option* N = nullptr;
  CLI::Option* T = nullptr;
  CLI::Option* rho = nullptr;
  CLI::Option* scheme = nullptr;
};

ModelOptions add_model_options(CLI::App* app, ModelArgs& a) {
  ModelOptions o;
  app->add_option("--model", a.model, "heston or bergomi")->check(CLI::IsMember({"heston", "bergomi"}));
  o.scheme = app->add_option("--scheme", a.scheme,
                             "heston: volterra, multifactor, multifactor-truncated, hybrid, integrated-volterra, "
                             "integrated-multifactor; bergomi: exact, multifactor");
  o.H = app->add_option("--H", a.H, "Hurst parameter (heston 0.1, bergomi 0.07)");
  o.n = app->add_option("--n", a.n, "factors of the systematic kernel (heston 100, bergomi 20)");
  o.N = app->add_option("--N", a.N, "time steps (heston 160, bergomi 20)");
  o.T = app->add_option("--T", a.T, "maturity (heston 1, bergomi 0.041)");
  o.rho = app->add_option("--rho", a.rho, "spot/vol correlation (heston -0.7, bergomi -0.9)");
  app->add_option("--V0", a.V0, "heston initial variance");
  app->add_option("--theta", a.theta, "heston theta");
  app->add_option("--lam", a.lam, "heston mean reversion");
  app->add_option("--sigma", a.sigma, "heston vol of vol");
  app->add_option("--v0", a.v0, "bergomi initial variance");
  app->add_option("--eta", a.eta, "bergomi vol of vol");
  app->add_option("--S0", a.S0, "initial spot");
  app->add_option("--kernel", a.kernel_csv, "kernel CSV (alpha,rho) replacing the systematic kernel");
  return o;
}

void apply_model_defaults(ModelArgs& a, const ModelOptions& o) {
  if (a.model != "bergomi") return;
  if (o.H->count() == 0) a.H = 0.07;
  if (o.n->count() == 0) a.n = 20;
  if (o.N->count() == 0) a.N = 20;
  if (o.T->count() == 0) a.T = 0.041;
  if (o.rho->count() == 0) a.rho = -0.9;
}

ModelDescriptor make_descriptor(const ModelArgs& a) {
  std::optional<ExpSumKernel> k;
  if (!a.kernel_csv.empty()) k = read_kernel_csv(std::filesystem::path(a.kernel_csv));
  if (a.model == "heston") {
    HestonModel m;
    m.params = HestonParams{a.V0, a.theta, a.lam, a.sigma, a.rho, a.S0};
    m.H = a.H;
    m.scheme = parse_heston_scheme(a.scheme.empty() ? "multifactor-truncated" : a.scheme);
    m.n = a.n;
    m.kernel = k;
    return m;
  }
  BergomiModel m;
  m.params = BergomiParams{a.S0, a.v0, a.eta, a.rho, a.H};
  m.mode = parse_bergomi_mode(a.scheme.empty() ? "multifactor" : a.scheme);
  m.n = a.n;
  m.kernel = k;
  return m;
}

std::int64_t resolve_paths(CLI::Option* paths_opt, std::int64_t paths, bool paper_scale) {
  if (paths_opt->count() > 0) return paths;
  return paper_scale ? 1000000 : 100000;
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
}

}  // namespace

int workers_from_env(int fallback) {
  const char* env = std::getenv("RVOL_WORKERS");
  if (!env) return fallback;
  try {
    const int w = std::stoi(env);
    return w >= 1 ? w : fallback;
  } catch (const std::exception&) {
    return fallback;
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Exponential-sum approximations of rough kernels and multifactor schemes for rough volatility"};
  app.require_subcommand(1);
  int workers = 1;
  auto* workers_opt = app.add_option("--workers", workers, "worker threads (default RVOL_WORKERS or 1)")
                          ->check(CLI::PositiveNumber);
  bool paper_scale = false;
  app.add_flag("--paper-scale", paper_scale, "use 10^6 paths unless --paths is given");

  KernelArgs ka;
  auto* kernel = app.add_subcommand("kernel", "build an exponential-sum kernel and report its L2 errors");
  kernel->add_option("--config", ka.config, "JSON file with any of the options below");
  kernel->add_option("--method", ka.method, "riemann-mid, riemann-bary, simpson, newton-cotes, geometric, systematic");
  kernel->add_option("--H", ka.H, "Hurst parameter");
  kernel->add_option("--n", ka.n, "intervals (total factors for systematic)");
  kernel->add_option("--T", ka.T, "horizon of the L2 error");
  kernel->add_option("--K", ka.K, "truncation level (default: the method's rule)");
  kernel->add_option("--A", ka.A, "geometric ratio");
  kernel->add_option("--J", ka.J, "Newton-Cotes order (even)");
  kernel->add_option("--nodes", ka.nodes, "Newton-Cotes Riemann nodes: mid or bary");
  kernel->add_option("--N", ka.N, "grid size of the discrete L2 error and of the factor truncation");
  kernel->add_option("--out", ka.out, "CSV file for the kernel");

  std::string table_id;
  std::int64_t table_paths = 100000;
  std::uint64_t table_seed = 1;
  std::string table_out;
  int table_max_N = 320;
  auto* table = app.add_subcommand("table", "reproduce one of the tables T1..T10 as CSV");
  table->add_option("id", table_id, "T1..T10")->required();
  auto* table_paths_opt = table->add_option("--paths", table_paths, "Monte Carlo paths")->check(CLI::PositiveNumber);
  table->add_option("--seed", table_seed, "RNG seed");
  table->add_option("--max-N", table_max_N, "largest time grid for the Monte Carlo tables");
  table->add_option("--out", table_out, "CSV file (default stdout)");

  ModelArgs pa;
  std::string payoff = "euro";
  double strike = 1.0;
  std::int64_t price_paths = 100000;
  std::uint64_t price_seed = 1;
  auto* price_cmd = app.add_subcommand("price", "Monte Carlo price; prints a JSON report");
  const ModelOptions price_opts = add_model_options(price_cmd, pa);
  price_cmd->add_option("--payoff", payoff, "euro or lookback")->check(CLI::IsMember({"euro", "lookback"}));
  price_cmd->add_option("--K", strike, "strike");
  auto* price_paths_opt = price_cmd->add_option("--paths", price_paths, "Monte Carlo paths")->check(CLI::PositiveNumber);
  price_cmd->add_option("--seed", price_seed, "RNG seed");

  ModelArgs sa;
  sa.model = "bergomi";
  double kmin = -0.10, kmax = 0.05;
  int points = 16;
  std::int64_t smile_paths = 100000;
  std::uint64_t smile_seed = 1;
  std::string smile_out;
  auto* smile = app.add_subcommand("smile", "rough Bergomi implied-vol smile, exact and multifactor");
  const ModelOptions smile_opts = add_model_options(smile, sa);
  smile->add_option("--kmin", kmin, "smallest log-strike");
  smile->add_option("--kmax", kmax, "largest log-strike");
  smile->add_option("--points", points, "number of log-strikes")->check(CLI::PositiveNumber);
  auto* smile_paths_opt = smile->add_option("--paths", smile_paths, "Monte Carlo paths")->check(CLI::PositiveNumber);
  smile->add_option("--seed", smile_seed, "RNG seed");
  smile->add_option("--out", smile_out, "CSV file (default stdout)");
  bool smile_independent = false;
  smile->add_flag("--independent", smile_independent,
                  "sample the exact mode on its own Brownian path instead of the multifactor one");

  ModelArgs da;
  std::uint64_t dump_path = 0;
  std::uint64_t dump_seed = 1;
  std::string dump_out;
  auto* dump = app.add_subcommand("path-dump", "write one simulated path as CSV");
  const ModelOptions dump_opts = add_model_options(dump, da);
  dump->add_option("--path", dump_path, "path index");
  dump->add_option("--seed", dump_seed, "RNG seed");
  dump->add_option("--out", dump_out, "CSV file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (workers_opt->count() == 0) workers = workers_from_env(1);

    if (kernel->parsed()) {
      if (!ka.config.empty()) apply_json_config(*kernel, ka.config);
      return cmd_kernel(ka);
    }

    if (table->parsed()) {
      TableOptions opt{resolve_paths(table_paths_opt, table_paths, paper_scale), table_seed, workers, table_max_N};
      std::ostringstream csv;
      write_table(table_id, opt, table_out.empty() ? std::cout : csv, &std::cerr);
      if (!table_out.empty()) write_or_print(table_out, csv.str());
      return 0;
    }

    if (price_cmd->parsed()) {
      apply_model_defaults(pa, price_opts);
      const ModelDescriptor d = make_descriptor(pa);
      const Payoff p = payoff == "euro" ? Payoff::euro_call(strike) : Payoff::lookback_call(strike);
      const McConfig cfg{resolve_paths(price_paths_opt, price_paths, paper_scale), price_seed, workers};
      std::cout << price(d, p, GridSpec{pa.T, pa.N}, cfg).to_json() << '\n';
      return 0;
    }

    if (smile->parsed()) {
      if (sa.model != "bergomi") throw std::invalid_argument("smile is defined for the bergomi model only");
      apply_model_defaults(sa, smile_opts);
      if (points > 1 && !(kmin < kmax)) throw std::invalid_argument("smile needs kmin < kmax");
      std::vector<double> ks;
      for (int i = 0; i < points; ++i) ks.push_back(points == 1 ? kmin : kmin + (kmax - kmin) * i / (points - 1));
      const McConfig cfg{resolve_paths(smile_paths_opt, smile_paths, paper_scale), smile_seed, workers};
      const GridSpec grid{sa.T, sa.N};
      std::ostringstream csv;
      csv << std::setprecision(10) << "mode,k,price,ci_halfwidth,implied_vol,iv_lo,iv_hi\n";
      for (const std::string mode : {"exact", "multifactor"}) {
        ModelArgs m = sa;
        m.scheme = mode;
        ModelDescriptor d = make_descriptor(m);
        std::get<BergomiModel>(d).coupled = !smile_independent;
        const auto rows = implied_smile(prepare(d, grid), sa.S0, sa.T, ks, cfg);
        for (const auto& r : rows) {
          csv << mode << ',' << r.k << ',' << r.price << ',' << r.half_width << ',' << r.implied_vol << ','
              << r.iv_lo << ',' << r.iv_hi << '\n';
        }
      }
      write_or_print(smile_out, csv.str());
      return 0;
    }

    if (dump->parsed()) {
      apply_model_defaults(da, dump_opts);
      const GridSpec grid{da.T, da.N};
      const PreparedModel m = prepare(make_descriptor(da), grid);
      const SchemePath path = m.state_path(CounterRng(dump_seed), dump_path);
      std::vector<std::string> cols;
      if (da.model == "bergomi") {
        cols = {"S", "nu"};
      } else if (path.states.cols() == 4) {
        cols = {"Y", "X", "M", "M_perp"};
      } else {
        cols = {"Y", "V"};
      }
      std::ostringstream csv;
      csv << std::setprecision(17) << 't';
      for (const auto& c : cols) csv << ',' << c;
      csv << '\n';
      for (Eigen::Index r = 0; r < path.states.rows(); ++r) {
        csv << grid.t(static_cast<int>(r));
        for (Eigen::Index c = 0; c < path.states.cols(); ++c) csv << ',' << path.states(r, c);
        csv << '\n';
      }
      write_or_print(dump_out, csv.str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace rvol::cli
