#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "rvol/cli.hpp"
#include "rvol/kernel.hpp"

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run_tool(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + RVOL_TOOL_PATH + std::string(" ") + args + " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t got;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("rvol_cli_test_" + std::to_string(::getpid()) + "_" + name);
}

}  // namespace

TEST(Cli, KernelSystematicReport) {
  const Result r = run_tool("kernel --method systematic --H 0.05 --n 80 --T 1");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j.at("l2").get<double>(), 0.084, 0.0084);
  EXPECT_EQ(j.at("factors").get<int>(), 80);
  EXPECT_TRUE(j.contains("A_star"));
  EXPECT_TRUE(j.contains("xi_star"));
}

TEST(Cli, KernelGeometricAndCsv) {
  const auto csv = temp_file("k.csv");
  const Result r = run_tool("kernel --method geometric --A 3 --n 50 --H 0.05 --out " + csv.string());
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j.at("zeta").get<double>(), 0.01120, 0.05 * 0.01120);
  const rvol::ExpSumKernel k = rvol::read_kernel_csv(csv);
  EXPECT_EQ(k.size(), 100);
  std::filesystem::remove(csv);
}

TEST(Cli, KernelSingleFactorCsv) {
  const auto csv = temp_file("one.csv");
  ASSERT_EQ(run_tool("kernel --method riemann-mid --n 1 --K 1 --out " + csv.string()).code, 0);
  std::ifstream in(csv);
  std::stringstream ss;
  ss << in.rdbuf();
  const auto rows = parse_csv(ss.str());
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"alpha", "rho"}));
  EXPECT_EQ(std::stod(rows[1][1]), 0.5);
  std::filesystem::remove(csv);
}

TEST(Cli, KernelConfigFile) {
  const auto cfg = temp_file("cfg.json");
  std::ofstream(cfg) << R"({"method": "riemann-bary", "H": 0.25, "n": 50})";
  const Result r = run_tool("kernel --config " + cfg.string());
  ASSERT_EQ(r.code, 0);
  EXPECT_NEAR(nlohmann::json::parse(r.out).at("zeta").get<double>(), 0.0413, 0.02 * 0.0413);
  // command-line flags win over the file
  const Result over = run_tool("kernel --config " + cfg.string() + " --H 0.45");
  EXPECT_EQ(nlohmann::json::parse(over.out).at("H").get<double>(), 0.45);
  std::ofstream(cfg) << R"({"method": "riemann-bary", "colour": 1})";
  EXPECT_NE(run_tool("kernel --config " + cfg.string()).code, 0);
  std::filesystem::remove(cfg);
}

TEST(Cli, DeterministicTables) {
  const Result t2 = run_tool("table T2");
  ASSERT_EQ(t2.code, 0);
  const auto rows = parse_csv(t2.out);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].back(), "gamma_hat");
  for (int i = 1; i <= 3; ++i) EXPECT_NEAR(std::stod(rows[i].back()), 0.8, 0.005);
  const Result t6 = run_tool("table T6");
  ASSERT_EQ(t6.code, 0);
  EXPECT_EQ(parse_csv(t6.out).size(), 7u);
  EXPECT_EQ(run_tool("table T1").out, run_tool("table T1").out);
}

TEST(Cli, MonteCarloTablePassThrough) {
  const Result r = run_tool("table T7 --paths 2000 --max-N 20");
  ASSERT_EQ(r.code, 0);
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 1u + 2 * 3);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"N", "scheme", "mean", "half_width_95", "seconds"}));
  // 2000 paths: roughly 7x the 10^5 half-width
  EXPECT_GT(std::stod(rows[1][3]), 1e-3);
}

TEST(Cli, PriceIsReproducible) {
  const std::string args = "price --model heston --scheme multifactor-truncated --N 20 --paths 1 --seed 5";
  const auto a = nlohmann::json::parse(run_tool(args).out);
  const auto b = nlohmann::json::parse(run_tool(args).out);
  EXPECT_EQ(a.at("mean"), b.at("mean"));
  EXPECT_EQ(a.at("half_width_95").get<double>(), 0.0);
  const auto c = nlohmann::json::parse(run_tool("--workers 2 price --N 20 --paths 3000").out);
  const auto d = nlohmann::json::parse(run_tool("price --N 20 --paths 3000", "RVOL_WORKERS=3").out);
  const auto e = nlohmann::json::parse(run_tool("price --N 20 --paths 3000").out);
  EXPECT_EQ(c.at("mean"), e.at("mean"));
  EXPECT_EQ(d.at("mean"), e.at("mean"));
}

TEST(Cli, SmileRows) {
  const Result r = run_tool("smile --points 1 --kmin 0 --paths 2000");
  ASSERT_EQ(r.code, 0);
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"mode", "k", "price", "ci_halfwidth", "implied_vol", "iv_lo", "iv_hi"}));
  EXPECT_EQ(rows[1][0], "exact");
  EXPECT_EQ(rows[2][0], "multifactor");
  EXPECT_EQ(std::stod(rows[1][1]), 0.0);
}

TEST(Cli, FlatSmileWithoutVolOfVol) {
  const Result r = run_tool("smile --eta 1e-12 --points 3 --paths 20000");
  ASSERT_EQ(r.code, 0);
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 7u);
  // deep in the money vega is tiny, so compare against the vol band rather than a fixed width
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double lo = std::stod(rows[i][5]), hi = std::stod(rows[i][6]);
    EXPECT_TRUE(std::isnan(lo) || lo <= 0.235) << i;
    EXPECT_GE(hi, 0.235) << i;
    EXPECT_NEAR(std::stod(rows[i][4]), 0.235, 0.02) << i;
  }
}

TEST(Cli, PathDump) {
  const Result h = run_tool("path-dump --model heston --scheme integrated-volterra --N 8");
  ASSERT_EQ(h.code, 0);
  const auto rows = parse_csv(h.out);
  ASSERT_EQ(rows.size(), 10u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"t", "Y", "X", "M", "M_perp"}));
  const Result b = run_tool("path-dump --model bergomi");
  ASSERT_EQ(b.code, 0);
  const auto brows = parse_csv(b.out);
  ASSERT_EQ(brows.size(), 22u);
  EXPECT_EQ(std::stod(brows[1][2]), 0.235 * 0.235);
}

TEST(Cli, BadInputsFail) {
  EXPECT_NE(run_tool("table T11").code, 0);
  EXPECT_NE(run_tool("price --paths 0").code, 0);
  EXPECT_NE(run_tool("price --model heston --scheme milstein --paths 10").code, 0);
  EXPECT_NE(run_tool("kernel --method systematic --n 7").code, 0);
  EXPECT_NE(run_tool("smile --model heston").code, 0);
  EXPECT_NE(run_tool("").code, 0);
}

TEST(Cli, TableIds) {
  EXPECT_TRUE(rvol::cli::is_table_id("T1"));
  EXPECT_TRUE(rvol::cli::is_table_id("T10"));
  EXPECT_FALSE(rvol::cli::is_table_id("T0"));
  EXPECT_FALSE(rvol::cli::is_table_id("T01"));
  EXPECT_FALSE(rvol::cli::is_table_id("t3"));
}
