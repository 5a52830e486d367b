#include <charconv>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rvol/kernel.hpp"

namespace rvol {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& field, int line) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(field, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != field.size() || field.empty())
    throw std::runtime_error("kernel csv line " + std::to_string(line) + ": bad number '" + field + "'");
  return value;
}

}  // namespace

void write_kernel_csv(std::ostream& out, const ExpSumKernel& k) {
  out << "alpha,rho\n";
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < k.size(); ++i) {
    out << k.weights()[i] << ',' << k.rates()[i] << '\n';
  }
}

void write_kernel_csv(const std::filesystem::path& path, const ExpSumKernel& k) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_kernel_csv(out, k);
}

ExpSumKernel read_kernel_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "alpha,rho")
    throw std::runtime_error("kernel csv: expected header 'alpha,rho'");
  std::vector<double> weights;
  std::vector<double> rates;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error("kernel csv line " + std::to_string(lineno) + ": expected two fields");
    weights.push_back(parse_double(trim(line.substr(0, comma)), lineno));
    rates.push_back(parse_double(trim(line.substr(comma + 1)), lineno));
  }
  return ExpSumKernel(weights, rates);
}

ExpSumKernel read_kernel_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_kernel_csv(in);
}

}  // namespace rvol
