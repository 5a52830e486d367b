#pragma once

#include <array>
#include <cstdint>

namespace rvol {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Stateless generator: every (path, step, component) maps to its own
/// counter, so draws do not depend on how paths are split across workers.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  /// Uniform in the open interval (0, 1), 53 random bits.
  double uniform(std::uint64_t path, std::uint32_t step, std::uint32_t comp) const;
  double normal(std::uint64_t path, std::uint32_t step, std::uint32_t comp) const;

 private:
  std::uint64_t seed_;
};

/// Standard normal quantile.
double normal_quantile(double u);

}  // namespace rvol
