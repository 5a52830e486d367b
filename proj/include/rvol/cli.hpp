#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace rvol::cli {

struct TableOptions {
  std::int64_t paths = 100000;
  std::uint64_t seed = 1;
  int workers = 1;
  /// Largest N used by the Monte Carlo tables.
  int max_steps = 320;
};

/// Ids T1..T10.
bool is_table_id(const std::string& id);

/// Writes the CSV for one table. Progress notes go to `log` when non-null.
void write_table(const std::string& id, const TableOptions& opt, std::ostream& out, std::ostream* log);

/// Workers from RVOL_WORKERS when set and valid, else `fallback`.
int workers_from_env(int fallback);

/// Entry point of the `rvol` tool; returns the process exit code.
int run(int argc, char** argv);

}  // namespace rvol::cli
