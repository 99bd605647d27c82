#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hybridbell::cli {

/// Environment variable naming a default key=value configuration file.
inline constexpr const char* kConfigEnv = "HYBRIDBELL_CONFIG";

enum ExitStatus : int {
  kSuccess = 0,
  kFailure = 1,
  kSpecError = 2,
  kPreconditionFailure = 3,
  kNonConvergence = 4,
};

/// A table of numeric cells, already formatted for output.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

void write_csv(std::ostream& out, const Table& table);
/// Array of objects keyed by column name; cells are emitted as JSON numbers.
void write_json(std::ostream& out, const Table& table);

/**
 * Runs one command. `args` excludes the program name. Data go to `--out` or,
 * without it, to `out`; diagnostics go to `err`. Returns an ExitStatus.
 */
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hybridbell::cli
