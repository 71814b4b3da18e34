#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace fwerlim::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsageError = 2,
  kModelError = 3,
};

enum class Command { Cutoffs, Decide, Estimate, Sweep, Limit };

/// Everything one invocation needs. Grids are lists; single-valued commands
/// use the first entry.
struct ExperimentConfig {
  Command command = Command::Limit;
  std::vector<std::string> procedures;  // cutoffs: the family; decide: one procedure
  std::string direction;                // "stepdown" / "stepup"; empty = family default
  std::vector<std::size_t> n;
  std::vector<double> rho;
  std::string matrix_path;
  std::vector<double> alpha;
  std::vector<std::size_t> n_false;
  std::vector<double> false_fraction;
  std::vector<double> mu;
  std::string mu_path;
  std::string metric = "fwer";
  std::size_t replicates = 100000;
  std::uint64_t seed = 20240101;
  std::string output;  // empty = stdout
  std::string pvalues_path;
  std::string cutoffs_path;
  bool check_validity = false;
  std::size_t grid_points = 10000;
  double tolerance = 1e-10;
  unsigned threads = 0;  // 0 = $FWERLIM_THREADS or hardware concurrency
};

/// Executes a parsed configuration. Diagnostics go to `err`; the return value
/// is one of ExitCode.
int run(const ExperimentConfig& config, std::ostream& out, std::ostream& err);

/// Parses flags (and an optional --config TOML file, overridden by flags), then runs.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// File formats.

/// One p-value per line; blank lines ignored.
std::vector<double> read_value_file(const std::string& path);

/// First line n, then n rows of n whitespace-separated entries.
struct MatrixFile {
  std::size_t n = 0;
  std::vector<double> entries;
};
MatrixFile read_matrix_file(const std::string& path);

}  // namespace fwerlim::cli
