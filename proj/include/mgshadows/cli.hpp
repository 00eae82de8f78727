#pragma once

// Command implementations behind the mgshadows executable. Each command
// reads and writes files and reports failures through the library's
// exception types; exit_code_for maps them onto the stable exit codes.

#include <cstdint>
#include <exception>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mgshadows/io.hpp"
#include "mgshadows/shadows.hpp"

namespace mgs::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kInputError = 2, kResourceLimit = 3, kInsufficientSamples = 4 };

// 2 for malformed input, 3 for resource caps, 4 for too few shadows, 1 otherwise.
int exit_code_for(const std::exception& e);

struct RunConfig {
  std::string command;
  std::string state_path, shadows_path, observables_path, slaters_path, out_path;
  int n = 0;
  Ensemble ensemble = Ensemble::haar;
  std::optional<std::uint64_t> seed;  // mandatory for sampling commands
  std::uint64_t samples = 0;
  double eps = 0.1;
  double delta = 0.05;
  std::string grid;  // empty: default grid
  bool include_slow = false;
  int threads = 0;   // 0: MGSHADOWS_THREADS, then hardware concurrency
};

// Variance bound used to plan median-of-means for one observable.
double planning_bound(const io::Observable& o, int threads = 1);

// Median-of-means estimates of tr(O rho) for each observable from a shared
// shadow set. K and L are planned jointly for all observables; throws
// InsufficientSamples when fewer than K * L shadows are available.
std::vector<io::EstimateRecord> estimate_observables(const std::vector<ShadowSample>& shadows,
                                                     const std::vector<io::Observable>& observables,
                                                     double eps, double delta, int threads);

struct DesignCheck {
  int j = 0;                 // tensor power
  double max_deviation = 0;  // entrywise exact twirl vs closed form
  std::size_t entries = 0;   // nonzero entries of the closed form
};

struct DesignReport {
  int n = 0;
  std::vector<DesignCheck> checks;
  double seconds = 0;
  bool pass = false;
};

// Enumerates the signed-permutation group for n <= 2 (ResourceError beyond).
DesignReport verify_design(int n, int threads);

// Each command returns its exit code; `log` receives the human summary.
int cmd_collect(const RunConfig& cfg, std::ostream& log);
int cmd_estimate(const RunConfig& cfg, std::ostream& log);
int cmd_overlap(const RunConfig& cfg, std::ostream& log);
int cmd_variance_table(const RunConfig& cfg, std::ostream& log);
int cmd_verify_design(const RunConfig& cfg, std::ostream& log);

}  // namespace mgs::cli
