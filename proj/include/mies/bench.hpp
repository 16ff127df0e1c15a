#pragma once

// Experiment harness: the three-way comparison on one scenario and the
// horizon x agents x threads scaling matrix.

#include "mies/admm.hpp"
#include "mies/auction.hpp"

#include <cstdint>
#include <optional>
#include <string_view>

namespace mies {

enum class Method { coopt, admm, auction };

std::string_view to_string(Method m);
std::optional<Method> parse_method(std::string_view name);

/// Settings of the distributed methods; `threads` inside them is overridden
/// per cell.
struct MethodConfig {
  AdmmConfig admm;
  AuctionConfig auction;
};

/// Everything a single method run produces.
struct MethodRun {
  Method method = Method::coopt;
  DispatchResult dispatch;
  double wall_seconds = 0.0;  // around the coordinator call only
  std::optional<AdmmResult> admm;
  std::optional<AuctionResult> auction;
};

MethodRun run_method(Method m, const Scenario& s, const MethodConfig& cfg, int threads);

struct CellResult {
  Method method = Method::coopt;
  int agents = 0;
  int horizon = 0;
  int threads = 1;
  std::uint64_t seed = 0;
  std::uint64_t scenario_hash = 0;
  bool ok = false;
  std::string error;
  double cost = 0.0;
  double wall_seconds = 0.0;  // fastest of the repeats
  int iterations = 0;
  int solve_count = 0;
  bool converged = false;
  double normalized_runtime = 0.0;  // wall time / the method's smallest cell; NaN in comparisons
  std::string price_file;           // relative to the report directory, when written
};

struct CostOrdering {
  double admm_gap = 0.0;     // (admm - coopt) / coopt
  double auction_gap = 0.0;  // (auction - coopt) / coopt
  bool admm_within = false;  // |admm_gap| <= admm tolerance
  bool auction_above = false;  // auction >= coopt
};

struct ComparisonReport {
  std::vector<CellResult> cells;
  std::optional<CostOrdering> ordering;  // comparisons with all three methods
};

/// Runs `methods` on the same scenario. Failures are recorded per cell.
/// With `out`, each method's dispatch CSVs go to out/<method>/ and the cell
/// table to out/comparison.csv. Throws std::invalid_argument on an empty
/// method list.
ComparisonReport run_comparison(const Scenario& s, const MethodConfig& cfg = {},
                                const std::vector<Method>& methods = {Method::coopt, Method::admm, Method::auction},
                                const std::optional<std::filesystem::path>& out = std::nullopt,
                                double admm_tolerance = 0.01);

struct ExperimentMatrix {
  std::vector<Method> methods;
  std::vector<int> horizons;
  std::vector<int> agents;
  std::vector<int> threads;
  std::vector<std::uint64_t> seeds;
  int repeats = 1;  // wall time is the fastest repeat
  MethodConfig config;

  /// Throws std::invalid_argument on an empty axis or invalid entry.
  void validate() const;
};

/// Executes every cell in the order methods, threads, seeds, agents,
/// horizons. Normalized runtime divides by the cell of the same method,
/// thread count and seed with the fewest agent-hours.
ComparisonReport run_scaling_matrix(const ExperimentMatrix& m);

/// One row per cell.
void write_report_csv(const ComparisonReport& r, const std::filesystem::path& file);

}  // namespace mies
