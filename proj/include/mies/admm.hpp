#pragma once

// Price-response coordination: the coordinator broadcasts prices and the
// last imbalance, every agent answers with its best response under an
// augmented penalty, and prices move against the imbalance until it vanishes.

#include "mies/dispatch.hpp"
#include "mies/runtime.hpp"

#include <optional>

namespace mies {

struct AdmmConfig {
  double rho0 = 1.0;  // EUR/MWh per MW
  double primal_tol = 0.1;
  double dual_tol = 0.1;
  int max_iters = 1000;
  double tau_incr = 2.0;
  double tau_decr = 2.0;
  double mu_ratio = 10.0;
  int adapt_iters = 50;  // rho is frozen afterwards so the iteration cannot cycle
  std::optional<Series> initial_price;  // default: flat merit-order estimate
  int threads = runtime::default_threads();

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// One coordinator round.
struct AdmmIterate {
  int iteration = 0;
  Series price;      // lambda^k broadcast in this round
  double rho = 0.0;  // rho^k used for the price update after this round
  Series imbalance;  // I^k per hour
  double primal = 0.0;  // mean over hours of |I^k|
  double dual = 0.0;    // D^k
};

struct AdmmResult {
  DispatchResult dispatch;
  std::vector<AdmmIterate> trace;
  runtime::EventTrace events;
};

/// I_t = (sum_i g_it + sum_j p_jt) / (N + 1), N the number of agents.
/// Throws std::invalid_argument on an empty or short report.
Series compute_imbalance(const std::vector<Series>& generation, const std::vector<Series>& net_power);

/// Mean over hours of |I_t|.
double aggregate_imbalance(const Series& imbalance);

/// lambda_t - rho I_t.
Series update_price(const Series& price, double rho, const Series& imbalance);

/// rho times the 2-norm, over all generator hours, of the change in g - I
/// between consecutive rounds, plus the same for prosumers.
double compute_dual_residual(const std::vector<Series>& generation, const std::vector<Series>& previous_generation,
                             const std::vector<Series>& net_power, const std::vector<Series>& previous_net_power,
                             const Series& imbalance, const Series& previous_imbalance, double rho);

/// Residual balancing: grow rho when the imbalance dominates, shrink it when
/// the dual residual dominates.
double adapt_penalty(double rho, double imbalance, double dual_residual, const AdmmConfig& cfg);

/// Iterates until both residuals are within tolerance (from the second round
/// on) or max_iters is reached; the latter is flagged in the diagnostics.
/// Generators are finally re-dispatched against the last prosumer schedules
/// so the returned dispatch balances exactly.
AdmmResult run_price_response(const Scenario& s, const AdmmConfig& cfg = {});

/// iteration, primal, dual, rho, one row per round.
void write_admm_trace_csv(const std::vector<AdmmIterate>& trace, const std::filesystem::path& file);

}  // namespace mies
