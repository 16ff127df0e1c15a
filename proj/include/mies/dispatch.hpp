#pragma once

// The common output of every coordinator: per-hour dispatch of all agents,
// electricity prices and system cost.

#include "mies/agents.hpp"

#include <filesystem>
#include <stdexcept>

namespace mies {

struct Diagnostics {
  int iterations = 0;   // ADMM rounds or interior point iterations
  int solve_count = 0;  // QP solves performed
  double wall_seconds = 0.0;
  bool converged = true;
  double primal_residual = 0.0;  // final ADMM residuals, zero otherwise
  double dual_residual = 0.0;
};

struct DispatchResult {
  std::string method;
  Series price;                            // EUR/MWh per hour
  std::vector<Series> generation;          // [generator][hour]
  std::vector<ProsumerSchedule> prosumers; // whole horizon from the initial state
  double total_cost = 0.0;
  Diagnostics diagnostics;
};

/// A coordinator could not produce a dispatch (infeasible hour, solver failure).
class CoordinationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Generation cost sum(alpha g^2 + beta g) plus carrier purchases sum(mu x).
/// Throws std::invalid_argument when dimensions do not match the scenario.
double system_cost(const DispatchResult& d, const Scenario& s);

/// Largest |sum_i g + sum_j p| over hours.
double max_imbalance(const DispatchResult& d);

struct DispatchAudit {
  double balance = 0.0;
  PhysicsAudit physics;  // worst value of each field over all prosumers
};

DispatchAudit audit_dispatch(const DispatchResult& d, const Scenario& s);

/// Inflexible electric base demand of all prosumers in `hour` (wrapping).
double base_electric_demand(const Scenario& s, int hour);

/// Price at which truthful generator supply (marginal cost 2 alpha g + beta)
/// meets `demand` in `hour`, clamped to [-ceiling, ceiling].
double merit_order_price(const Scenario& s, int hour, double demand);

/// Least-cost generator dispatch meeting `net_load[t]` (= -sum of prosumer
/// net power) every hour. Throws CoordinationError when infeasible.
std::vector<Series> economic_dispatch(const Scenario& s, const Series& net_load);

/// One CSV per variable family (rows = hours, columns = agents or assets)
/// plus summary.csv.
void write_dispatch_csv(const DispatchResult& d, const Scenario& s, const std::filesystem::path& dir);

}  // namespace mies
