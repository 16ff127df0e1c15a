#pragma once

// Optimization problems of individual agents. A prosumer model covers a
// window of consecutive hours starting from a given state; the same
// variables serve the centralized model, price response and forecast-driven
// bidding, which differ only in their objective terms.

#include "mies/qp.hpp"
#include "mies/scenario.hpp"

#include <variant>

namespace mies {

/// Energy content of a prosumer's storages and flexible demands at the start
/// of `hour`.
struct ProsumerState {
  int hour = 0;
  std::vector<double> storage_energy;  // per storage, MWh
  std::vector<double> flex_energy;     // per demand, MWh served so far (0 if inflexible)
  bool operator==(const ProsumerState&) const = default;
};

ProsumerState initial_state(const ProsumerSpec& p);

/// Costs only: carrier purchases, no electricity price.
struct CooptObjective {};

/// Electricity bought and sold at a price forecast, one value per window hour.
struct ForecastObjective {
  Series price;
};

/// Price response with the augmented penalty rho/2 (p - (previous - imbalance))^2.
struct AdmmObjective {
  Series price;
  double rho = 0.0;
  Series previous;
  Series imbalance;
};

using ObjectiveMode = std::variant<CooptObjective, ForecastObjective, AdmmObjective>;

/// Hour `hour` of a series; hours past the horizon wrap around.
inline double at_hour(const Series& s, int hour) { return s[hour % static_cast<int>(s.size())]; }

/// Dispatch of every prosumer asset over a window.
struct ProsumerSchedule {
  Series net_power;                     // p, positive when feeding in
  std::vector<Series> converter_input;  // per converter: fuel x or grid draw p^con
  Series solar_thermal;                 // empty without a collector
  std::vector<Series> charge;           // per storage
  std::vector<Series> discharge;
  std::vector<Series> energy;           // per storage, at the end of each hour
  std::vector<Series> flex_energy;      // per demand, cumulative; empty if inflexible
  bool operator==(const ProsumerSchedule&) const = default;

  int length() const { return static_cast<int>(net_power.size()); }
  /// Flexible consumption in window hour k (r^F or p^F).
  double flex_rate(std::size_t d, int k, const ProsumerState& start) const;
  /// State at the start of window hour k+1.
  ProsumerState state_after(int k, const ProsumerState& start) const;
};

/// Variable handles of one prosumer inside a Problem.
struct ProsumerVars {
  int start = 0;
  int length = 0;
  std::vector<qp::VarId> net;
  std::vector<std::vector<qp::VarId>> input;  // [converter][k]
  std::vector<qp::VarId> solar;
  std::vector<std::vector<qp::VarId>> charge, discharge, energy;  // [storage][k]
  std::vector<std::vector<qp::VarId>> flex;                       // [demand][k]
  std::vector<qp::RowId> net_rows;
};

/// Adds the physics of prosumer `p` for window hours state.hour ..
/// state.hour + length - 1 together with its carrier costs. Past the last
/// scenario hour data wraps around and flexible demand stays at its total.
ProsumerVars add_prosumer(qp::Problem& problem, const Scenario& s, const ProsumerSpec& p,
                          const ProsumerState& state, int length);

/// Adds -price_k * p_k for every window hour.
void add_price_terms(qp::Problem& problem, const ProsumerVars& v, const Series& price);

/// Adds rho/2 (x_k - (previous_k - imbalance_k))^2 in minimization form.
void add_penalty_terms(qp::Problem& problem, const std::vector<qp::VarId>& x, double rho,
                       const Series& previous, const Series& imbalance);

struct ProsumerProblem {
  qp::Problem problem;
  ProsumerVars vars;
};

/// The prosumer's own optimization over its window, objective per `mode`.
ProsumerProblem build_prosumer_problem(const Scenario& s, const ProsumerSpec& p,
                                       const ProsumerState& state, int length,
                                       const ObjectiveMode& mode);

/// Whole-horizon convenience overload starting from the initial state.
ProsumerProblem build_prosumer_problem(const Scenario& s, const ProsumerSpec& p,
                                       const ObjectiveMode& mode);

ProsumerSchedule extract_schedule(const qp::Solution& sol, const ProsumerVars& v);

struct GeneratorProblem {
  qp::Problem problem;
  std::vector<qp::VarId> output;
};

/// Maximizes sum_t (price_t - (alpha g + beta)) g over the horizon, minus the
/// ADMM penalty when given.
GeneratorProblem build_generator_problem(const Scenario& s, const GeneratorSpec& g, const Series& price,
                                         const AdmmObjective* penalty = nullptr);

/// Net electric power of an agent from a solved problem: p for prosumers,
/// g for generators.
Series net_power_of(const qp::Solution& sol, const ProsumerVars& v);
Series net_power_of(const qp::Solution& sol, const std::vector<qp::VarId>& generator_output);

/// Electricity an X2P converter makes from `input` (zero for other converters).
double converter_electric_output(const ConverterSpec& c, double input);
/// Heat or hydrogen a converter makes from `input`.
double converter_other_output(const ConverterSpec& c, double input);

/// Largest violations of the prosumer physics found in a schedule.
struct PhysicsAudit {
  double net_power = 0.0;      // net-power identity
  double local_balance = 0.0;  // heat and hydrogen balance
  double storage_dynamics = 0.0;
  double envelope = 0.0;       // storage and flexible-energy envelopes, asset limits
  double flex_total = 0.0;     // end-of-horizon flexible energy, when the window reaches it
  double simultaneous = 0.0;   // max over hours of min(charge, discharge)
};

PhysicsAudit audit_schedule(const Scenario& s, const ProsumerSpec& p, const ProsumerState& start,
                            const ProsumerSchedule& sched);

}  // namespace mies
