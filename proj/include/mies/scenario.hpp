#pragma once

// Immutable description of a multi-carrier energy system over an hourly
// horizon: generators, prosumers with their assets, and carrier prices.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mies {

enum class Carrier { electricity, heat, hydrogen, methane, biomass, oil, transport };

std::string_view to_string(Carrier c);
std::optional<Carrier> parse_carrier(std::string_view name);

/// Heat and hydrogen are balanced inside each prosumer.
inline bool is_local_carrier(Carrier c) { return c == Carrier::heat || c == Carrier::hydrogen; }

/// Carriers that may hold storage or demand.
inline bool is_balanced_carrier(Carrier c) { return c == Carrier::electricity || is_local_carrier(c); }

/// One value per hour.
using Series = std::vector<double>;

struct GeneratorSpec {
  std::string id;
  double alpha = 0.0;  // EUR/MW^2h
  double beta = 0.0;   // EUR/MWh
  Series g_min;
  Series g_max;
  bool operator==(const GeneratorSpec&) const = default;
};

/// A single-input conversion unit. Output electricity makes it X2P (fuel
/// input); output heat or hydrogen makes it P2X when `uses_electricity` and
/// X2X otherwise. A CHP is an X2P unit with `produces_heat`.
struct ConverterSpec {
  std::string id;
  Carrier input = Carrier::methane;
  Carrier output = Carrier::heat;
  double eff_electric = 0.0;  // n^E, electricity per unit input
  double eff_other = 0.0;     // n^r, heat or hydrogen per unit input
  double capacity = 0.0;      // MW of input
  bool uses_electricity = false;
  bool produces_heat = false;
  bool operator==(const ConverterSpec&) const = default;

  bool is_x2p() const { return output == Carrier::electricity; }
  /// Carrier receiving n^r * input, if any.
  std::optional<Carrier> other_output() const {
    if (!is_x2p()) return output;
    if (produces_heat) return Carrier::heat;
    return std::nullopt;
  }
};

struct StorageSpec {
  std::string id;
  Carrier carrier = Carrier::electricity;
  double power_cap = 0.0;  // MW, both directions
  double e_min = 0.0;      // MWh
  double e_max = 0.0;
  double eff_charge = 1.0;
  double eff_discharge = 1.0;
  double initial_energy = 0.0;
  bool operator==(const StorageSpec&) const = default;
};

/// Inflexible base load plus an optional shift-only flexible load whose
/// cumulative energy e(t) must stay within [flex_min(t), flex_max(t)] and
/// reach flex_total at the last hour.
struct DemandSpec {
  std::string id;
  Carrier carrier = Carrier::electricity;
  Series base;
  Series flex_min;  // empty when the demand has no flexible part
  Series flex_max;
  double flex_total = 0.0;
  bool operator==(const DemandSpec&) const = default;

  bool flexible() const { return !flex_max.empty(); }
};

struct ProsumerSpec {
  std::string id;
  std::vector<ConverterSpec> converters;
  std::vector<StorageSpec> storages;
  std::vector<DemandSpec> demands;
  Series solar_thermal_max;  // empty when there is no solar thermal collector
  bool operator==(const ProsumerSpec&) const = default;

  const StorageSpec* storage_for(Carrier c) const;
  /// True when any asset or demand touches carrier `c` locally.
  bool uses_local(Carrier c) const;
};

struct Scenario {
  int horizon = 0;
  double ceiling_price = 3000.0;
  std::vector<Carrier> carriers;
  std::vector<GeneratorSpec> generators;
  std::vector<ProsumerSpec> prosumers;
  std::map<Carrier, Series> carrier_prices;
  bool operator==(const Scenario&) const = default;

  bool has_carrier(Carrier c) const;
  double price(Carrier c, int hour) const;
  int num_agents() const { return static_cast<int>(generators.size() + prosumers.size()); }
};

struct Violation {
  std::string subject;
  std::string message;
};

std::string to_string(const Violation& v);

using ValidationReport = std::vector<Violation>;

/// Lists every invariant violation; empty when the scenario is valid.
ValidationReport validate_scenario(const Scenario& s);

class ScenarioError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Reads a YAML scenario and the CSV series files it references. Throws
/// ScenarioError on malformed input or the first invariant violation.
Scenario load_scenario(const std::filesystem::path& path);

/// Writes `<path>` and a sibling `<stem>.series.csv` holding every series.
void save_scenario(const Scenario& s, const std::filesystem::path& path);

/// Number of generators in a synthesized scenario with `n_agents` agents:
/// 16 of 30, and 6 more per 10 additional agents.
int synthesized_generator_count(int n_agents);

/// Deterministic in all arguments. Requires n_agents >= 5 and horizon >= 24.
Scenario synthesize_scenario(int n_agents, int horizon, std::uint64_t seed);

/// FNV-1a over the scenario's full content.
std::uint64_t scenario_hash(const Scenario& s);

}  // namespace mies
