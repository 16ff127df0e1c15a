#pragma once

// Rolling hourly market: every hour the prosumers turn a price forecast into
// bid curves, a welfare-maximizing clearing sets the price against truthful
// generator supply, and each prosumer commits its first-hour dispatch.

#include "mies/bids.hpp"
#include "mies/dispatch.hpp"
#include "mies/runtime.hpp"

namespace mies {

struct AuctionConfig {
  int lookahead = 24;
  int clearing_window = 1;  // longer windows would need block bids
  /// Keep the full look-ahead near the end of the horizon, wrapping data
  /// around; otherwise windows are truncated at the last hour.
  bool extend_beyond_horizon = true;
  /// Hours covered by each flexibility range for the bid prices; 0 = window.
  int flexibility_range = 0;
  /// Locate every breakpoint of the response between bid prices.
  bool refine_curve = true;
  /// Opportunity cost as mu / n instead of mu * n.
  bool divide_opportunity_cost = false;
  int threads = runtime::default_threads();

  /// Throws std::invalid_argument; clearing windows above 1 h are rejected.
  void validate(const Scenario& s) const;
};

/// A prosumer's private rolling state.
struct SatelliteState {
  std::string prosumer;
  ProsumerState state;
  Series forecast;  // latest forecast received
};

struct ClearingResult {
  int hour = 0;
  double price = 0.0;
  std::vector<std::vector<double>> accepted;  // [curve][block], 0 .. |quantity|
  Series generation;                          // per generator
  Series net_power;                           // per curve: signed cleared quantity
};

/// Dispatch committed by one prosumer for one hour.
struct CommittedHour {
  double net_power = 0.0;
  Series converter_input;
  double solar_thermal = 0.0;
  Series charge, discharge;  // per storage
  Series flex_rate;          // per demand, 0 for inflexible demand
};

/// Forecast for hours t .. t+lookahead-1: the price cleared 24 h earlier when
/// available, else the merit-order price of the inflexible electric demand.
Series make_price_forecast(const Series& history, const Scenario& s, int t, int lookahead);

/// Ceiling price, the lowest forecast price within each flexibility range, and
/// the opportunity cost of each fuel-driven converter; sorted, unique.
/// Throws std::invalid_argument on an empty forecast.
std::vector<double> gather_bid_prices(const Scenario& s, const ProsumerSpec& p, const Series& forecast,
                                      int t, const AuctionConfig& cfg = {});

/// Net power in window hour 0 and optimal objective value of the satellite
/// problem when the first forecast hour is replaced by `price`.
struct Probe {
  double price = 0.0;
  double response = 0.0;
  double value = 0.0;
};

/// Solves the satellite problem at each bid price (and at -ceiling), refines
/// between them when configured, and encodes the response as demand blocks
/// (consumption that stops above the block price) and supply blocks
/// (production offered at or above the block price). `probes` receives every
/// solved probe, by price, when non-null.
BidCurve generate_bid_curve(const Scenario& s, const ProsumerSpec& p, const SatelliteState& state,
                            const std::vector<double>& prices, const AuctionConfig& cfg = {},
                            std::vector<Probe>* probes = nullptr);

/// Signed quantity a curve clears at `price`: [lowest, highest] over all
/// acceptances consistent with the price (a single point off block prices).
/// Prices within `tolerance` (relative) of a block price count as equal.
struct ResponseRange {
  double low = 0.0;
  double high = 0.0;
};
ResponseRange curve_response(const BidCurve& curve, double price, double tolerance = 1e-7);

/// Maximizes block surplus minus generation cost subject to the hourly
/// balance; the price is the balance dual. Equal-price blocks and equal-cost
/// linear generators share their cleared total in proportion to capacity.
/// Throws CoordinationError when the hour cannot be balanced below the
/// ceiling price.
ClearingResult clear_market(const Scenario& s, const std::vector<BidCurve>& bids, int t);

/// Re-solves the satellite problem at the cleared price with the first-hour
/// net power held at `cleared`, commits that hour and integrates the
/// energies. Throws CoordinationError when the commitment breaches an
/// envelope.
CommittedHour advance_state(const Scenario& s, const ProsumerSpec& p, SatelliteState& state, double price,
                            double cleared, const AuctionConfig& cfg = {});

/// Energy update of one committed hour (storage and flexible demand).
ProsumerState integrate(const ProsumerSpec& p, const ProsumerState& before, const CommittedHour& hour);

struct AuctionResult {
  DispatchResult dispatch;
  std::vector<BidCurve> bids;  // hour-major, prosumer order within an hour
  std::vector<ClearingResult> clearings;
  std::vector<std::vector<CommittedHour>> committed;  // [prosumer][hour]
  std::vector<std::vector<ProsumerState>> states;     // [prosumer][hour 0..T]
  runtime::EventTrace events;
};

AuctionResult run_market_auction(const Scenario& s, const AuctionConfig& cfg = {});

/// hour, prosumer, price, quantity, accepted.
void write_bid_log_csv(const AuctionResult& r, const std::filesystem::path& file);
/// hour, price.
void write_clearing_prices_csv(const AuctionResult& r, const std::filesystem::path& file);

}  // namespace mies
