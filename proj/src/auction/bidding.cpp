#include "mies/auction.hpp"
#include "mies/csv.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace mies {

namespace {

// Jumps of the response smaller than this are treated as noise.
constexpr double kStep = 1e-7;
// Refinement solves per curve, beyond the bid prices themselves.
constexpr int kMaxRefineSolves = 400;
// The committed net power is fixed exactly, or boxed by this half-width when
// the fixed problem fails numerically.
constexpr double kPinRetry = 1e-6;
constexpr double kEnvelopeTol = 1e-6;

int window_length(const SatelliteState& st) { return static_cast<int>(st.forecast.size()); }

std::string where(const ProsumerSpec& p, int hour) {
  return "prosumer " + p.id + " hour " + std::to_string(hour);
}

class Satellite {
public:
  Satellite(const Scenario& s, const ProsumerSpec& p, const SatelliteState& st)
      : prosumer_(p),
        hour_(st.state.hour),
        model_(build_prosumer_problem(s, p, st.state, window_length(st), ForecastObjective{st.forecast})) {}

  Probe probe(double price) {
    model_.problem.set_cost(model_.vars.net[0], -price);
    const auto sol = qp::solve(model_.problem);
    if (!sol.optimal()) {
      throw CoordinationError(where(prosumer_, hour_) + ": satellite problem " +
                              std::string(qp::to_string(sol.status)));
    }
    history_.push_back({price, sol.value(model_.vars.net[0]), sol.objective});
    return history_.back();
  }

  /// Every probe solved so far, by price.
  std::vector<Probe> history() const {
    auto h = history_;
    std::stable_sort(h.begin(), h.end(), [](const Probe& a, const Probe& b) { return a.price < b.price; });
    return h;
  }

private:
  const ProsumerSpec& prosumer_;
  int hour_;
  ProsumerProblem model_;
  std::vector<Probe> history_;
};

// The optimal value V(pi) is concave and piecewise linear with slope -p(pi).
// Tangents at a and b meet at pi*; if V(pi*) lies on them there is a single
// breakpoint there, otherwise both halves are searched.
void refine(Satellite& sat, const Probe& a, const Probe& b, std::map<double, double>& jumps, int& budget) {
  const double rise = b.response - a.response;
  if (rise <= kStep) return;
  double pi = (b.value - a.value + b.response * b.price - a.response * a.price) / rise;
  pi = std::clamp(pi, a.price, b.price);
  const double scale = 1.0 + std::max(std::abs(a.value), std::abs(b.value));
  if (budget <= 0 || pi - a.price <= 1e-9 * (1.0 + std::abs(pi)) || b.price - pi <= 1e-9 * (1.0 + std::abs(pi))) {
    jumps[pi] += rise;
    return;
  }
  --budget;
  const Probe c = sat.probe(pi);
  const double tangent = a.value - a.response * (pi - a.price);
  if (c.value >= tangent - 1e-9 * scale) {
    jumps[pi] += rise;
    return;
  }
  refine(sat, a, c, jumps, budget);
  refine(sat, c, b, jumps, budget);
}

void add_block(std::vector<BidBlock>& blocks, double price, double quantity) {
  if (std::abs(quantity) > 1e-9) blocks.push_back({price, quantity});
}

}  // namespace

Series make_price_forecast(const Series& history, const Scenario& s, int t, int lookahead) {
  if (lookahead < 1) throw std::invalid_argument("lookahead must be at least 1 hour");
  const int cleared = static_cast<int>(history.size());
  Series forecast(lookahead);
  for (int k = 0; k < lookahead; ++k) {
    const int hour = t + k;
    int prior = hour - 24;
    while (prior >= cleared) prior -= 24;
    forecast[k] = prior >= 0 ? history[prior]
                             : merit_order_price(s, hour % s.horizon, base_electric_demand(s, hour));
  }
  return forecast;
}

std::vector<double> gather_bid_prices(const Scenario& s, const ProsumerSpec& p, const Series& forecast, int t,
                                      const AuctionConfig& cfg) {
  if (forecast.empty()) throw std::invalid_argument("empty price forecast for " + p.id);
  const double ceiling = s.ceiling_price;
  std::vector<double> prices{ceiling};

  const int range = cfg.flexibility_range > 0 ? std::min<int>(cfg.flexibility_range, forecast.size())
                                              : static_cast<int>(forecast.size());
  const double lowest = *std::min_element(forecast.begin(), forecast.begin() + range);
  int flexibilities = static_cast<int>(p.storages.size());
  for (const auto& d : p.demands) flexibilities += d.flexible() ? 1 : 0;
  if (flexibilities > 0) prices.push_back(lowest);

  for (const auto& c : p.converters) {
    if (c.input == Carrier::electricity) continue;
    const double mu = s.price(c.input, t % s.horizon);
    const double n = c.is_x2p() ? c.eff_electric : c.eff_other;
    prices.push_back(cfg.divide_opportunity_cost ? mu / n : mu * n);
  }
  for (double& v : prices) v = std::clamp(v, -ceiling, ceiling);
  std::sort(prices.begin(), prices.end());
  prices.erase(std::unique(prices.begin(), prices.end()), prices.end());
  return prices;
}

BidCurve generate_bid_curve(const Scenario& s, const ProsumerSpec& p, const SatelliteState& state,
                            const std::vector<double>& prices, const AuctionConfig& cfg,
                            std::vector<Probe>* probes) {
  if (prices.empty()) throw std::invalid_argument("no bid prices for " + p.id);
  if (state.forecast.empty()) throw std::invalid_argument("no forecast for " + p.id);
  const double ceiling = s.ceiling_price;

  std::vector<double> grid{-ceiling};
  for (double v : prices) grid.push_back(std::clamp(v, -ceiling, ceiling));
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  Satellite sat(s, p, state);
  std::vector<Probe> points;
  for (double v : grid) points.push_back(sat.probe(v));

  const double tol = 1e-6 * (1.0 + std::abs(points.front().response) + std::abs(points.back().response));
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].response < points[i - 1].response - tol) {
      throw CoordinationError(where(p, state.state.hour) + ": net power falls from " +
                              format_number(points[i - 1].response) + " to " + format_number(points[i].response) +
                              " as the price rises");
    }
    points[i].response = std::max(points[i].response, points[i - 1].response);
  }

  // Step function of the net power: jumps[price] = rise at that price.
  std::map<double, double> jumps;
  if (cfg.refine_curve) {
    int budget = kMaxRefineSolves;
    for (std::size_t i = 1; i < points.size(); ++i) refine(sat, points[i - 1], points[i], jumps, budget);
  } else {
    for (std::size_t i = 1; i < points.size(); ++i) {
      const double rise = points[i].response - points[i - 1].response;
      if (rise > kStep) jumps[points[i].price] += rise;
    }
  }
  if (probes) *probes = sat.history();

  BidCurve curve{p.id, state.state.hour, {}};
  double level = points.front().response;
  if (level > 0.0) add_block(curve.blocks, -ceiling, level);
  for (const auto& [price, rise] : jumps) {
    const double next = level + rise;
    if (level < 0.0) add_block(curve.blocks, price, -(std::min(next, 0.0) - level));
    if (next > 0.0) add_block(curve.blocks, price, next - std::max(level, 0.0));
    level = next;
  }
  if (level < 0.0) add_block(curve.blocks, ceiling, level);
  std::stable_sort(curve.blocks.begin(), curve.blocks.end(),
                   [](const BidBlock& a, const BidBlock& b) { return a.price < b.price; });
  return curve;
}

ResponseRange curve_response(const BidCurve& curve, double price, double tolerance) {
  ResponseRange r;
  for (const auto& b : curve.blocks) {
    const bool at = std::abs(price - b.price) <= tolerance * (1.0 + std::abs(b.price));
    const bool taken = b.quantity < 0.0 ? price < b.price : price > b.price;
    if (at) {
      r.low += std::min(b.quantity, 0.0);
      r.high += std::max(b.quantity, 0.0);
    } else if (taken) {
      r.low += b.quantity;
      r.high += b.quantity;
    }
  }
  return r;
}

ProsumerState integrate(const ProsumerSpec& p, const ProsumerState& before, const CommittedHour& hour) {
  ProsumerState next = before;
  next.hour = before.hour + 1;
  for (std::size_t i = 0; i < p.storages.size(); ++i) {
    const auto& st = p.storages[i];
    next.storage_energy[i] =
        before.storage_energy[i] + st.eff_charge * hour.charge[i] - hour.discharge[i] / st.eff_discharge;
  }
  for (std::size_t d = 0; d < p.demands.size(); ++d) {
    if (p.demands[d].flexible()) next.flex_energy[d] = before.flex_energy[d] + hour.flex_rate[d];
  }
  return next;
}

CommittedHour advance_state(const Scenario& s, const ProsumerSpec& p, SatelliteState& state, double price,
                            double cleared, const AuctionConfig&) {
  if (state.forecast.empty()) throw std::invalid_argument("no forecast for " + p.id);
  const int hour = state.state.hour;
  Series forecast = state.forecast;
  forecast[0] = price;
  auto model = build_prosumer_problem(s, p, state.state, static_cast<int>(forecast.size()), ForecastObjective{forecast});

  qp::Solution sol;
  for (double pin : {0.0, kPinRetry}) {
    model.problem.set_variable_bounds(model.vars.net[0], cleared - pin, cleared + pin);
    sol = qp::solve(model.problem);
    if (sol.optimal()) break;
  }
  if (!sol.optimal()) {
    throw CoordinationError(where(p, hour) + ": cannot commit " + format_number(cleared) +
                            " MW (" + std::string(qp::to_string(sol.status)) + ")");
  }

  const auto sched = extract_schedule(sol, model.vars);
  CommittedHour c;
  c.net_power = sched.net_power[0];
  for (const auto& x : sched.converter_input) c.converter_input.push_back(x[0]);
  c.solar_thermal = sched.solar_thermal.empty() ? 0.0 : sched.solar_thermal[0];
  for (std::size_t i = 0; i < p.storages.size(); ++i) {
    c.charge.push_back(sched.charge[i][0]);
    c.discharge.push_back(sched.discharge[i][0]);
  }
  for (std::size_t d = 0; d < p.demands.size(); ++d) c.flex_rate.push_back(sched.flex_rate(d, 0, state.state));

  ProsumerState next = integrate(p, state.state, c);
  for (std::size_t i = 0; i < p.storages.size(); ++i) {
    const auto& st = p.storages[i];
    const double e = next.storage_energy[i];
    if (e < st.e_min - kEnvelopeTol || e > st.e_max + kEnvelopeTol) {
      throw CoordinationError(where(p, hour) + ": storage " + st.id + " energy " + format_number(e) +
                              " leaves [" + format_number(st.e_min) + ", " + format_number(st.e_max) + "]");
    }
  }
  for (std::size_t d = 0; d < p.demands.size(); ++d) {
    const auto& dem = p.demands[d];
    if (!dem.flexible() || hour >= s.horizon) continue;
    const double e = next.flex_energy[d];
    const double lo = hour >= s.horizon - 1 ? dem.flex_total : dem.flex_min[hour];
    const double hi = hour >= s.horizon - 1 ? dem.flex_total : dem.flex_max[hour];
    if (e < lo - kEnvelopeTol || e > hi + kEnvelopeTol) {
      throw CoordinationError(where(p, hour) + ": flexible demand " + dem.id + " energy " + format_number(e) +
                              " leaves [" + format_number(lo) + ", " + format_number(hi) + "]");
    }
  }
  state.state = std::move(next);
  state.forecast = std::move(forecast);
  return c;
}

}  // namespace mies
