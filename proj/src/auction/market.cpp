#include "mies/auction.hpp"
#include "mies/csv.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

namespace mies {

namespace {

constexpr double kAcceptTol = 1e-6;

// Shares `total` among members in proportion to their capacity above the
// lower bound.
void share(std::vector<double*>& values, const std::vector<double>& lower, const std::vector<double>& capacity,
           double total) {
  double cap = 0.0;
  for (double c : capacity) cap += c;
  if (cap <= 0.0) return;
  double base = 0.0;
  for (double l : lower) base += l;
  const double fraction = std::clamp((total - base) / cap, 0.0, 1.0);
  for (std::size_t i = 0; i < values.size(); ++i) *values[i] = lower[i] + fraction * capacity[i];
}

}  // namespace

void AuctionConfig::validate(const Scenario& s) const {
  if (clearing_window != 1) {
    throw std::invalid_argument("clearing windows longer than 1 h need block bids, which are not supported (got " +
                                std::to_string(clearing_window) + ")");
  }
  if (lookahead < 1 || lookahead > s.horizon) {
    throw std::invalid_argument("lookahead must lie in [1, " + std::to_string(s.horizon) + "], got " +
                                std::to_string(lookahead));
  }
  if (flexibility_range < 0) throw std::invalid_argument("flexibility range must be >= 0");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
}

ClearingResult clear_market(const Scenario& s, const std::vector<BidCurve>& bids, int t) {
  if (s.generators.empty()) throw std::invalid_argument("market clearing needs at least one generator");
  const int hour = t % s.horizon;
  const std::string at = "hour " + std::to_string(t);

  qp::Problem problem;
  problem.set_sense(qp::Sense::maximize);
  std::vector<qp::Term> balance;
  std::vector<qp::VarId> gen;
  for (const auto& g : s.generators) {
    const auto v = problem.add_variable(g.id + ".g", at_hour(g.g_min, hour), at_hour(g.g_max, hour));
    problem.set_cost(v, -g.beta, -g.alpha);
    balance.push_back({v, 1.0});
    gen.push_back(v);
  }
  std::vector<std::vector<qp::VarId>> acc(bids.size());
  for (std::size_t c = 0; c < bids.size(); ++c) {
    for (std::size_t b = 0; b < bids[c].blocks.size(); ++b) {
      const auto& blk = bids[c].blocks[b];
      const auto v = problem.add_variable(bids[c].prosumer + ".b" + std::to_string(b), 0.0, std::abs(blk.quantity));
      const double sign = blk.quantity < 0.0 ? -1.0 : 1.0;
      problem.set_cost(v, -sign * blk.price);
      balance.push_back({v, sign});
      acc[c].push_back(v);
    }
  }
  const auto row = problem.add_equality("balance", std::move(balance), 0.0);
  const auto sol = qp::solve(problem);
  if (!sol.optimal()) {
    throw CoordinationError(at + ": market clearing " + std::string(qp::to_string(sol.status)) +
                            " (inflexible demand or must-run output cannot be balanced)");
  }

  ClearingResult r;
  r.hour = t;
  r.price = -sol.dual(row);
  for (const auto v : gen) r.generation.push_back(sol.value(v));
  r.accepted.resize(bids.size());
  for (std::size_t c = 0; c < bids.size(); ++c) {
    for (const auto v : acc[c]) r.accepted[c].push_back(std::clamp(sol.value(v), 0.0, problem.upper(v)));
  }

  // Equal-price blocks on the same side, then equal-cost linear generators.
  std::map<std::pair<double, bool>, std::vector<std::pair<std::size_t, std::size_t>>> ties;
  for (std::size_t c = 0; c < bids.size(); ++c) {
    for (std::size_t b = 0; b < bids[c].blocks.size(); ++b) {
      ties[{bids[c].blocks[b].price, bids[c].blocks[b].quantity < 0.0}].push_back({c, b});
    }
  }
  for (const auto& [key, members] : ties) {
    if (members.size() < 2) continue;
    std::vector<double*> values;
    std::vector<double> lower, capacity;
    double total = 0.0;
    for (const auto& [c, b] : members) {
      values.push_back(&r.accepted[c][b]);
      lower.push_back(0.0);
      capacity.push_back(std::abs(bids[c].blocks[b].quantity));
      total += r.accepted[c][b];
    }
    share(values, lower, capacity, total);
  }
  std::map<double, std::vector<std::size_t>> linear;
  for (std::size_t i = 0; i < s.generators.size(); ++i) {
    if (s.generators[i].alpha == 0.0) linear[s.generators[i].beta].push_back(i);
  }
  for (const auto& [beta, members] : linear) {
    if (members.size() < 2) continue;
    std::vector<double*> values;
    std::vector<double> lower, capacity;
    double total = 0.0;
    for (std::size_t i : members) {
      const auto& g = s.generators[i];
      values.push_back(&r.generation[i]);
      lower.push_back(at_hour(g.g_min, hour));
      capacity.push_back(at_hour(g.g_max, hour) - at_hour(g.g_min, hour));
      total += r.generation[i];
    }
    share(values, lower, capacity, total);
  }

  for (std::size_t c = 0; c < bids.size(); ++c) {
    double net = 0.0;
    for (std::size_t b = 0; b < bids[c].blocks.size(); ++b) {
      const auto& blk = bids[c].blocks[b];
      const double a = r.accepted[c][b];
      net += blk.quantity < 0.0 ? -a : a;
      if (std::abs(blk.price) >= s.ceiling_price && a < std::abs(blk.quantity) - kAcceptTol) {
        throw CoordinationError(at + ": " + (blk.quantity < 0.0 ? "inflexible demand" : "must-run supply") +
                                " of " + bids[c].prosumer + " not fully cleared, " + format_number(a) + " of " +
                                format_number(std::abs(blk.quantity)) + " MW at price " + format_number(r.price));
      }
    }
    r.net_power.push_back(net);
  }
  return r;
}

AuctionResult run_market_auction(const Scenario& s, const AuctionConfig& cfg) {
  cfg.validate(s);
  const auto started = std::chrono::steady_clock::now();
  const int T = s.horizon;
  const int P = static_cast<int>(s.prosumers.size());

  std::vector<std::string> ids;
  std::vector<SatelliteState> sats;
  for (const auto& p : s.prosumers) {
    ids.push_back(p.id);
    sats.push_back({p.id, initial_state(p), {}});
  }

  AuctionResult out;
  out.committed.assign(P, {});
  out.states.assign(P, {});
  for (int j = 0; j < P; ++j) out.states[j].push_back(sats[j].state);
  std::vector<int> solves(P, 0);
  int clearing_solves = 0;
  Series history;

  runtime::Coordinator coordinator(cfg.threads);
  auto attribute = [](const runtime::AgentFailure& e, int t) {
    return CoordinationError("hour " + std::to_string(t) + ": " + e.what());
  };

  for (int t = 0; t < T; ++t) {
    const int length = cfg.extend_beyond_horizon ? cfg.lookahead : std::min(cfg.lookahead, T - t);
    const Series forecast = make_price_forecast(history, s, t, length);

    auto bid = [&](int j, const runtime::Envelope& in) -> runtime::Payload {
      const auto& p = s.prosumers[j];
      sats[j].forecast = in.as<runtime::PriceBroadcast>().price;
      const auto prices = gather_bid_prices(s, p, sats[j].forecast, t, cfg);
      std::vector<Probe> probes;
      auto curve = generate_bid_curve(s, p, sats[j], prices, cfg, &probes);
      solves[j] += static_cast<int>(probes.size());
      return runtime::BidSubmission{std::move(curve)};
    };
    std::vector<runtime::Envelope> submitted;
    try {
      submitted = coordinator.execute_round("bid", runtime::PriceBroadcast{forecast, {}, 0.0}, ids, bid);
    } catch (const runtime::AgentFailure& e) {
      throw attribute(e, t);
    }
    std::vector<BidCurve> curves;
    for (const auto& env : submitted) curves.push_back(env.as<runtime::BidSubmission>().curve);

    auto clearing = coordinator.timed("clear", [&] { return clear_market(s, curves, t); });
    ++clearing_solves;
    history.push_back(clearing.price);

    std::vector<runtime::Payload> notices;
    for (int j = 0; j < P; ++j) notices.push_back(runtime::ClearingNotice{t, clearing.price, clearing.net_power[j]});
    auto advance = [&](int j, const runtime::Envelope& in) -> runtime::Payload {
      const auto& notice = in.as<runtime::ClearingNotice>();
      out.committed[j].push_back(
          advance_state(s, s.prosumers[j], sats[j], notice.price, notice.accepted, cfg));
      solves[j] += 1;
      return runtime::DispatchReport{{out.committed[j].back().net_power}};
    };
    try {
      coordinator.execute_round("advance", notices, ids, advance);
    } catch (const runtime::AgentFailure& e) {
      throw attribute(e, t);
    }
    for (int j = 0; j < P; ++j) out.states[j].push_back(sats[j].state);
    out.bids.insert(out.bids.end(), curves.begin(), curves.end());
    out.clearings.push_back(std::move(clearing));
  }

  auto& d = out.dispatch;
  d.method = "auction";
  d.price = history;
  d.generation.assign(s.generators.size(), Series(T));
  for (int t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < s.generators.size(); ++i) d.generation[i][t] = out.clearings[t].generation[i];
  }
  for (int j = 0; j < P; ++j) {
    const auto& p = s.prosumers[j];
    ProsumerSchedule sched;
    sched.converter_input.assign(p.converters.size(), {});
    sched.charge.assign(p.storages.size(), {});
    sched.discharge.assign(p.storages.size(), {});
    sched.energy.assign(p.storages.size(), {});
    sched.flex_energy.assign(p.demands.size(), {});
    for (int t = 0; t < T; ++t) {
      const auto& c = out.committed[j][t];
      const auto& after = out.states[j][t + 1];
      sched.net_power.push_back(c.net_power);
      for (std::size_t a = 0; a < p.converters.size(); ++a) sched.converter_input[a].push_back(c.converter_input[a]);
      if (!p.solar_thermal_max.empty()) sched.solar_thermal.push_back(c.solar_thermal);
      for (std::size_t i = 0; i < p.storages.size(); ++i) {
        sched.charge[i].push_back(c.charge[i]);
        sched.discharge[i].push_back(c.discharge[i]);
        sched.energy[i].push_back(after.storage_energy[i]);
      }
      for (std::size_t k = 0; k < p.demands.size(); ++k) {
        if (p.demands[k].flexible()) sched.flex_energy[k].push_back(after.flex_energy[k]);
      }
    }
    d.prosumers.push_back(std::move(sched));
  }
  d.total_cost = system_cost(d, s);
  d.diagnostics.iterations = T;
  d.diagnostics.solve_count = clearing_solves;
  for (int n : solves) d.diagnostics.solve_count += n;
  d.diagnostics.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  out.events = coordinator.trace();
  return out;
}

void write_bid_log_csv(const AuctionResult& r, const std::filesystem::path& file) {
  CsvWriter csv(file);
  csv.row({"hour", "prosumer", "price", "quantity", "accepted"});
  const std::size_t per_hour = r.clearings.empty() ? 0 : r.clearings.front().accepted.size();
  for (std::size_t i = 0; i < r.bids.size(); ++i) {
    const auto& curve = r.bids[i];
    const auto& accepted = r.clearings.at(i / per_hour).accepted.at(i % per_hour);
    for (std::size_t b = 0; b < curve.blocks.size(); ++b) {
      csv.row({std::to_string(curve.hour), curve.prosumer, format_number(curve.blocks[b].price),
               format_number(curve.blocks[b].quantity), format_number(accepted[b])});
    }
  }
}

void write_clearing_prices_csv(const AuctionResult& r, const std::filesystem::path& file) {
  CsvWriter csv(file);
  csv.row({"hour", "price"});
  for (const auto& c : r.clearings) csv.row({std::to_string(c.hour), format_number(c.price)});
}

}  // namespace mies
