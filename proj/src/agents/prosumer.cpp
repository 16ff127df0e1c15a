#include "mies/agents.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mies {

using qp::kInfinity;
using qp::Term;
using qp::VarId;

namespace {

struct FlexBounds {
  double lo;
  double hi;
};

// Cumulative flexible energy allowed at scenario hour `hour`.
FlexBounds flex_bounds(const DemandSpec& d, int hour, int horizon) {
  if (hour >= horizon - 1) return {d.flex_total, d.flex_total};
  return {d.flex_min[hour], d.flex_max[hour]};
}

double base_load(const ProsumerSpec& p, Carrier c, int hour) {
  double total = 0.0;
  for (const auto& d : p.demands) {
    if (d.carrier == c) total += at_hour(d.base, hour);
  }
  return total;
}

std::string tag(const std::string& agent, const char* family, int hour) {
  return agent + "." + family + "[" + std::to_string(hour) + "]";
}

std::string tag(const std::string& agent, const std::string& asset, const char* family, int hour) {
  return agent + "." + asset + "." + family + "[" + std::to_string(hour) + "]";
}

void check_length(const Series& s, int length, const char* what) {
  if (static_cast<int>(s.size()) != length) {
    throw std::invalid_argument(std::string("horizon mismatch: ") + what + " has " +
                                std::to_string(s.size()) + " values, expected " + std::to_string(length));
  }
}

}  // namespace

ProsumerState initial_state(const ProsumerSpec& p) {
  ProsumerState st;
  for (const auto& s : p.storages) st.storage_energy.push_back(s.initial_energy);
  st.flex_energy.assign(p.demands.size(), 0.0);
  return st;
}

double ProsumerSchedule::flex_rate(std::size_t d, int k, const ProsumerState& start) const {
  if (flex_energy[d].empty()) return 0.0;
  return flex_energy[d][k] - (k > 0 ? flex_energy[d][k - 1] : start.flex_energy[d]);
}

ProsumerState ProsumerSchedule::state_after(int k, const ProsumerState& start) const {
  ProsumerState next = start;
  next.hour = start.hour + k + 1;
  for (std::size_t s = 0; s < energy.size(); ++s) next.storage_energy[s] = energy[s][k];
  for (std::size_t d = 0; d < flex_energy.size(); ++d) {
    if (!flex_energy[d].empty()) next.flex_energy[d] = flex_energy[d][k];
  }
  return next;
}

double converter_electric_output(const ConverterSpec& c, double input) {
  return c.is_x2p() ? c.eff_electric * input : 0.0;
}

double converter_other_output(const ConverterSpec& c, double input) {
  return c.other_output() ? c.eff_other * input : 0.0;
}

ProsumerVars add_prosumer(qp::Problem& problem, const Scenario& s, const ProsumerSpec& p,
                          const ProsumerState& state, int length) {
  if (length < 1) throw std::invalid_argument("prosumer window must cover at least one hour");
  if (state.storage_energy.size() != p.storages.size() || state.flex_energy.size() != p.demands.size()) {
    throw std::invalid_argument("prosumer state does not match prosumer " + p.id);
  }
  for (const auto& c : p.converters) {
    if (c.input != Carrier::electricity && !s.carrier_prices.count(c.input)) {
      throw std::invalid_argument("unknown carrier reference: " + std::string(to_string(c.input)) +
                                  " has no price in this scenario");
    }
  }
  const int T = s.horizon;
  ProsumerVars v;
  v.start = state.hour;
  v.length = length;
  v.input.resize(p.converters.size());
  v.charge.resize(p.storages.size());
  v.discharge.resize(p.storages.size());
  v.energy.resize(p.storages.size());
  v.flex.resize(p.demands.size());

  for (int k = 0; k < length; ++k) {
    const int hour = state.hour + k;
    v.net.push_back(problem.add_variable(tag(p.id, "p", hour), -kInfinity, kInfinity));
    for (std::size_t a = 0; a < p.converters.size(); ++a) {
      const auto& c = p.converters[a];
      const auto x = problem.add_variable(tag(p.id, c.id, "in", hour), 0.0, c.capacity);
      if (c.input != Carrier::electricity) problem.add_cost(x, s.price(c.input, hour % T));
      v.input[a].push_back(x);
    }
    if (!p.solar_thermal_max.empty()) {
      v.solar.push_back(problem.add_variable(tag(p.id, "q_st", hour), 0.0, at_hour(p.solar_thermal_max, hour)));
    }
    for (std::size_t i = 0; i < p.storages.size(); ++i) {
      const auto& st = p.storages[i];
      v.charge[i].push_back(problem.add_variable(tag(p.id, st.id, "ch", hour), 0.0, st.power_cap));
      v.discharge[i].push_back(problem.add_variable(tag(p.id, st.id, "dc", hour), 0.0, st.power_cap));
      v.energy[i].push_back(problem.add_variable(tag(p.id, st.id, "e", hour), st.e_min, st.e_max));
    }
    for (std::size_t d = 0; d < p.demands.size(); ++d) {
      const auto& dem = p.demands[d];
      if (!dem.flexible()) continue;
      const auto b = flex_bounds(dem, hour, T);
      v.flex[d].push_back(problem.add_variable(tag(p.id, dem.id, "eF", hour), b.lo, b.hi));
    }
  }

  // Flexible-energy increments e_k - e_{k-1}; the k = 0 predecessor is state.
  auto add_flex_terms = [&](std::vector<Term>& terms, double& rhs, Carrier c, int k, double sign) {
    for (std::size_t d = 0; d < p.demands.size(); ++d) {
      if (p.demands[d].carrier != c || v.flex[d].empty()) continue;
      terms.push_back({v.flex[d][k], sign});
      if (k > 0) {
        terms.push_back({v.flex[d][k - 1], -sign});
      } else {
        rhs += sign * state.flex_energy[d];
      }
    }
  };

  const auto* battery = p.storage_for(Carrier::electricity);
  const std::size_t battery_index = battery ? static_cast<std::size_t>(battery - p.storages.data()) : 0;
  for (int k = 0; k < length; ++k) {
    const int hour = state.hour + k;

    // p = generation + discharge - grid consumption - charge - flexible - base
    std::vector<Term> terms{{v.net[k], 1.0}};
    double rhs = -base_load(p, Carrier::electricity, hour);
    for (std::size_t a = 0; a < p.converters.size(); ++a) {
      const auto& c = p.converters[a];
      if (c.is_x2p()) terms.push_back({v.input[a][k], -c.eff_electric});
      if (c.uses_electricity) terms.push_back({v.input[a][k], 1.0});
    }
    if (battery) {
      terms.push_back({v.discharge[battery_index][k], -1.0});
      terms.push_back({v.charge[battery_index][k], 1.0});
    }
    add_flex_terms(terms, rhs, Carrier::electricity, k, 1.0);
    v.net_rows.push_back(problem.add_equality(tag(p.id, "net", hour), std::move(terms), rhs));

    for (Carrier c : {Carrier::heat, Carrier::hydrogen}) {
      if (!p.uses_local(c)) continue;
      std::vector<Term> local;
      double local_rhs = base_load(p, c, hour);
      for (std::size_t a = 0; a < p.converters.size(); ++a) {
        if (p.converters[a].other_output() == c) local.push_back({v.input[a][k], p.converters[a].eff_other});
      }
      if (c == Carrier::heat && !v.solar.empty()) local.push_back({v.solar[k], 1.0});
      for (std::size_t i = 0; i < p.storages.size(); ++i) {
        if (p.storages[i].carrier != c) continue;
        local.push_back({v.discharge[i][k], 1.0});
        local.push_back({v.charge[i][k], -1.0});
      }
      add_flex_terms(local, local_rhs, c, k, -1.0);
      problem.add_equality(tag(p.id, std::string(to_string(c)).c_str(), hour), std::move(local), local_rhs);
    }

    for (std::size_t i = 0; i < p.storages.size(); ++i) {
      const auto& st = p.storages[i];
      std::vector<Term> dyn{{v.energy[i][k], 1.0},
                            {v.charge[i][k], -st.eff_charge},
                            {v.discharge[i][k], 1.0 / st.eff_discharge}};
      double dyn_rhs = 0.0;
      if (k > 0) {
        dyn.push_back({v.energy[i][k - 1], -1.0});
      } else {
        dyn_rhs = state.storage_energy[i];
      }
      problem.add_equality(tag(p.id, st.id, "soc", hour), std::move(dyn), dyn_rhs);
    }
  }
  return v;
}

void add_price_terms(qp::Problem& problem, const ProsumerVars& v, const Series& price) {
  check_length(price, v.length, "price");
  for (int k = 0; k < v.length; ++k) problem.add_cost(v.net[k], -price[k]);
}

void add_penalty_terms(qp::Problem& problem, const std::vector<VarId>& x, double rho, const Series& previous,
                       const Series& imbalance) {
  check_length(previous, static_cast<int>(x.size()), "previous dispatch");
  check_length(imbalance, static_cast<int>(x.size()), "imbalance");
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double target = previous[k] - imbalance[k];
    problem.add_cost(x[k], -rho * target, 0.5 * rho);
    problem.add_constant(0.5 * rho * target * target);
  }
}

ProsumerProblem build_prosumer_problem(const Scenario& s, const ProsumerSpec& p, const ProsumerState& state,
                                       int length, const ObjectiveMode& mode) {
  ProsumerProblem out;
  out.vars = add_prosumer(out.problem, s, p, state, length);
  if (const auto* f = std::get_if<ForecastObjective>(&mode)) {
    add_price_terms(out.problem, out.vars, f->price);
  } else if (const auto* a = std::get_if<AdmmObjective>(&mode)) {
    add_price_terms(out.problem, out.vars, a->price);
    add_penalty_terms(out.problem, out.vars.net, a->rho, a->previous, a->imbalance);
  }
  return out;
}

ProsumerProblem build_prosumer_problem(const Scenario& s, const ProsumerSpec& p, const ObjectiveMode& mode) {
  return build_prosumer_problem(s, p, initial_state(p), s.horizon, mode);
}

namespace {

Series values(const qp::Solution& sol, const std::vector<VarId>& ids) {
  Series out(ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (ids[k].index < 0 || ids[k].index >= static_cast<int>(sol.primal.size())) {
      throw std::out_of_range("solution lacks a requested variable");
    }
    out[k] = sol.primal[ids[k].index];
  }
  return out;
}

}  // namespace

ProsumerSchedule extract_schedule(const qp::Solution& sol, const ProsumerVars& v) {
  ProsumerSchedule out;
  out.net_power = values(sol, v.net);
  for (const auto& ids : v.input) out.converter_input.push_back(values(sol, ids));
  out.solar_thermal = values(sol, v.solar);
  for (const auto& ids : v.charge) out.charge.push_back(values(sol, ids));
  for (const auto& ids : v.discharge) out.discharge.push_back(values(sol, ids));
  for (const auto& ids : v.energy) out.energy.push_back(values(sol, ids));
  for (const auto& ids : v.flex) out.flex_energy.push_back(values(sol, ids));
  return out;
}

Series net_power_of(const qp::Solution& sol, const ProsumerVars& v) { return values(sol, v.net); }

Series net_power_of(const qp::Solution& sol, const std::vector<VarId>& generator_output) {
  return values(sol, generator_output);
}

PhysicsAudit audit_schedule(const Scenario& s, const ProsumerSpec& p, const ProsumerState& start,
                            const ProsumerSchedule& sched) {
  PhysicsAudit audit;
  const int T = s.horizon;
  auto worst = [](double& slot, double value) { slot = std::max(slot, std::abs(value)); };
  auto outside = [](double x, double lo, double hi) { return std::max({0.0, lo - x, x - hi}); };

  const auto* battery = p.storage_for(Carrier::electricity);
  for (int k = 0; k < sched.length(); ++k) {
    const int hour = start.hour + k;
    double electric = 0.0;
    for (std::size_t a = 0; a < p.converters.size(); ++a) {
      const auto& c = p.converters[a];
      const double x = sched.converter_input[a][k];
      electric += converter_electric_output(c, x);
      if (c.uses_electricity) electric -= x;
      worst(audit.envelope, outside(x, 0.0, c.capacity));
    }
    for (std::size_t i = 0; i < p.storages.size(); ++i) {
      const auto& st = p.storages[i];
      const double ch = sched.charge[i][k], dc = sched.discharge[i][k], e = sched.energy[i][k];
      if (&st == battery) electric += dc - ch;
      const double before = k > 0 ? sched.energy[i][k - 1] : start.storage_energy[i];
      worst(audit.storage_dynamics, e - (before + st.eff_charge * ch - dc / st.eff_discharge));
      worst(audit.envelope, outside(e, st.e_min, st.e_max));
      worst(audit.envelope, outside(ch, 0.0, st.power_cap));
      worst(audit.envelope, outside(dc, 0.0, st.power_cap));
      audit.simultaneous = std::max(audit.simultaneous, std::min(ch, dc));
    }
    for (std::size_t d = 0; d < p.demands.size(); ++d) {
      const auto& dem = p.demands[d];
      if (dem.carrier == Carrier::electricity) electric -= at_hour(dem.base, hour) + sched.flex_rate(d, k, start);
      if (!dem.flexible()) continue;
      const double e = sched.flex_energy[d][k];
      const auto b = flex_bounds(dem, hour, T);
      worst(audit.envelope, outside(e, b.lo, b.hi));
      if (hour == T - 1) worst(audit.flex_total, e - dem.flex_total);
    }
    worst(audit.net_power, sched.net_power[k] - electric);

    for (Carrier c : {Carrier::heat, Carrier::hydrogen}) {
      if (!p.uses_local(c)) continue;
      double balance = 0.0;
      for (std::size_t a = 0; a < p.converters.size(); ++a) {
        if (p.converters[a].other_output() == c) {
          balance += converter_other_output(p.converters[a], sched.converter_input[a][k]);
        }
      }
      if (c == Carrier::heat && !sched.solar_thermal.empty()) {
        balance += sched.solar_thermal[k];
        worst(audit.envelope, outside(sched.solar_thermal[k], 0.0, at_hour(p.solar_thermal_max, hour)));
      }
      for (std::size_t i = 0; i < p.storages.size(); ++i) {
        if (p.storages[i].carrier == c) balance += sched.discharge[i][k] - sched.charge[i][k];
      }
      for (std::size_t d = 0; d < p.demands.size(); ++d) {
        if (p.demands[d].carrier == c) balance -= at_hour(p.demands[d].base, hour) + sched.flex_rate(d, k, start);
      }
      worst(audit.local_balance, balance);
    }
  }
  return audit;
}

}  // namespace mies
