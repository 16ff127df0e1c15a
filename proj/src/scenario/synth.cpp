// Synthetic scenarios with daily load, solar and wind shapes. Prosumers
// cycle through four archetypes: heat with a heat pump, battery with a
// flexible EV load, electrolysis, and a CHP site with solar thermal. Each
// prosumer is an aggregate of some tens of MW.

#include "mies/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace mies {

namespace {

// Portable uniform draws; std distributions differ between standard libraries.
class Draw {
public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

private:
  std::mt19937_64 rng_;
};

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double hour_of_day(int t) { return static_cast<double>(t % 24); }

double round_to(double v, double step) { return std::round(v / step) * step; }

Series electric_shape(int T, double peak, double phase, Draw& draw) {
  Series s(T);
  for (int t = 0; t < T; ++t) {
    const double h = hour_of_day(t);
    const double daily = 0.75 + 0.2 * std::sin(kTwoPi * (h - 8.0 + phase) / 24.0) +
                         0.05 * std::sin(2.0 * kTwoPi * (h - 18.0) / 24.0);
    s[t] = round_to(peak * daily * (0.97 + 0.06 * draw.unit()), 1e-3);
  }
  return s;
}

Series heat_shape(int T, double peak, Draw& draw) {
  Series s(T);
  for (int t = 0; t < T; ++t) {
    const double h = hour_of_day(t);
    const double daily = 0.8 + 0.2 * std::cos(kTwoPi * (h - 6.0) / 24.0);
    s[t] = round_to(peak * daily * (0.97 + 0.03 * draw.unit()), 1e-3);
  }
  return s;
}

double solar_factor(int t) {
  const double h = hour_of_day(t);
  return std::max(0.0, std::sin(std::numbers::pi * (h - 6.0) / 12.0));
}

// Cumulative envelope around a linear ramp to `total`, pinned at the end;
// the load may run up to `slack_hours` ahead of or behind the ramp.
void flexible_envelope(DemandSpec& d, int T, double total, double slack_hours) {
  d.flex_min.resize(T);
  d.flex_max.resize(T);
  const double slack = slack_hours * total / T;
  for (int t = 0; t < T; ++t) {
    const double ramp = total * (t + 1) / T;
    d.flex_min[t] = round_to(std::max(0.0, ramp - slack), 1e-6);
    d.flex_max[t] = round_to(std::min(total, ramp + slack), 1e-6);
  }
  d.flex_min[T - 1] = total;
  d.flex_max[T - 1] = total;
  d.flex_total = total;
}

StorageSpec storage(const std::string& id, Carrier c, double power, double hours, double eff) {
  StorageSpec s;
  s.id = id;
  s.carrier = c;
  s.power_cap = power;
  s.e_min = 0.0;
  s.e_max = round_to(power * hours, 1e-3);
  s.eff_charge = eff;
  s.eff_discharge = eff;
  s.initial_energy = 0.5 * (s.e_min + s.e_max);
  return s;
}

DemandSpec base_demand(const std::string& id, Carrier c, Series base) {
  DemandSpec d;
  d.id = id;
  d.carrier = c;
  d.base = std::move(base);
  return d;
}

double peak(const Series& s) { return *std::max_element(s.begin(), s.end()); }
double trough(const Series& s) { return *std::min_element(s.begin(), s.end()); }

ProsumerSpec heat_prosumer(const std::string& id, int T, Draw& draw) {
  ProsumerSpec p;
  p.id = id;
  const double heat_peak = round_to(draw.uniform(30.0, 60.0), 0.01);
  p.demands.push_back(base_demand("load", Carrier::electricity,
                                  electric_shape(T, draw.uniform(10.0, 25.0), draw.uniform(-2, 2), draw)));
  auto heat = base_demand("heat", Carrier::heat, heat_shape(T, heat_peak, draw));
  flexible_envelope(heat, T, round_to(0.05 * heat_peak * T, 0.01), 4.0);
  p.demands.push_back(std::move(heat));

  ConverterSpec hp;
  hp.id = "heat_pump";
  hp.input = Carrier::electricity;
  hp.output = Carrier::heat;
  hp.uses_electricity = true;
  hp.eff_other = round_to(draw.uniform(2.5, 3.5), 0.01);
  hp.capacity = round_to(0.5 * heat_peak / hp.eff_other, 0.01);
  p.converters.push_back(hp);

  ConverterSpec boiler;
  boiler.id = "boiler";
  boiler.input = Carrier::methane;
  boiler.output = Carrier::heat;
  boiler.eff_other = 0.9;
  boiler.capacity = round_to(1.6 * heat_peak / 0.9, 0.01);
  p.converters.push_back(boiler);

  p.storages.push_back(storage("tank", Carrier::heat, round_to(0.3 * heat_peak, 0.01), 4.0, 0.95));
  return p;
}

ProsumerSpec battery_prosumer(const std::string& id, int T, Draw& draw) {
  ProsumerSpec p;
  p.id = id;
  const double load_peak = draw.uniform(10.0, 30.0);
  p.demands.push_back(base_demand("load", Carrier::electricity,
                                  electric_shape(T, load_peak, draw.uniform(-2, 2), draw)));
  auto ev = base_demand("ev", Carrier::electricity, Series(T, 0.0));
  flexible_envelope(ev, T, round_to(draw.uniform(0.1, 0.25) * load_peak * T, 0.01), 5.0);
  p.demands.push_back(std::move(ev));
  p.storages.push_back(
      storage("battery", Carrier::electricity, round_to(draw.uniform(10.0, 20.0), 0.01), 4.0, 0.95));
  return p;
}

ProsumerSpec hydrogen_prosumer(const std::string& id, int T, Draw& draw) {
  ProsumerSpec p;
  p.id = id;
  p.demands.push_back(base_demand("load", Carrier::electricity,
                                  electric_shape(T, draw.uniform(5.0, 10.0), draw.uniform(-2, 2), draw)));
  ConverterSpec ely;
  ely.id = "electrolyser";
  ely.input = Carrier::electricity;
  ely.output = Carrier::hydrogen;
  ely.uses_electricity = true;
  ely.eff_other = 0.7;
  ely.capacity = round_to(draw.uniform(20.0, 40.0), 0.01);
  p.converters.push_back(ely);

  const double h2_out = ely.capacity * ely.eff_other;
  Series h2(T);
  for (int t = 0; t < T; ++t) h2[t] = round_to(h2_out * (0.35 + 0.05 * draw.unit()), 1e-3);
  auto h2_demand = base_demand("hydrogen", Carrier::hydrogen, std::move(h2));
  flexible_envelope(h2_demand, T, round_to(0.1 * h2_out * T, 0.01), 6.0);
  p.demands.push_back(std::move(h2_demand));
  p.storages.push_back(storage("h2_tank", Carrier::hydrogen, round_to(0.5 * h2_out, 0.01), 6.0, 0.9));
  return p;
}

ProsumerSpec chp_prosumer(const std::string& id, int T, Draw& draw) {
  ProsumerSpec p;
  p.id = id;
  const double heat_peak = round_to(draw.uniform(40.0, 80.0), 0.01);
  p.demands.push_back(base_demand("load", Carrier::electricity,
                                  electric_shape(T, draw.uniform(20.0, 40.0), draw.uniform(-2, 2), draw)));
  p.demands.push_back(base_demand("heat", Carrier::heat, heat_shape(T, heat_peak, draw)));
  const double heat_floor = trough(p.demands.back().base);

  // CHP heat and solar heat never exceed the smallest heat load, so heat
  // never has to be dumped.
  ConverterSpec chp;
  chp.id = "chp";
  chp.input = Carrier::methane;
  chp.output = Carrier::electricity;
  chp.produces_heat = true;
  chp.eff_electric = 0.38;
  chp.eff_other = 0.45;
  chp.capacity = round_to(0.6 * heat_floor / chp.eff_other, 0.01);
  p.converters.push_back(chp);

  ConverterSpec boiler;
  boiler.id = "boiler";
  boiler.input = Carrier::methane;
  boiler.output = Carrier::heat;
  boiler.eff_other = 0.9;
  boiler.capacity = round_to(1.3 * heat_peak / 0.9, 0.01);
  p.converters.push_back(boiler);

  p.storages.push_back(storage("tank", Carrier::heat, round_to(0.25 * heat_peak, 0.01), 4.0, 0.95));
  p.solar_thermal_max.resize(T);
  for (int t = 0; t < T; ++t) {
    p.solar_thermal_max[t] = round_to(0.3 * heat_floor * solar_factor(t) * (0.8 + 0.2 * draw.unit()), 1e-3);
  }
  return p;
}

// Largest electricity draw a prosumer could place in any hour.
double max_electric_draw(const ProsumerSpec& p) {
  double draw = 0.0;
  for (const auto& d : p.demands) {
    if (d.carrier != Carrier::electricity) continue;
    draw += peak(d.base);
    double step = 0.0;
    for (std::size_t t = 0; t < d.flex_max.size(); ++t) {
      step = std::max(step, d.flex_max[t] - (t > 0 ? d.flex_min[t - 1] : 0.0));
    }
    draw += step;
  }
  for (const auto& c : p.converters) {
    if (c.uses_electricity) draw += c.capacity;
  }
  if (const auto* st = p.storage_for(Carrier::electricity)) draw += st->power_cap;
  return draw;
}

}  // namespace

int synthesized_generator_count(int n_agents) {
  const double g = 16.0 + 0.6 * (n_agents - 30);
  return std::clamp(static_cast<int>(std::lround(g)), 1, n_agents - 1);
}

Scenario synthesize_scenario(int n_agents, int horizon, std::uint64_t seed) {
  if (n_agents < 5) throw std::invalid_argument("synthesize_scenario: n_agents must be >= 5");
  if (horizon < 24) throw std::invalid_argument("synthesize_scenario: horizon must be >= 24");
  Draw draw(seed);
  const int T = horizon;
  Scenario s;
  s.horizon = T;
  s.ceiling_price = 3000.0;
  s.carriers = {Carrier::electricity, Carrier::heat, Carrier::hydrogen, Carrier::methane};

  Series gas(T);
  for (int t = 0; t < T; ++t) {
    gas[t] = round_to(30.0 + 4.0 * std::sin(kTwoPi * (hour_of_day(t) - 9.0) / 24.0) +
                          2.0 * draw.uniform(-1.0, 1.0),
                      0.01);
  }
  s.carrier_prices[Carrier::methane] = gas;

  const int n_gen = synthesized_generator_count(n_agents);
  const int n_pro = n_agents - n_gen;
  double firm_need = 0.0;
  for (int j = 0; j < n_pro; ++j) {
    const std::string id = "prosumer_" + std::to_string(j + 1);
    ProsumerSpec p;
    switch (j % 4) {
      case 0: p = heat_prosumer(id, T, draw); break;
      case 1: p = battery_prosumer(id, T, draw); break;
      case 2: p = hydrogen_prosumer(id, T, draw); break;
      default: p = chp_prosumer(id, T, draw); break;
    }
    firm_need += max_electric_draw(p);
    s.prosumers.push_back(std::move(p));
  }

  // Every fourth generator is variable renewable; the rest share a firm
  // capacity that covers the largest possible prosumer draw with margin.
  std::vector<int> firm;
  for (int i = 0; i < n_gen; ++i) {
    if (i % 4 != 3 || n_gen < 4) firm.push_back(i);
  }
  std::vector<double> weight(n_gen, 0.0);
  double weight_sum = 0.0;
  for (int i : firm) {
    weight[i] = draw.uniform(0.5, 1.5);
    weight_sum += weight[i];
  }
  const double firm_total = 1.3 * firm_need + 10.0;
  for (int i = 0; i < n_gen; ++i) {
    GeneratorSpec g;
    g.id = "generator_" + std::to_string(i + 1);
    g.g_min.assign(T, 0.0);
    if (weight[i] > 0.0) {
      const double merit = static_cast<double>(i) / std::max(1, n_gen - 1);
      g.alpha = round_to(draw.uniform(0.0002, 0.002) * (1.0 + merit), 1e-6);
      g.beta = round_to(10.0 + 70.0 * merit + draw.uniform(0.0, 5.0), 0.01);
      g.g_max.assign(T, round_to(firm_total * weight[i] / weight_sum, 0.01));
    } else {
      const bool solar = (i / 4) % 2 == 0;
      const double cap = round_to(draw.uniform(0.05, 0.15) * firm_total, 0.01);
      g.alpha = round_to(draw.uniform(0.0001, 0.0004), 1e-6);
      g.beta = round_to(draw.uniform(1.0, 4.0), 0.01);
      g.g_max.resize(T);
      for (int t = 0; t < T; ++t) {
        const double f = solar ? solar_factor(t)
                               : 0.45 + 0.35 * std::sin(kTwoPi * (t + 5.0 * i) / 37.0);
        g.g_max[t] = round_to(cap * std::max(0.0, f), 0.01);
      }
    }
    s.generators.push_back(std::move(g));
  }
  return s;
}

}  // namespace mies
