#include "mies/agents.hpp"

#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

using namespace mies;

namespace {

Scenario shell(int T) {
  Scenario s;
  s.horizon = T;
  s.carriers = {Carrier::electricity, Carrier::heat, Carrier::hydrogen, Carrier::methane};
  s.carrier_prices[Carrier::methane] = Series(T, 30.0);
  s.generators.push_back({"g", 0.0, 20.0, Series(T, 0.0), Series(T, 1000.0)});
  return s;
}

DemandSpec demand(const std::string& id, Carrier c, Series base) {
  DemandSpec d;
  d.id = id;
  d.carrier = c;
  d.base = std::move(base);
  return d;
}

qp::Solution solve_ok(const qp::Problem& p) {
  const auto sol = qp::solve(p);
  REQUIRE(sol.optimal());
  return sol;
}

ProsumerSchedule schedule_at(const Scenario& s, const ProsumerSpec& p, const Series& price) {
  auto built = build_prosumer_problem(s, p, ForecastObjective{price});
  return extract_schedule(solve_ok(built.problem), built.vars);
}

ProsumerSpec heat_house(int T) {
  ProsumerSpec p;
  p.id = "house";
  p.demands.push_back(demand("heat", Carrier::heat, Series(T, 2.0)));
  ConverterSpec hp{"hp", Carrier::electricity, Carrier::heat, 0.0, 3.0, 1.0, true, false};
  ConverterSpec boiler{"boiler", Carrier::methane, Carrier::heat, 0.0, 0.9, 5.0, false, false};
  p.converters = {hp, boiler};
  return p;
}

}  // namespace

TEST_CASE("a pure consumer draws its base load at any price") {
  const int T = 6;
  auto s = shell(T);
  ProsumerSpec p;
  p.id = "consumer";
  p.demands.push_back(demand("load", Carrier::electricity, Series(T, 5.0)));
  s.prosumers.push_back(p);
  for (const ObjectiveMode& mode :
       {ObjectiveMode{CooptObjective{}}, ObjectiveMode{ForecastObjective{Series(T, 42.0)}},
        ObjectiveMode{AdmmObjective{Series(T, 7.0), 2.0, Series(T, -1.0), Series(T, 0.5)}}}) {
    auto built = build_prosumer_problem(s, p, mode);
    const auto sol = solve_ok(built.problem);
    for (double v : net_power_of(sol, built.vars)) CHECK(v == doctest::Approx(-5.0).epsilon(1e-9));
  }
}

TEST_CASE("heat is served by the cheaper of heat pump and boiler") {
  const int T = 3;
  auto s = shell(T);
  const auto p = heat_house(T);
  // Marginal heat cost: lambda / 3 for the heat pump against 30 / 0.9 = 33.3 for gas.
  const auto cheap = schedule_at(s, p, Series(T, 5.0));
  const auto dear = schedule_at(s, p, Series(T, 200.0));
  for (int t = 0; t < T; ++t) {
    CHECK(cheap.converter_input[0][t] == doctest::Approx(2.0 / 3.0).epsilon(1e-7));
    CHECK(std::abs(cheap.converter_input[1][t]) < 1e-6);
    CHECK(std::abs(dear.converter_input[0][t]) < 1e-6);
    CHECK(dear.converter_input[1][t] == doctest::Approx(2.0 / 0.9).epsilon(1e-7));
    CHECK(cheap.net_power[t] == doctest::Approx(-2.0 / 3.0).epsilon(1e-7));
    CHECK(std::abs(dear.net_power[t]) < 1e-6);
  }
}

namespace {

// Oracle: enumerate net power on a 0.5 MW grid for all three hours.
std::array<double, 3> brute_force_battery(const Series& price, double e0, double eff) {
  double best = std::numeric_limits<double>::infinity();
  std::array<double, 3> best_net{};
  const int steps = 20;
  for (int a = 0; a <= 2 * steps; ++a) {
    for (int b = 0; b <= 2 * steps; ++b) {
      for (int c = 0; c <= 2 * steps; ++c) {
        const std::array<double, 3> net{(a - steps) * 0.5, (b - steps) * 0.5, (c - steps) * 0.5};
        double e = e0, cost = 0.0;
        bool ok = true;
        for (int t = 0; t < 3 && ok; ++t) {
          e += net[t] < 0 ? -net[t] * eff : -net[t] / eff;
          ok = e >= -1e-12 && e <= 100.0 + 1e-12;
          cost -= price[t] * net[t];
        }
        if (ok && cost < best) {
          best = cost;
          best_net = net;
        }
      }
    }
  }
  return best_net;
}

}  // namespace

TEST_CASE("battery arbitrage matches a brute-force search") {
  const int T = 3;
  auto s = shell(T);
  const Series price{50.0, 10.0, 50.0};
  ProsumerSpec p;
  p.id = "battery";

  SUBCASE("empty lossless battery charges in the cheap hour") {
    p.storages.push_back({"bat", Carrier::electricity, 10.0, 0.0, 100.0, 1.0, 1.0, 0.0});
    const auto sched = schedule_at(s, p, price);
    const auto oracle = brute_force_battery(price, 0.0, 1.0);
    for (int t = 0; t < T; ++t) CHECK(sched.net_power[t] == doctest::Approx(oracle[t]).epsilon(1e-6));
    CHECK(std::abs(sched.net_power[0]) < 1e-6);
    CHECK(sched.net_power[1] == doctest::Approx(-10.0).epsilon(1e-6));
    CHECK(sched.net_power[2] == doctest::Approx(10.0).epsilon(1e-6));
  }
  SUBCASE("half-full lossy battery sells whenever it pays") {
    p.storages.push_back({"bat", Carrier::electricity, 10.0, 0.0, 100.0, 0.9, 0.9, 50.0});
    const auto sched = schedule_at(s, p, price);
    const auto oracle = brute_force_battery(price, 50.0, 0.9);
    for (int t = 0; t < T; ++t) CHECK(sched.net_power[t] == doctest::Approx(oracle[t]).epsilon(1e-6));
  }
}

TEST_CASE("generator responds to price against its marginal cost") {
  const int T = 4;
  auto s = shell(T);
  GeneratorSpec flat{"flat", 0.0, 20.0, Series(T, 5.0), Series(T, 100.0)};
  auto high = build_generator_problem(s, flat, Series(T, 30.0));
  for (double v : net_power_of(solve_ok(high.problem), high.output)) CHECK(v == doctest::Approx(100.0));
  auto low = build_generator_problem(s, flat, Series(T, 10.0));
  for (double v : net_power_of(solve_ok(low.problem), low.output)) CHECK(v == doctest::Approx(5.0));
  GeneratorSpec curved{"curved", 0.01, 10.0, Series(T, 0.0), Series(T, 100.0)};
  auto mid = build_generator_problem(s, curved, Series(T, 11.2));
  for (double v : net_power_of(solve_ok(mid.problem), mid.output)) CHECK(v == doctest::Approx(60.0).epsilon(1e-8));
  CHECK_THROWS_AS(build_generator_problem(s, curved, Series(T - 1, 11.2)), std::invalid_argument);
}

TEST_CASE("CHP output minus load gives net feed-in") {
  const int T = 2;
  auto s = shell(T);
  ProsumerSpec p;
  p.id = "chp_site";
  p.demands.push_back(demand("load", Carrier::electricity, Series(T, 4.0)));
  p.demands.push_back(demand("heat", Carrier::heat, Series(T, 12.0)));
  p.converters.push_back({"chp", Carrier::methane, Carrier::electricity, 0.4, 0.45, 25.0, false, true});
  p.converters.push_back({"boiler", Carrier::methane, Carrier::heat, 0.0, 0.9, 20.0, false, false});
  // At 500 EUR/MWh the CHP runs flat out: 0.4 * 25 = 10 MW against a 4 MW load.
  const auto sched = schedule_at(s, p, Series(T, 500.0));
  for (int t = 0; t < T; ++t) {
    CHECK(sched.converter_input[0][t] == doctest::Approx(25.0).epsilon(1e-7));
    CHECK(sched.net_power[t] == doctest::Approx(6.0).epsilon(1e-7));
    CHECK(sched.converter_input[1][t] == doctest::Approx((12.0 - 0.45 * 25.0) / 0.9).epsilon(1e-7));
  }
}

TEST_CASE("horizon mismatch and unknown carriers are rejected") {
  const int T = 4;
  auto s = shell(T);
  auto p = heat_house(T);
  CHECK_THROWS_AS(build_prosumer_problem(s, p, ForecastObjective{Series(T + 1, 1.0)}), std::invalid_argument);
  CHECK_THROWS_AS(build_prosumer_problem(s, p, AdmmObjective{Series(T, 1.0), 1.0, Series(2, 0.0), Series(T, 0.0)}),
                  std::invalid_argument);
  p.converters[1].input = Carrier::biomass;
  CHECK_THROWS_AS(build_prosumer_problem(s, p, CooptObjective{}), std::invalid_argument);
}

TEST_CASE("synthesized prosumers satisfy their physics") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto s = synthesize_scenario(12, 24 + 24 * static_cast<int>(seed % 2), seed);
    for (const auto& p : s.prosumers) {
      Series price(s.horizon);
      for (int t = 0; t < s.horizon; ++t) price[t] = 20.0 + 30.0 * std::sin(0.3 * t + seed) * std::sin(0.3 * t + seed);
      const auto sched = schedule_at(s, p, price);
      const auto audit = audit_schedule(s, p, initial_state(p), sched);
      CHECK(audit.net_power < 1e-6);
      CHECK(audit.local_balance < 1e-6);
      CHECK(audit.storage_dynamics < 1e-6);
      CHECK(audit.envelope < 1e-6);
      CHECK(audit.flex_total < 1e-6);
      CHECK(audit.simultaneous < 1e-6);

      // Energy conservation over the window.
      for (std::size_t i = 0; i < p.storages.size(); ++i) {
        const auto& st = p.storages[i];
        double flow = 0.0;
        for (int t = 0; t < s.horizon; ++t) {
          flow += st.eff_charge * sched.charge[i][t] - sched.discharge[i][t] / st.eff_discharge;
        }
        CHECK(std::abs(sched.energy[i].back() - st.initial_energy - flow) < 1e-6);
      }
      // Shift-only flexible demand.
      for (std::size_t d = 0; d < p.demands.size(); ++d) {
        if (!p.demands[d].flexible()) continue;
        double served = 0.0;
        for (int t = 0; t < s.horizon; ++t) served += sched.flex_rate(d, t, initial_state(p));
        CHECK(std::abs(served - p.demands[d].flex_total) < 1e-6);
      }
    }
  }
}

TEST_CASE("net consumption falls as the flat price rises") {
  const auto s = synthesize_scenario(16, 24, 3);
  for (const auto& p : s.prosumers) {
    double previous = std::numeric_limits<double>::infinity();
    for (double price : {5.0, 20.0, 40.0, 80.0, 300.0}) {
      const auto sched = schedule_at(s, p, Series(s.horizon, price));
      double consumption = 0.0;
      for (double v : sched.net_power) consumption -= v;
      CHECK(consumption <= previous + 1e-6);
      previous = consumption;
    }
  }
}

TEST_CASE("the ADMM penalty leaves an optimal dispatch in place") {
  const auto s = synthesize_scenario(10, 24, 5);
  Series price(s.horizon);
  for (int t = 0; t < s.horizon; ++t) price[t] = 30.0 + 10.0 * std::cos(0.26 * t);
  for (const auto& p : s.prosumers) {
    const auto base = schedule_at(s, p, price);
    auto built = build_prosumer_problem(
        s, p, AdmmObjective{price, 1.0, base.net_power, Series(s.horizon, 0.0)});
    const auto again = net_power_of(solve_ok(built.problem), built.vars);
    for (int t = 0; t < s.horizon; ++t) CHECK(again[t] == doctest::Approx(base.net_power[t]).epsilon(1e-5));
  }
  for (const auto& g : s.generators) {
    auto plain = build_generator_problem(s, g, price);
    const auto first = net_power_of(solve_ok(plain.problem), plain.output);
    const AdmmObjective pen{price, 3.0, first, Series(s.horizon, 0.0)};
    auto with = build_generator_problem(s, g, price, &pen);
    const auto second = net_power_of(solve_ok(with.problem), with.output);
    for (int t = 0; t < s.horizon; ++t) CHECK(second[t] == doctest::Approx(first[t]).epsilon(1e-6));
  }
}

TEST_CASE("windows start from a given state and wrap past the horizon") {
  const int T = 24;
  auto s = shell(T);
  ProsumerSpec p;
  p.id = "ev";
  p.demands.push_back(demand("load", Carrier::electricity, Series(T, 1.0)));
  DemandSpec ev = demand("ev", Carrier::electricity, Series(T, 0.0));
  ev.flex_min.assign(T, 0.0);
  ev.flex_max.assign(T, 12.0);
  ev.flex_total = 12.0;
  p.demands.push_back(ev);
  ProsumerState start = initial_state(p);
  start.hour = 20;
  start.flex_energy[1] = 9.0;
  auto built = build_prosumer_problem(s, p, start, 8, ForecastObjective{Series(8, 10.0)});
  const auto sched = extract_schedule(solve_ok(built.problem), built.vars);
  // Hours 23 and later pin the cumulative energy at its total.
  for (int k = 3; k < 8; ++k) CHECK(sched.flex_energy[1][k] == doctest::Approx(12.0));
  double served = 0.0;
  for (int k = 0; k < 8; ++k) served += sched.flex_rate(1, k, start);
  CHECK(served == doctest::Approx(3.0));
  const auto next = sched.state_after(0, start);
  CHECK(next.hour == 21);
  CHECK(next.flex_energy[1] == sched.flex_energy[1][0]);
}
