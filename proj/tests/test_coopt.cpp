#include "mies/coopt.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>

using namespace mies;

TEST_CASE("micro scenario matches the KKT oracle") {
  const auto s = testing::micro_scenario();
  const auto d = solve_cooptimization(s);
  CHECK(d.method == "coopt");
  for (int t = 0; t < s.horizon; ++t) {
    CHECK(d.generation[0][t] == doctest::Approx(60.0).epsilon(1e-8));
    CHECK(std::abs(d.generation[1][t]) < 1e-6);
    CHECK(d.price[t] == doctest::Approx(11.2).epsilon(1e-7));
  }
  CHECK(max_imbalance(d) < 1e-6);
  CHECK(d.total_cost == doctest::Approx(24 * 636.0));
}

TEST_CASE("zero demand dispatches nothing") {
  const auto s = testing::micro_scenario(24, 0.0);
  const auto d = solve_cooptimization(s);
  for (const auto& g : d.generation)
    for (double v : g) CHECK(std::abs(v) < 1e-6);
  CHECK(std::abs(d.total_cost) < 1e-4);
}

TEST_CASE("system cost arithmetic") {
  auto s = testing::micro_scenario(1);
  DispatchResult d;
  d.price = {0.0};
  d.generation = {{60.0}, {0.0}};
  ProsumerSchedule p;
  p.net_power = {-60.0};
  d.prosumers = {p};
  CHECK(system_cost(d, s) == doctest::Approx(636.0));

  d.generation = {{0.0}, {0.0}};
  CHECK(system_cost(d, s) == 0.0);

  d.generation.pop_back();
  CHECK_THROWS_AS(system_cost(d, s), std::invalid_argument);
}

TEST_CASE("synthesized scenario: self-consistency, balance, marginal pricing") {
  const auto s = synthesize_scenario(30, 24, 7);
  const auto d = solve_cooptimization(s);
  CHECK(max_imbalance(d) < 1e-4);

  // Re-evaluating the cost on the dispatch reproduces the objective.
  CHECK(system_cost(d, s) == doctest::Approx(d.total_cost).epsilon(1e-12));

  const auto audit = audit_dispatch(d, s);
  CHECK(audit.physics.local_balance < 1e-6);
  CHECK(audit.physics.flex_total < 1e-6);
  CHECK(audit.physics.envelope < 1e-6);

  int interior = 0;
  for (std::size_t i = 0; i < s.generators.size(); ++i) {
    const auto& g = s.generators[i];
    for (int t = 0; t < s.horizon; ++t) {
      const double v = d.generation[i][t];
      if (v < g.g_min[t] + 1e-3 || v > g.g_max[t] - 1e-3) continue;
      ++interior;
      CHECK(2 * g.alpha * v + g.beta == doctest::Approx(d.price[t]).epsilon(1e-4));
    }
  }
  CHECK(interior > 0);
  for (double l : d.price) CHECK(l >= 0.0);
}

TEST_CASE("infeasible scenario raises a coordination error") {
  auto s = testing::micro_scenario(2, 300.0);  // exceeds 200 MW of capacity
  CHECK_THROWS_AS(solve_cooptimization(s), CoordinationError);
}

TEST_CASE("dispatch CSV output") {
  const auto s = testing::micro_scenario(3);
  const auto d = solve_cooptimization(s);
  const auto dir = std::filesystem::temp_directory_path() / "mies_coopt_csv";
  std::filesystem::remove_all(dir);
  write_dispatch_csv(d, s, dir);
  for (const char* f : {"price.csv", "generation.csv", "net_power.csv", "summary.csv", "storage_energy.csv"})
    CHECK(std::filesystem::exists(dir / f));
  std::ifstream in(dir / "generation.csv");
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  CHECK(header == "hour,g1,g2");
  CHECK(first.rfind("0,", 0) == 0);
  std::filesystem::remove_all(dir);
}
