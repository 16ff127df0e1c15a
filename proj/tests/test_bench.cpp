#include "mies/bench.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace mies;

TEST_CASE("method names") {
  for (Method m : {Method::coopt, Method::admm, Method::auction}) CHECK(parse_method(to_string(m)) == m);
  CHECK(!parse_method("simplex"));
}

TEST_CASE("micro comparison: all methods coincide") {
  const Scenario s = testing::micro_scenario(24);
  const auto dir = std::filesystem::temp_directory_path() / "mies_bench_compare";
  std::filesystem::remove_all(dir);
  const auto r = run_comparison(s, {}, {Method::coopt, Method::admm, Method::auction}, dir);
  REQUIRE(r.cells.size() == 3);
  for (const auto& c : r.cells) {
    CAPTURE(to_string(c.method));
    CHECK(c.ok);
    CHECK(c.scenario_hash == scenario_hash(s));
    CHECK(c.cost == doctest::Approx(r.cells[0].cost).epsilon(1e-2));
    CHECK(std::filesystem::exists(dir / c.price_file));
  }
  REQUIRE(r.ordering);
  CHECK(r.ordering->admm_within);
  CHECK(r.ordering->auction_above);
  CHECK(std::filesystem::exists(dir / "comparison.csv"));
  CHECK(std::filesystem::exists(dir / "auction" / "bids.csv"));
  CHECK(std::filesystem::exists(dir / "admm" / "admm_trace.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("comparison isolates failing methods") {
  const Scenario s = testing::micro_scenario(24);
  MethodConfig cfg;
  cfg.auction.lookahead = 48;
  const auto r = run_comparison(s, cfg);
  REQUIRE(r.cells.size() == 3);
  CHECK(r.cells[0].ok);
  CHECK(r.cells[1].ok);
  CHECK(!r.cells[2].ok);
  CHECK(r.cells[2].error.find("lookahead") != std::string::npos);
  CHECK(!r.ordering);
  CHECK_THROWS_AS(run_comparison(s, {}, {}), std::invalid_argument);
}

TEST_CASE("scaling matrix normalization") {
  ExperimentMatrix m;
  m.methods = {Method::auction};
  m.horizons = {24, 48};
  m.agents = {6};
  m.threads = {1};
  m.seeds = {1};
  const auto r = run_scaling_matrix(m);
  REQUIRE(r.cells.size() == 2);
  CHECK(r.cells[0].ok);
  CHECK(r.cells[1].ok);
  CHECK(r.cells[0].horizon == 24);
  CHECK(r.cells[0].normalized_runtime == 1.0);
  CHECK(r.cells[1].normalized_runtime == r.cells[1].wall_seconds / r.cells[0].wall_seconds);
  CHECK(r.cells[0].scenario_hash == scenario_hash(synthesize_scenario(6, 24, 1)));
}

TEST_CASE("matrix validation") {
  ExperimentMatrix m;
  m.methods = {Method::coopt};
  m.horizons = {24};
  m.agents = {6};
  m.threads = {1};
  m.seeds = {1};
  CHECK_NOTHROW(m.validate());
  auto bad = m;
  bad.methods.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = m;
  bad.threads = {0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = m;
  bad.horizons = {12};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("report CSV") {
  ExperimentMatrix m;
  m.methods = {Method::coopt};
  m.horizons = {24, 48};
  m.agents = {6, 8};
  m.threads = {1};
  m.seeds = {2};
  const auto r = run_scaling_matrix(m);
  CHECK(r.cells.size() == 4);
  const auto file = std::filesystem::temp_directory_path() / "mies_scaling.csv";
  write_report_csv(r, file);
  std::ifstream in(file);
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 5);
  std::filesystem::remove(file);
}
