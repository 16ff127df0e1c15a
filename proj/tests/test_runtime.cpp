#include "mies/runtime.hpp"

#include <doctest.h>

#include <atomic>
#include <chrono>
#include <numeric>
#include <thread>

using namespace mies;
using namespace mies::runtime;

namespace {

const std::vector<std::string> kAgents{"a0", "a1", "a2"};

Payload sleep_ms(int ms) {
  std::this_thread::sleep_for(std::chrono::milliseconds(ms));
  return DispatchReport{{static_cast<double>(ms)}};
}

}  // namespace

TEST_CASE("worker pool visits every index once") {
  for (int threads : {1, 2, 4}) {
    WorkerPool pool(threads);
    CHECK(pool.size() == threads);
    std::vector<std::atomic<int>> hits(100);
    for (int rep = 0; rep < 5; ++rep) pool.parallel_for(100, [&](int i) { ++hits[i]; });
    for (auto& h : hits) CHECK(h.load() == 5);
  }
  CHECK_THROWS_AS(WorkerPool(0), std::invalid_argument);
}

TEST_CASE("echo round returns reports in agent order") {
  Coordinator c(3);
  const auto reports = c.execute_round("echo", Tick{7}, kAgents, [](int i, const Envelope& in) -> Payload {
    // Reverse finishing order.
    std::this_thread::sleep_for(std::chrono::milliseconds(5 * (3 - i)));
    return ClearingNotice{in.as<Tick>().hour, static_cast<double>(i), 0.0};
  });
  REQUIRE(reports.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(reports[i].sender == kAgents[i]);
    CHECK(reports[i].round == 1);
    CHECK(reports[i].as<ClearingNotice>().hour == 7);
    CHECK(reports[i].as<ClearingNotice>().price == i);
  }
}

TEST_CASE("sleeping agents run concurrently") {
  const std::vector<int> ms{30, 10, 20};
  Coordinator c(3);
  const auto start = std::chrono::steady_clock::now();
  c.execute_round("sleep", Tick{}, kAgents, [&](int i, const Envelope&) { return sleep_ms(ms[i]); });
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(elapsed >= 0.030);
  CHECK(elapsed < 0.055);  // sequential would take 60 ms

  const auto summary = profile_report(c.trace());
  REQUIRE(summary.rounds.size() == 1);
  CHECK(summary.rounds[0].slowest_agent == "a0");
  CHECK(summary.slowest_agent == "a0");
  CHECK(summary.rounds[0].critical_path >= 0.030);
  CHECK(summary.rounds[0].busy >= 0.060);
}

TEST_CASE("single agent: critical path equals its duration") {
  Coordinator c(1);
  c.execute_round("sleep", Tick{}, {"solo"}, [](int, const Envelope&) { return sleep_ms(5); });
  const auto summary = profile_report(c.trace());
  CHECK(summary.rounds[0].critical_path == doctest::Approx(summary.rounds[0].slowest));
  CHECK(summary.agents[0].idle == doctest::Approx(0.0));
}

TEST_CASE("failing agent aborts the round with attribution") {
  Coordinator c(2);
  try {
    c.execute_round("fail", Tick{}, kAgents, [](int i, const Envelope&) -> Payload {
      if (i == 1) throw std::runtime_error("infeasible");
      return Tick{};
    });
    FAIL("no error raised");
  } catch (const AgentFailure& e) {
    CHECK(e.agent() == "a1");
    CHECK(e.round() == 1);
    CHECK(std::string(e.what()).find("infeasible") != std::string::npos);
  }
}

TEST_CASE("rounds increase and payloads carry coordinator provenance") {
  Coordinator c(2);
  c.execute_round("p1", Tick{}, kAgents, [](int, const Envelope&) -> Payload { return Tick{}; });
  std::vector<Payload> individual{ClearingNotice{0, 1, 1}, ClearingNotice{0, 1, 2}, ClearingNotice{0, 1, 3}};
  const auto r = c.execute_round("p2", individual, kAgents, [](int, const Envelope& in) -> Payload {
    return DispatchReport{{in.as<ClearingNotice>().accepted}};
  });
  CHECK(r[2].as<DispatchReport>().series[0] == 3.0);
  CHECK(c.round() == 2);
  for (const auto& e : c.trace().events()) CHECK(e.input_sender == "coordinator");
  CHECK(c.trace().events().back().round == 2);

  c.timed("clear", [] {});
  const auto summary = profile_report(c.trace());
  CHECK(summary.rounds.size() == 2);
  CHECK(summary.coordinator >= 0.0);
  CHECK_THROWS_AS(profile_report(EventTrace{}), std::invalid_argument);
}

TEST_CASE("profile CSV files") {
  Coordinator c(1);
  c.execute_round("p", Tick{}, kAgents, [](int, const Envelope&) -> Payload { return Tick{}; });
  const auto file = std::filesystem::temp_directory_path() / "mies_profile.csv";
  write_profile_csv(profile_report(c.trace()), file);
  CHECK(std::filesystem::exists(file));
  CHECK(std::filesystem::exists(file.parent_path() / "mies_profile_agents.csv"));
}
