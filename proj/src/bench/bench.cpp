#include "mies/bench.hpp"
#include "mies/coopt.hpp"
#include "mies/csv.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <tuple>

namespace mies {

namespace {

CellResult attempt(Method m, const Scenario& s, const MethodConfig& cfg, int threads, int repeats,
                   std::optional<MethodRun>* keep = nullptr) {
  CellResult cell;
  cell.method = m;
  cell.agents = s.num_agents();
  cell.horizon = s.horizon;
  cell.threads = threads;
  cell.scenario_hash = scenario_hash(s);
  try {
    for (int r = 0; r < repeats; ++r) {
      MethodRun run = run_method(m, s, cfg, threads);
      if (r == 0 || run.wall_seconds < cell.wall_seconds) cell.wall_seconds = run.wall_seconds;
      cell.cost = run.dispatch.total_cost;
      cell.iterations = run.dispatch.diagnostics.iterations;
      cell.solve_count = run.dispatch.diagnostics.solve_count;
      cell.converged = run.dispatch.diagnostics.converged;
      if (keep && r == 0) *keep = std::move(run);
    }
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
  }
  return cell;
}

void check_axis(bool empty, const char* name) {
  if (empty) throw std::invalid_argument(std::string("experiment matrix has no ") + name);
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::coopt: return "coopt";
    case Method::admm: return "admm";
    case Method::auction: return "auction";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
  for (Method m : {Method::coopt, Method::admm, Method::auction}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

MethodRun run_method(Method m, const Scenario& s, const MethodConfig& cfg, int threads) {
  MethodRun run;
  run.method = m;
  const auto start = std::chrono::steady_clock::now();
  switch (m) {
    case Method::coopt:
      run.dispatch = solve_cooptimization(s);
      break;
    case Method::admm: {
      AdmmConfig c = cfg.admm;
      c.threads = threads;
      run.admm = run_price_response(s, c);
      run.dispatch = run.admm->dispatch;
      break;
    }
    case Method::auction: {
      AuctionConfig c = cfg.auction;
      c.threads = threads;
      run.auction = run_market_auction(s, c);
      run.dispatch = run.auction->dispatch;
      break;
    }
  }
  run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

ComparisonReport run_comparison(const Scenario& s, const MethodConfig& cfg, const std::vector<Method>& methods,
                                const std::optional<std::filesystem::path>& out, double admm_tolerance) {
  if (methods.empty()) throw std::invalid_argument("no methods to compare");
  const int threads = std::max(cfg.admm.threads, cfg.auction.threads);
  if (out) std::filesystem::create_directories(*out);

  ComparisonReport report;
  std::map<Method, double> cost;
  for (Method m : methods) {
    std::optional<MethodRun> run;
    CellResult cell = attempt(m, s, cfg, threads, 1, &run);
    cell.normalized_runtime = std::nan("");
    if (cell.ok) {
      cost[m] = cell.cost;
      if (out) {
        const auto dir = *out / std::string(to_string(m));
        try {
          std::filesystem::create_directories(dir);
          write_dispatch_csv(run->dispatch, s, dir);
          if (run->admm) write_admm_trace_csv(run->admm->trace, dir / "admm_trace.csv");
          if (run->auction) {
            write_bid_log_csv(*run->auction, dir / "bids.csv");
            write_clearing_prices_csv(*run->auction, dir / "clearing_prices.csv");
          }
          cell.price_file = std::string(to_string(m)) + "/price.csv";
        } catch (const std::exception& e) {
          cell.error = std::string("output: ") + e.what();
        }
      }
    }
    report.cells.push_back(std::move(cell));
  }
  if (cost.count(Method::coopt) && cost.count(Method::admm) && cost.count(Method::auction)) {
    const double base = cost[Method::coopt];
    CostOrdering o;
    o.admm_gap = (cost[Method::admm] - base) / std::abs(base);
    o.auction_gap = (cost[Method::auction] - base) / std::abs(base);
    o.admm_within = std::abs(o.admm_gap) <= admm_tolerance;
    o.auction_above = cost[Method::auction] >= base * (1.0 - 1e-9);
    report.ordering = o;
  }
  if (out) write_report_csv(report, *out / "comparison.csv");
  return report;
}

void ExperimentMatrix::validate() const {
  check_axis(methods.empty(), "methods");
  check_axis(horizons.empty(), "horizons");
  check_axis(agents.empty(), "agent counts");
  check_axis(threads.empty(), "thread counts");
  check_axis(seeds.empty(), "seeds");
  for (int h : horizons) {
    if (h < 24) throw std::invalid_argument("horizons must be at least 24 h");
  }
  for (int a : agents) {
    if (a < 5) throw std::invalid_argument("agent counts must be at least 5");
  }
  for (int t : threads) {
    if (t < 1) throw std::invalid_argument("thread counts must be at least 1");
  }
  if (repeats < 1) throw std::invalid_argument("repeats must be at least 1");
}

ComparisonReport run_scaling_matrix(const ExperimentMatrix& m) {
  m.validate();
  ComparisonReport report;
  for (Method method : m.methods) {
    for (int threads : m.threads) {
      for (auto seed : m.seeds) {
        for (int agents : m.agents) {
          for (int horizon : m.horizons) {
            const Scenario s = synthesize_scenario(agents, horizon, seed);
            CellResult cell = attempt(method, s, m.config, threads, m.repeats);
            cell.agents = agents;
            cell.seed = seed;
            report.cells.push_back(std::move(cell));
          }
        }
      }
    }
  }

  std::map<std::tuple<Method, int, std::uint64_t>, const CellResult*> baseline;
  for (const auto& c : report.cells) {
    if (!c.ok) continue;
    auto& b = baseline[{c.method, c.threads, c.seed}];
    const auto size = [](const CellResult* x) { return std::make_pair(x->agents * x->horizon, x->agents); };
    if (!b || size(&c) < size(b)) b = &c;
  }
  for (auto& c : report.cells) {
    const auto it = baseline.find({c.method, c.threads, c.seed});
    c.normalized_runtime = c.ok && it != baseline.end() && it->second->wall_seconds > 0.0
                               ? c.wall_seconds / it->second->wall_seconds
                               : std::nan("");
  }
  return report;
}

void write_report_csv(const ComparisonReport& r, const std::filesystem::path& file) {
  CsvWriter csv(file);
  csv.row({"method", "agents", "horizon", "threads", "seed", "scenario_hash", "status", "cost", "wall_seconds",
           "normalized_runtime", "iterations", "solve_count", "converged", "price_file", "error"});
  for (const auto& c : r.cells) {
    std::string error = c.error;
    std::replace(error.begin(), error.end(), ',', ';');
    std::replace(error.begin(), error.end(), '\n', ' ');
    csv.row({std::string(to_string(c.method)), std::to_string(c.agents), std::to_string(c.horizon),
             std::to_string(c.threads), std::to_string(c.seed), std::to_string(c.scenario_hash),
             c.ok ? "ok" : "failed", format_number(c.cost), format_number(c.wall_seconds),
             format_number(c.normalized_runtime), std::to_string(c.iterations), std::to_string(c.solve_count),
             c.converged ? "1" : "0", c.price_file, error});
  }
}

}  // namespace mies
