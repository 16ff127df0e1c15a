// Command line front end: run one method, compare all three, run the scaling
// matrix, or synthesize a scenario. Every command writes CSV output and a
// manifest.json with its full configuration.

#include "mies/bench.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

namespace {

using namespace mies;
using nlohmann::json;

struct Options {
  std::string method;
  std::string scenario;
  std::string out;
  double rho = 1.0;
  double tol = 0.1;
  int max_iters = 1000;
  int lookahead = 24;
  int clearing_window = 1;
  int threads = runtime::default_threads();
  std::vector<int> agents{30};
  std::vector<int> horizons{24, 72, 168};
  std::vector<std::string> methods{"coopt", "admm", "auction"};
  std::vector<int> thread_list{1};
  std::uint64_t seed = 1;
  int repeats = 1;
  int synth_agents = 30;
  int synth_horizon = 24;
};

void add_method_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--rho", o.rho, "initial ADMM penalty")->check(CLI::PositiveNumber);
  cmd->add_option("--tol", o.tol, "ADMM primal and dual tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--max-iters", o.max_iters, "ADMM iteration limit")->check(CLI::PositiveNumber);
  cmd->add_option("--lookahead", o.lookahead, "auction look-ahead in hours")->check(CLI::PositiveNumber);
  cmd->add_option("--clearing-window", o.clearing_window, "auction clearing window in hours (only 1)");
  cmd->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
}

MethodConfig method_config(const Options& o) {
  MethodConfig cfg;
  cfg.admm.rho0 = o.rho;
  cfg.admm.primal_tol = o.tol;
  cfg.admm.dual_tol = o.tol;
  cfg.admm.max_iters = o.max_iters;
  cfg.admm.threads = o.threads;
  cfg.auction.lookahead = o.lookahead;
  cfg.auction.clearing_window = o.clearing_window;
  cfg.auction.threads = o.threads;
  return cfg;
}

json config_json(const MethodConfig& cfg) {
  return {{"admm",
           {{"rho0", cfg.admm.rho0},
            {"primal_tol", cfg.admm.primal_tol},
            {"dual_tol", cfg.admm.dual_tol},
            {"max_iters", cfg.admm.max_iters},
            {"tau_incr", cfg.admm.tau_incr},
            {"tau_decr", cfg.admm.tau_decr},
            {"mu_ratio", cfg.admm.mu_ratio},
            {"adapt_iters", cfg.admm.adapt_iters}}},
          {"auction",
           {{"lookahead", cfg.auction.lookahead},
            {"clearing_window", cfg.auction.clearing_window},
            {"extend_beyond_horizon", cfg.auction.extend_beyond_horizon},
            {"flexibility_range", cfg.auction.flexibility_range},
            {"refine_curve", cfg.auction.refine_curve},
            {"divide_opportunity_cost", cfg.auction.divide_opportunity_cost}}}};
}

json cells_json(const ComparisonReport& r) {
  json cells = json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"method", to_string(c.method)},
                     {"agents", c.agents},
                     {"horizon", c.horizon},
                     {"threads", c.threads},
                     {"seed", c.seed},
                     {"scenario_hash", c.scenario_hash},
                     {"status", c.ok ? "ok" : "failed"},
                     {"error", c.error},
                     {"cost", c.cost},
                     {"wall_seconds", c.wall_seconds},
                     {"iterations", c.iterations},
                     {"solve_count", c.solve_count},
                     {"converged", c.converged}});
  }
  return cells;
}

void write_manifest(const std::filesystem::path& dir, const json& manifest) {
  std::ofstream f(dir / "manifest.json");
  if (!f) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  f << manifest.dump(2) << '\n';
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> methods;
  for (const auto& n : names) {
    const auto m = parse_method(n);
    if (!m) throw CLI::ValidationError("--methods", "unknown method " + n);
    methods.push_back(*m);
  }
  if (methods.empty()) throw CLI::ValidationError("--methods", "at least one method is required");
  return methods;
}

int run_command(const Options& o) {
  const auto method = parse_method(o.method);
  const Scenario s = load_scenario(o.scenario);
  const MethodConfig cfg = method_config(o);
  if (*method == Method::auction) cfg.auction.validate(s);
  const std::filesystem::path out = o.out;
  std::filesystem::create_directories(out);

  const MethodRun run = run_method(*method, s, cfg, o.threads);
  write_dispatch_csv(run.dispatch, s, out);
  const runtime::EventTrace* events = nullptr;
  if (run.admm) {
    write_admm_trace_csv(run.admm->trace, out / "admm_trace.csv");
    events = &run.admm->events;
  }
  if (run.auction) {
    write_bid_log_csv(*run.auction, out / "bids.csv");
    write_clearing_prices_csv(*run.auction, out / "clearing_prices.csv");
    events = &run.auction->events;
  }
  if (events && !events->empty()) runtime::write_profile_csv(runtime::profile_report(*events), out / "profile.csv");

  const auto& d = run.dispatch.diagnostics;
  write_manifest(out, {{"command", "run"},
                       {"method", o.method},
                       {"scenario", o.scenario},
                       {"scenario_hash", scenario_hash(s)},
                       {"threads", o.threads},
                       {"config", config_json(cfg)},
                       {"result",
                        {{"total_cost", run.dispatch.total_cost},
                         {"wall_seconds", run.wall_seconds},
                         {"iterations", d.iterations},
                         {"solve_count", d.solve_count},
                         {"converged", d.converged},
                         {"max_imbalance", max_imbalance(run.dispatch)}}}});
  std::cout << o.method << ": cost " << run.dispatch.total_cost << " EUR, " << run.wall_seconds << " s\n";
  return d.converged ? 0 : 3;
}

int compare_command(const Options& o) {
  const Scenario s = load_scenario(o.scenario);
  const MethodConfig cfg = method_config(o);
  const std::filesystem::path out = o.out;
  const auto report = run_comparison(s, cfg, {Method::coopt, Method::admm, Method::auction}, out);
  json manifest{{"command", "compare"},
                {"scenario", o.scenario},
                {"scenario_hash", scenario_hash(s)},
                {"threads", o.threads},
                {"config", config_json(cfg)},
                {"cells", cells_json(report)}};
  if (report.ordering) {
    manifest["ordering"] = {{"admm_gap", report.ordering->admm_gap},
                            {"auction_gap", report.ordering->auction_gap},
                            {"admm_within_tolerance", report.ordering->admm_within},
                            {"auction_not_below_coopt", report.ordering->auction_above}};
  }
  write_manifest(out, manifest);
  bool ok = true;
  for (const auto& c : report.cells) {
    std::cout << to_string(c.method) << ": ";
    if (c.ok) {
      std::cout << "cost " << c.cost << " EUR, " << c.wall_seconds << " s\n";
    } else {
      std::cout << "failed: " << c.error << '\n';
      ok = false;
    }
  }
  return ok ? 0 : 1;
}

int scale_command(const Options& o) {
  ExperimentMatrix m;
  m.methods = parse_methods(o.methods);
  m.horizons = o.horizons;
  m.agents = o.agents;
  m.threads = o.thread_list;
  m.seeds = {o.seed};
  m.repeats = o.repeats;
  m.config = method_config(o);
  const auto report = run_scaling_matrix(m);
  const std::filesystem::path out = o.out;
  std::filesystem::create_directories(out);
  write_report_csv(report, out / "scaling.csv");
  write_manifest(out, {{"command", "scale"},
                       {"methods", o.methods},
                       {"horizons", o.horizons},
                       {"agents", o.agents},
                       {"threads", o.thread_list},
                       {"seed", o.seed},
                       {"repeats", o.repeats},
                       {"config", config_json(m.config)},
                       {"cells", cells_json(report)}});
  int failed = 0;
  for (const auto& c : report.cells) {
    std::cout << to_string(c.method) << " agents " << c.agents << " horizon " << c.horizon << " threads "
              << c.threads << ": ";
    if (c.ok) {
      std::cout << c.wall_seconds << " s (x" << c.normalized_runtime << ")\n";
    } else {
      std::cout << "failed: " << c.error << '\n';
      ++failed;
    }
  }
  return failed ? 1 : 0;
}

int synth_command(const Options& o) {
  const Scenario s = synthesize_scenario(o.synth_agents, o.synth_horizon, o.seed);
  const std::filesystem::path out = o.out;
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  save_scenario(s, out);
  std::cout << "wrote " << out.string() << " (" << s.generators.size() << " generators, " << s.prosumers.size()
            << " prosumers, hash " << scenario_hash(s) << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-carrier energy system dispatch under three coordination methods"};
  app.require_subcommand(1);
  Options o;

  auto* run = app.add_subcommand("run", "dispatch a scenario with one method");
  run->add_option("--method", o.method, "coopt, admm or auction")
      ->required()
      ->check(CLI::IsMember({"coopt", "admm", "auction"}));
  run->add_option("--scenario", o.scenario, "scenario YAML file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", o.out, "output directory")->required();
  add_method_flags(run, o);

  auto* compare = app.add_subcommand("compare", "run all three methods on one scenario");
  compare->add_option("--scenario", o.scenario, "scenario YAML file")->required()->check(CLI::ExistingFile);
  compare->add_option("--out", o.out, "output directory")->required();
  add_method_flags(compare, o);

  auto* scale = app.add_subcommand("scale", "runtime scaling matrix on synthesized scenarios");
  scale->add_option("--agents", o.agents, "agent counts")->delimiter(',');
  scale->add_option("--horizons", o.horizons, "horizons in hours")->delimiter(',');
  scale->add_option("--methods", o.methods, "methods")->delimiter(',');
  scale->add_option("--threads", o.thread_list, "thread counts")->delimiter(',');
  scale->add_option("--seed", o.seed, "synthesis seed");
  scale->add_option("--repeats", o.repeats, "timing repeats per cell (fastest kept)")->check(CLI::PositiveNumber);
  scale->add_option("--out", o.out, "output directory")->required();
  scale->add_option("--rho", o.rho, "initial ADMM penalty")->check(CLI::PositiveNumber);
  scale->add_option("--tol", o.tol, "ADMM primal and dual tolerance")->check(CLI::PositiveNumber);
  scale->add_option("--max-iters", o.max_iters, "ADMM iteration limit")->check(CLI::PositiveNumber);
  scale->add_option("--lookahead", o.lookahead, "auction look-ahead in hours")->check(CLI::PositiveNumber);

  auto* synth = app.add_subcommand("synth", "write a synthesized scenario");
  synth->add_option("--agents", o.synth_agents, "number of agents")->check(CLI::Range(5, 100000));
  synth->add_option("--horizon", o.synth_horizon, "horizon in hours")->check(CLI::Range(24, 100000));
  synth->add_option("--seed", o.seed, "synthesis seed");
  synth->add_option("--out", o.out, "scenario YAML path")->required();

  try {
    app.parse(argc, argv);
    if (o.clearing_window != 1) {
      throw CLI::ValidationError("--clearing-window",
                                 "clearing windows longer than 1 h need block bids, which are not supported");
    }
    if (*run) return run_command(o);
    if (*compare) return compare_command(o);
    if (*scale) return scale_command(o);
    return synth_command(o);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
