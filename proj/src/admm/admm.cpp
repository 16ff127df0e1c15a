#include "mies/admm.hpp"

#include "mies/csv.hpp"

#include <chrono>
#include <cmath>

namespace mies {

void AdmmConfig::validate() const {
  auto fail = [](const char* what) { throw std::invalid_argument(std::string("admm config: ") + what); };
  if (!(rho0 > 0.0)) fail("rho0 must be positive");
  if (!(primal_tol > 0.0) || !(dual_tol > 0.0)) fail("tolerances must be positive");
  if (max_iters < 1) fail("max_iters must be at least 1");
  if (!(tau_incr > 1.0) || !(tau_decr > 1.0) || !(mu_ratio > 1.0)) fail("adaptation factors must exceed 1");
  if (adapt_iters < 0) fail("adapt_iters must be non-negative");
  if (threads < 1) fail("threads must be at least 1");
}

Series compute_imbalance(const std::vector<Series>& generation, const std::vector<Series>& net_power) {
  const std::size_t n = generation.size() + net_power.size();
  if (n == 0) throw std::invalid_argument("imbalance without agent reports");
  const std::size_t T = generation.empty() ? net_power.front().size() : generation.front().size();
  Series out(T, 0.0);
  auto add = [&](const std::vector<Series>& group) {
    for (const auto& x : group) {
      if (x.size() != T) throw std::invalid_argument("agent report does not cover the horizon");
      for (std::size_t t = 0; t < T; ++t) out[t] += x[t];
    }
  };
  add(generation);
  add(net_power);
  for (double& v : out) v /= static_cast<double>(n + 1);
  return out;
}

double aggregate_imbalance(const Series& imbalance) {
  if (imbalance.empty()) return 0.0;
  double sum = 0.0;
  for (double v : imbalance) sum += std::abs(v);
  return sum / static_cast<double>(imbalance.size());
}

Series update_price(const Series& price, double rho, const Series& imbalance) {
  if (price.size() != imbalance.size()) throw std::invalid_argument("price and imbalance lengths differ");
  Series out(price.size());
  for (std::size_t t = 0; t < price.size(); ++t) out[t] = price[t] - rho * imbalance[t];
  return out;
}

namespace {

double shift_norm(const std::vector<Series>& now, const std::vector<Series>& before, const Series& imb,
                  const Series& prev_imb) {
  if (now.size() != before.size()) throw std::invalid_argument("dual residual needs the previous iterate");
  double sq = 0.0;
  for (std::size_t a = 0; a < now.size(); ++a) {
    if (now[a].size() != imb.size() || before[a].size() != imb.size())
      throw std::invalid_argument("dual residual needs the previous iterate");
    for (std::size_t t = 0; t < imb.size(); ++t) {
      const double d = (now[a][t] - imb[t]) - (before[a][t] - prev_imb[t]);
      sq += d * d;
    }
  }
  return std::sqrt(sq);
}

}  // namespace

double compute_dual_residual(const std::vector<Series>& generation, const std::vector<Series>& previous_generation,
                             const std::vector<Series>& net_power, const std::vector<Series>& previous_net_power,
                             const Series& imbalance, const Series& previous_imbalance, double rho) {
  if (imbalance.size() != previous_imbalance.size())
    throw std::invalid_argument("dual residual needs the previous iterate");
  return rho * (shift_norm(generation, previous_generation, imbalance, previous_imbalance) +
                shift_norm(net_power, previous_net_power, imbalance, previous_imbalance));
}

double adapt_penalty(double rho, double imbalance, double dual_residual, const AdmmConfig& cfg) {
  if (imbalance > cfg.mu_ratio * dual_residual) return rho * cfg.tau_incr;
  if (dual_residual > cfg.mu_ratio * imbalance) return rho / cfg.tau_decr;
  return rho;
}

namespace {

Series initial_price(const Scenario& s) {
  const int T = s.horizon;
  double weighted = 0.0, total = 0.0, plain = 0.0;
  for (int t = 0; t < T; ++t) {
    const double d = base_electric_demand(s, t);
    const double l = merit_order_price(s, t, d);
    weighted += d * l;
    total += d;
    plain += l;
  }
  return Series(T, total > 0.0 ? weighted / total : plain / T);
}

// Private state of one agent: its previous dispatch and latest schedule.
struct AgentState {
  Series last;
  ProsumerSchedule schedule;
};

}  // namespace

AdmmResult run_price_response(const Scenario& s, const AdmmConfig& cfg) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  const int T = s.horizon;
  const int G = static_cast<int>(s.generators.size());
  const int P = static_cast<int>(s.prosumers.size());

  Series price = cfg.initial_price ? *cfg.initial_price : initial_price(s);
  if (static_cast<int>(price.size()) != T) throw std::invalid_argument("initial price must cover the horizon");

  std::vector<std::string> ids;
  for (const auto& g : s.generators) ids.push_back(g.id);
  for (const auto& p : s.prosumers) ids.push_back(p.id);
  std::vector<AgentState> agents(G + P);

  runtime::Coordinator coordinator(cfg.threads);
  AdmmResult out;
  DispatchResult& result = out.dispatch;
  result.method = "admm";

  auto work = [&](int a, const runtime::Envelope& in) -> runtime::Payload {
    const auto& msg = in.as<runtime::PriceBroadcast>();
    AgentState& me = agents[a];
    const bool penalized = !msg.imbalance.empty();
    const AdmmObjective admm{msg.price, msg.rho, me.last, msg.imbalance};
    qp::Solution sol;
    if (a < G) {
      auto gp = build_generator_problem(s, s.generators[a], msg.price, penalized ? &admm : nullptr);
      sol = qp::solve(gp.problem);
      if (!sol.optimal()) throw std::runtime_error("subproblem " + std::string(qp::to_string(sol.status)));
      me.last = net_power_of(sol, gp.output);
    } else {
      const auto& spec = s.prosumers[a - G];
      auto pp = penalized ? build_prosumer_problem(s, spec, admm)
                          : build_prosumer_problem(s, spec, ForecastObjective{msg.price});
      sol = qp::solve(pp.problem);
      if (!sol.optimal()) throw std::runtime_error("subproblem " + std::string(qp::to_string(sol.status)));
      me.schedule = extract_schedule(sol, pp.vars);
      me.last = me.schedule.net_power;
    }
    return runtime::DispatchReport{me.last};
  };

  double rho = cfg.rho0;
  std::vector<Series> prev_gen(G, Series(T, 0.0)), prev_net(P, Series(T, 0.0));
  Series prev_imbalance(T, 0.0), imbalance;
  bool converged = false;
  int solves = 0;
  for (int k = 1; k <= cfg.max_iters; ++k) {
    runtime::PriceBroadcast msg{price, k == 1 ? Series{} : imbalance, k == 1 ? 0.0 : rho};
    std::vector<runtime::Envelope> reports;
    try {
      reports = coordinator.execute_round("respond", msg, ids, work);
    } catch (const runtime::AgentFailure& e) {
      throw CoordinationError(e.what());
    }
    solves += G + P;

    std::vector<Series> gen(G), net(P);
    for (int a = 0; a < G; ++a) gen[a] = reports[a].as<runtime::DispatchReport>().series;
    for (int j = 0; j < P; ++j) net[j] = reports[G + j].as<runtime::DispatchReport>().series;

    AdmmIterate it;
    coordinator.timed("residuals", [&] {
      imbalance = compute_imbalance(gen, net);
      it.dual = compute_dual_residual(gen, prev_gen, net, prev_net, imbalance, prev_imbalance, rho);
      it.primal = aggregate_imbalance(imbalance);
    });
    it.iteration = k;
    it.price = price;
    it.rho = rho;
    it.imbalance = imbalance;
    out.trace.push_back(it);

    prev_gen = std::move(gen);
    prev_net = std::move(net);
    prev_imbalance = imbalance;
    if (k >= 2 && it.primal <= cfg.primal_tol && it.dual <= cfg.dual_tol) {
      converged = true;
      break;
    }
    if (k == cfg.max_iters) break;
    price = update_price(price, rho, imbalance);
    if (k < cfg.adapt_iters) rho = adapt_penalty(rho, it.primal, it.dual, cfg);
  }

  // Generators absorb the remaining imbalance at least cost.
  Series net_load(T, 0.0);
  for (const auto& n : prev_net)
    for (int t = 0; t < T; ++t) net_load[t] -= n[t];
  result.generation = economic_dispatch(s, net_load);
  ++solves;

  for (int j = 0; j < P; ++j) result.prosumers.push_back(agents[G + j].schedule);
  result.price = out.trace.back().price;
  result.total_cost = system_cost(result, s);
  auto& diag = result.diagnostics;
  diag.iterations = static_cast<int>(out.trace.size());
  diag.solve_count = solves;
  diag.converged = converged;
  diag.primal_residual = out.trace.back().primal;
  diag.dual_residual = out.trace.back().dual;
  diag.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  out.events = coordinator.trace();
  return out;
}

void write_admm_trace_csv(const std::vector<AdmmIterate>& trace, const std::filesystem::path& file) {
  CsvWriter w(file);
  w.row({"iteration", "primal", "dual", "rho"});
  for (const auto& it : trace)
    w.row({std::to_string(it.iteration), format_number(it.primal), format_number(it.dual), format_number(it.rho)});
}

}  // namespace mies
