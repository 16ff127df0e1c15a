#include "mies/coopt.hpp"

#include <chrono>

namespace mies {

DispatchResult solve_cooptimization(const Scenario& s) {
  const auto started = std::chrono::steady_clock::now();
  const int T = s.horizon;
  qp::Problem problem;

  std::vector<std::vector<qp::VarId>> gen(s.generators.size());
  for (std::size_t i = 0; i < s.generators.size(); ++i) {
    const auto& g = s.generators[i];
    for (int t = 0; t < T; ++t) {
      const auto v = problem.add_variable(g.id + ".g[" + std::to_string(t) + "]", g.g_min[t], g.g_max[t]);
      problem.add_cost(v, g.beta, g.alpha);
      gen[i].push_back(v);
    }
  }

  std::vector<ProsumerVars> pros;
  for (const auto& p : s.prosumers) pros.push_back(add_prosumer(problem, s, p, initial_state(p), T));

  std::vector<qp::RowId> balance;
  for (int t = 0; t < T; ++t) {
    std::vector<qp::Term> terms;
    for (const auto& g : gen) terms.push_back({g[t], 1.0});
    for (const auto& v : pros) terms.push_back({v.net[t], 1.0});
    balance.push_back(problem.add_equality("balance[" + std::to_string(t) + "]", std::move(terms), 0.0));
  }

  const qp::Solution sol = qp::solve(problem);
  if (!sol.optimal())
    throw CoordinationError("co-optimization failed: " + std::string(qp::to_string(sol.status)));

  DispatchResult out;
  out.method = "coopt";
  for (const auto& g : gen) out.generation.push_back(net_power_of(sol, g));
  for (const auto& v : pros) out.prosumers.push_back(extract_schedule(sol, v));
  // Balance dual: marginal cost of one more MW of net demand in hour t.
  for (const auto& r : balance) out.price.push_back(sol.dual(r));
  out.total_cost = system_cost(out, s);
  out.diagnostics.iterations = sol.iterations;
  out.diagnostics.solve_count = 1;
  out.diagnostics.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

}  // namespace mies
