#include "mies/dispatch.hpp"

#include <algorithm>
#include <cmath>

namespace mies {

double base_electric_demand(const Scenario& s, int hour) {
  double total = 0.0;
  for (const auto& p : s.prosumers)
    for (const auto& d : p.demands)
      if (d.carrier == Carrier::electricity) total += at_hour(d.base, hour);
  return total;
}

namespace {

double supply_at(const Scenario& s, int hour, double price) {
  double total = 0.0;
  for (const auto& g : s.generators) {
    const double lo = at_hour(g.g_min, hour), hi = at_hour(g.g_max, hour);
    double out;
    if (g.alpha > 0.0)
      out = (price - g.beta) / (2.0 * g.alpha);
    else
      out = price > g.beta ? hi : (price < g.beta ? lo : 0.5 * (lo + hi));
    total += std::clamp(out, lo, hi);
  }
  return total;
}

}  // namespace

double merit_order_price(const Scenario& s, int hour, double demand) {
  double lo = -s.ceiling_price, hi = s.ceiling_price;
  if (supply_at(s, hour, hi) <= demand) return hi;
  if (supply_at(s, hour, lo) >= demand) return lo;
  for (int i = 0; i < 200 && hi - lo > 1e-12 * std::max(1.0, std::abs(hi)); ++i) {
    const double mid = 0.5 * (lo + hi);
    (supply_at(s, hour, mid) < demand ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<Series> economic_dispatch(const Scenario& s, const Series& net_load) {
  const int T = static_cast<int>(net_load.size());
  qp::Problem problem;
  std::vector<std::vector<qp::VarId>> gen(s.generators.size());
  for (std::size_t i = 0; i < s.generators.size(); ++i) {
    const auto& g = s.generators[i];
    for (int t = 0; t < T; ++t) {
      const auto v = problem.add_variable(g.id + ".g[" + std::to_string(t) + "]", at_hour(g.g_min, t),
                                          at_hour(g.g_max, t));
      problem.add_cost(v, g.beta, g.alpha);
      gen[i].push_back(v);
    }
  }
  for (int t = 0; t < T; ++t) {
    std::vector<qp::Term> terms;
    for (const auto& g : gen) terms.push_back({g[t], 1.0});
    problem.add_equality("balance[" + std::to_string(t) + "]", std::move(terms), net_load[t]);
  }
  const auto sol = qp::solve(problem);
  if (!sol.optimal())
    throw CoordinationError("generator re-dispatch failed: " + std::string(qp::to_string(sol.status)));
  std::vector<Series> out;
  for (const auto& g : gen) out.push_back(net_power_of(sol, g));
  return out;
}

}  // namespace mies
