#include "mies/agents.hpp"

#include <stdexcept>

namespace mies {

GeneratorProblem build_generator_problem(const Scenario& s, const GeneratorSpec& g, const Series& price,
                                         const AdmmObjective* penalty) {
  const int T = s.horizon;
  if (static_cast<int>(price.size()) != T) {
    throw std::invalid_argument("horizon mismatch: price has " + std::to_string(price.size()) +
                                " values, expected " + std::to_string(T));
  }
  if (penalty && (static_cast<int>(penalty->previous.size()) != T ||
                  static_cast<int>(penalty->imbalance.size()) != T)) {
    throw std::invalid_argument("horizon mismatch: penalty series must cover the horizon");
  }
  GeneratorProblem out;
  out.problem.set_sense(qp::Sense::maximize);
  for (int t = 0; t < T; ++t) {
    const auto v = out.problem.add_variable(g.id + ".g[" + std::to_string(t) + "]", g.g_min[t], g.g_max[t]);
    out.problem.add_cost(v, price[t] - g.beta, -g.alpha);
    if (penalty) {
      const double target = penalty->previous[t] - penalty->imbalance[t];
      out.problem.add_cost(v, penalty->rho * target, -0.5 * penalty->rho);
      out.problem.add_constant(-0.5 * penalty->rho * target * target);
    }
    out.output.push_back(v);
  }
  return out;
}

}  // namespace mies
