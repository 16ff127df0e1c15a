#pragma once

#include "mies/dispatch.hpp"

namespace mies {

/// Centralized least-cost dispatch of all agents; prices are the duals of
/// the hourly electricity balance. Throws CoordinationError when the solver
/// does not reach optimality.
DispatchResult solve_cooptimization(const Scenario& s);

}  // namespace mies
