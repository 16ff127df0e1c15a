#pragma once

#include "mies/scenario.hpp"

namespace mies::testing {

/// Two generators (0.01 g^2 + 10 g, 0.02 g^2 + 20 g, 0..100 MW) and one
/// prosumer with a flat inflexible electric demand.
inline Scenario micro_scenario(int T = 24, double demand = 60.0) {
  Scenario s;
  s.horizon = T;
  s.carriers = {Carrier::electricity};
  s.generators.push_back({"g1", 0.01, 10.0, Series(T, 0.0), Series(T, 100.0)});
  s.generators.push_back({"g2", 0.02, 20.0, Series(T, 0.0), Series(T, 100.0)});
  ProsumerSpec p;
  p.id = "load";
  DemandSpec d;
  d.id = "base";
  d.carrier = Carrier::electricity;
  d.base = Series(T, demand);
  p.demands.push_back(d);
  s.prosumers.push_back(p);
  return s;
}

}  // namespace mies::testing
