#pragma once

#include <string>
#include <vector>

namespace mies {

/// One divisible block: up to |quantity| MW at `price`. Negative quantity is
/// demand (accepted when the price is at or below `price`), positive is supply.
struct BidBlock {
  double price = 0.0;
  double quantity = 0.0;
  bool operator==(const BidBlock&) const = default;
};

struct BidCurve {
  std::string prosumer;
  int hour = 0;
  std::vector<BidBlock> blocks;
  bool operator==(const BidCurve&) const = default;
};

}  // namespace mies
