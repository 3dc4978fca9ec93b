#pragma once

#include <cstddef>
#include <vector>

#include "smoothpa/adversary.hpp"
#include "smoothpa/rng.hpp"

namespace smoothpa {

struct CouplingOutcome {
  bool success = false;
  std::size_t index = 0;              // valid iff success
  std::vector<std::size_t> samples;  // the m uniform draws
};

// Draws X_1..X_m uniformly and accepts position j with probability
// sigma * U * target(X_j), stopping at the first acceptance. Failure has
// probability exactly (1 - sigma)^m; given success, X_I ~ target and is
// independent of the other draws.
CouplingOutcome rejection_couple(std::size_t m, const SmoothDistribution& target, Rng& rng);

struct BlockCoupling {
  std::vector<CouplingOutcome> blocks;
  std::size_t failures = 0;
  double union_bound = 0.0;  // num_blocks * (1 - sigma)^m
};

BlockCoupling block_coupling(std::size_t num_blocks, std::size_t m, const SmoothDistribution& target, Rng& rng);

}  // namespace smoothpa
