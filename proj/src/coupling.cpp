#include "smoothpa/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace smoothpa {

CouplingOutcome rejection_couple(std::size_t m, const SmoothDistribution& target, Rng& rng) {
  if (!validate_smooth(target.pmf(), target.sigma()).ok)
    throw std::invalid_argument("rejection_couple: target is not sigma-smooth");
  const std::size_t u = target.size();
  const double scale = target.sigma() * static_cast<double>(u);

  CouplingOutcome out;
  out.samples.resize(m);
  for (auto& x : out.samples) x = static_cast<std::size_t>(rng.uniform_index(u));
  for (std::size_t j = 0; j < m; ++j) {
    const double accept = std::min(1.0, scale * target[out.samples[j]]);
    if (rng.uniform01() < accept) {
      out.success = true;
      out.index = j;
      break;
    }
  }
  return out;
}

BlockCoupling block_coupling(std::size_t num_blocks, std::size_t m, const SmoothDistribution& target, Rng& rng) {
  BlockCoupling out;
  out.blocks.reserve(num_blocks);
  for (std::size_t b = 0; b < num_blocks; ++b) {
    out.blocks.push_back(rejection_couple(m, target, rng));
    if (!out.blocks.back().success) ++out.failures;
  }
  out.union_bound = static_cast<double>(num_blocks) * std::pow(1.0 - target.sigma(), static_cast<double>(m));
  return out;
}

}  // namespace smoothpa
