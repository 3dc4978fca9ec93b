#include "smoothpa/core.hpp"

#include <cmath>

namespace smoothpa {

ContextUniverse::ContextUniverse(std::size_t size) : size_(size) {
  if (size == 0) throw std::invalid_argument("context universe must be non-empty");
}

double log_loss(Prediction q, int y) {
  if (y != 0 && y != 1) throw std::invalid_argument("label must be 0 or 1");
  if (!(q.q1 >= 0.0 && q.q1 <= 1.0)) throw std::invalid_argument("prediction outside [0,1]");
  const double p = q.prob(y);
  if (p == 0.0) throw InfiniteLossError("deterministic prediction contradicted by label");
  // log1p keeps precision when the assigned probability is close to 1.
  return y == 1 ? -std::log(q.q1) : -std::log1p(-q.q1);
}

std::vector<Example> GameResult::examples() const {
  std::vector<Example> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({r.x, r.y});
  return out;
}

double regret_against(std::span<const RegretRecord> records, double comparator_loss) {
  double total = 0.0;
  for (const auto& r : records) total += r.learner_loss;
  return total - comparator_loss;
}

}  // namespace smoothpa
