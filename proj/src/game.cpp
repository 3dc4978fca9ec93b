#include "smoothpa/game.hpp"

#include <stdexcept>

namespace smoothpa {

namespace {

SmoothDistribution next_distribution(AdversaryPolicy& adversary, std::span<const Example> history,
                                     std::size_t t) {
  try {
    return adversary.context_distribution(history);
  } catch (const std::invalid_argument& e) {
    throw NumericalAssertionError("round " + std::to_string(t) + ": " + e.what());
  }
}

}  // namespace

GameResult play_game(Learner& learner, AdversaryPolicy& adversary, std::size_t horizon, std::uint64_t seed) {
  if (horizon == 0) throw std::invalid_argument("play_game: horizon must be at least 1");
  learner.reset(derive_seed(seed, {1}));
  adversary.reset(derive_seed(seed, {2}));
  Rng context_rng(derive_seed(seed, {3}));

  GameResult result{learner.name(), adversary.name(), seed, {}};
  result.records.reserve(horizon);
  std::vector<Example> history;
  history.reserve(horizon);
  double cum = 0.0;

  for (std::size_t t = 1; t <= horizon; ++t) {
    const SmoothDistribution d = next_distribution(adversary, history, t);
    const std::size_t x = d.sample(context_rng);
    const Prediction q = learner.predict(x);
    const int y = adversary.label(history, x, q);
    const double loss = log_loss(q, y);
    cum += loss;
    result.records.push_back({seed, t, x, y, q.q1, loss, cum, 0.0, cum});
    learner.observe({x, y});
    history.push_back({x, y});
  }
  return result;
}

void fill_comparator(GameResult& result, const RegionFamily& family) {
  const auto best = prefix_best_losses(result.examples(), family);
  for (std::size_t i = 0; i < result.records.size(); ++i) {
    auto& r = result.records[i];
    r.cum_comparator_loss = best[i];
    r.cum_regret = r.cum_learner_loss - best[i];
  }
}

}  // namespace smoothpa
