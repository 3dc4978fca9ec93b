#pragma once

#include <cstddef>
#include <cstdint>

#include "smoothpa/adversary.hpp"
#include "smoothpa/core.hpp"

namespace smoothpa {

// Plays T rounds: the adversary emits a smooth D_t from the history, x_t ~ D_t,
// the learner predicts, the adversary picks y_t after seeing the prediction.
// Learner, adversary and context sampling each get their own stream derived
// from seed, so a fixed seed reproduces the trajectory bit for bit.
// Comparator fields are left at zero; see fill_comparator().
GameResult play_game(Learner& learner, AdversaryPolicy& adversary, std::size_t horizon, std::uint64_t seed);

// Writes the best-in-class loss of every prefix into cum_comparator_loss and
// the resulting prefix regret into cum_regret.
void fill_comparator(GameResult& result, const RegionFamily& family);

}  // namespace smoothpa
