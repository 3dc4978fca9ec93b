#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace smoothpa {

// Raised when a deterministic prediction meets the opposite label.
class InfiniteLossError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A runtime check on a mathematical invariant failed (smoothness, truncation, ...).
class NumericalAssertionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Finite context space {0,...,size-1} with the uniform base measure.
class ContextUniverse {
 public:
  explicit ContextUniverse(std::size_t size);

  std::size_t size() const { return size_; }
  double base_mass() const { return 1.0 / static_cast<double>(size_); }
  bool contains(std::size_t x) const { return x < size_; }

  friend bool operator==(const ContextUniverse&, const ContextUniverse&) = default;

 private:
  std::size_t size_;
};

struct Example {
  std::size_t x = 0;
  int y = 0;
};

// Probability assigned to label 1.
struct Prediction {
  double q1 = 0.5;

  double prob(int y) const { return y == 1 ? q1 : 1.0 - q1; }
};

// -ln q(y) in nats. Throws InfiniteLossError for a deterministic miss and
// std::invalid_argument for q1 outside [0,1] or y outside {0,1}.
double log_loss(Prediction q, int y);

struct RegretRecord {
  std::uint64_t seed = 0;
  std::size_t t = 0;  // 1-based round
  std::size_t x = 0;
  int y = 0;
  double q1 = 0.5;
  double learner_loss = 0.0;
  double cum_learner_loss = 0.0;
  double cum_comparator_loss = 0.0;
  double cum_regret = 0.0;
};

// One trajectory of the game together with its identifiers.
struct GameResult {
  std::string learner_id;
  std::string adversary_id;
  std::uint64_t seed = 0;
  std::vector<RegretRecord> records;

  std::vector<Example> examples() const;
};

// Sequential probability assignment strategy. predict() may be called once
// per round before observe(); reset() clears history and reseeds.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual std::string name() const = 0;
  virtual void reset(std::uint64_t seed) = 0;
  virtual Prediction predict(std::size_t x) = 0;
  virtual void observe(const Example& e) = 0;
};

// Sum of learner losses minus the comparator loss on the same sequence.
double regret_against(std::span<const RegretRecord> records, double comparator_loss);

}  // namespace smoothpa
