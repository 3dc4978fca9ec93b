#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "smoothpa/core.hpp"
#include "smoothpa/hypotheses.hpp"
#include "smoothpa/learners.hpp"
#include "smoothpa/rng.hpp"

namespace smoothpa {

inline constexpr double kSmoothTolerance = 1e-12;

struct SmoothnessCheck {
  bool ok = true;
  std::optional<std::size_t> offending_index;  // unset when the failure is the total mass
  std::string reason;
};

// Singleton test max pmf <= 1/(sigma U) plus unit mass; on a finite universe
// this is the same as D(A) <= mu(A)/sigma for every A.
SmoothnessCheck validate_smooth(std::span<const double> pmf, double sigma);

// Smallest support a sigma-smooth distribution can have: ceil(sigma * U).
std::size_t min_smooth_support(double sigma, std::size_t universe_size);

class SmoothDistribution {
 public:
  // Throws std::invalid_argument carrying the offending index on failure.
  SmoothDistribution(std::vector<double> pmf, double sigma);

  static SmoothDistribution uniform(const ContextUniverse& universe, double sigma = 1.0);
  static SmoothDistribution uniform_on(std::span<const std::size_t> support,
                                       const ContextUniverse& universe, double sigma);

  std::span<const double> pmf() const { return pmf_; }
  double operator[](std::size_t x) const { return pmf_[x]; }
  double sigma() const { return sigma_; }
  std::size_t size() const { return pmf_.size(); }

  std::size_t sample(Rng& rng) const;

 private:
  std::vector<double> pmf_;
  double sigma_;
};

// --- context rules -----------------------------------------------------------

// Picks the target set S for the next round from the history.
class TargetSetRule {
 public:
  virtual ~TargetSetRule() = default;
  virtual std::string name() const = 0;
  virtual void reset() {}
  virtual std::vector<std::size_t> select(std::span<const Example> history) = 0;
};

class StaticSetRule final : public TargetSetRule {
 public:
  explicit StaticSetRule(std::vector<std::size_t> set) : set_(std::move(set)) {}
  std::string name() const override { return "static"; }
  std::vector<std::size_t> select(std::span<const Example>) override { return set_; }

 private:
  std::vector<std::size_t> set_;
};

// Tracks a shadow mixture learner on the history and targets the contexts where
// its prediction is most extreme, i.e. where the greedy label has the lowest
// assigned probability. Ties go to the lower context id.
class AdaptiveExtremeRule final : public TargetSetRule {
 public:
  AdaptiveExtremeRule(const RegionFamily& family, double cover_eps, std::size_t set_size);
  std::string name() const override { return "adaptive"; }
  void reset() override;
  std::vector<std::size_t> select(std::span<const Example> history) override;

 private:
  VcMixture shadow_;
  std::size_t set_size_;
  std::size_t seen_ = 0;
};

// Uniform on S(history); each emitted distribution is validated.
class SubsetUniformContexts {
 public:
  SubsetUniformContexts(const ContextUniverse& universe, double sigma, std::unique_ptr<TargetSetRule> rule);

  std::string name() const;
  void reset() { rule_->reset(); }
  SmoothDistribution distribution(std::span<const Example> history);
  double sigma() const { return sigma_; }

 private:
  ContextUniverse universe_;
  double sigma_;
  std::unique_ptr<TargetSetRule> rule_;
};

// --- label rules -------------------------------------------------------------

int greedy_label(Prediction q);
int realizable_label(const RegionFamily& family, const Hypothesis& f_star, std::size_t x, Rng& rng);

class LabelRule {
 public:
  virtual ~LabelRule() = default;
  virtual std::string name() const = 0;
  virtual int label(std::span<const Example> history, std::size_t x, Prediction q, Rng& rng) = 0;
};

class GreedyLabels final : public LabelRule {
 public:
  std::string name() const override { return "greedy"; }
  int label(std::span<const Example>, std::size_t, Prediction q, Rng&) override { return greedy_label(q); }
};

class RealizableLabels final : public LabelRule {
 public:
  RealizableLabels(const RegionFamily& family, Hypothesis f_star) : family_(&family), f_star_(f_star) {}
  std::string name() const override { return "realizable"; }
  int label(std::span<const Example>, std::size_t x, Prediction, Rng& rng) override {
    return realizable_label(*family_, f_star_, x, rng);
  }

 private:
  const RegionFamily* family_;
  Hypothesis f_star_;
};

// Cycles through a fixed label list.
class FixedSequenceLabels final : public LabelRule {
 public:
  explicit FixedSequenceLabels(std::vector<int> labels);
  std::string name() const override { return "fixed_sequence"; }
  int label(std::span<const Example> history, std::size_t, Prediction, Rng&) override {
    return labels_[history.size() % labels_.size()];
  }

 private:
  std::vector<int> labels_;
};

// --- policy ------------------------------------------------------------------

class AdversaryPolicy {
 public:
  AdversaryPolicy(SubsetUniformContexts contexts, std::unique_ptr<LabelRule> labels);

  std::string name() const;
  double sigma() const { return contexts_.sigma(); }
  void reset(std::uint64_t seed);
  SmoothDistribution context_distribution(std::span<const Example> history) {
    return contexts_.distribution(history);
  }
  int label(std::span<const Example> history, std::size_t x, Prediction q) {
    return labels_->label(history, x, q, rng_);
  }

 private:
  SubsetUniformContexts contexts_;
  std::unique_ptr<LabelRule> labels_;
  Rng rng_;
};

// Context adversary uniform on a target set chosen by rule. Rejects rules
// whose sets are smaller than ceil(sigma U) when they are first consulted.
SubsetUniformContexts subset_smooth_adversary(const ContextUniverse& universe, double sigma,
                                              std::unique_ptr<TargetSetRule> rule);

// {"context":"subset_uniform","sigma":0.1,"rule":"static|adaptive","label":"greedy|realizable|fixed_sequence"}
// Optional: "set":[ids] for the static rule (default: first ceil(sigma U) ids),
// "cover_eps" for the adaptive shadow (default sigma/T^2),
// "f_star":{"region":r,"theta0":..,"theta1":..} for realizable, "labels":[..] for fixed_sequence.
AdversaryPolicy make_adversary(const nlohmann::json& spec, const RegionFamily& family, const GameShape& shape);

}  // namespace smoothpa
