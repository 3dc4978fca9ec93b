#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "smoothpa/core.hpp"
#include "smoothpa/hypotheses.hpp"
#include "smoothpa/rng.hpp"

namespace smoothpa {

// ln of the integral of t^k (1-t)^(n-k) over [0,1], i.e. -ln((n+1) * C(n,k)).
double laplace_integral_log(std::uint64_t k, std::uint64_t n);

// Region indices forming an eps-cover of the family under the normalized
// Hamming distance. Threshold grids take every ceil(eps*U)-th threshold plus
// the last one; explicit families use greedy farthest-point selection.
std::vector<std::size_t> epsilon_cover(const RegionFamily& family, double eps);

// Largest distance from any region to its nearest cover element.
double cover_radius(const RegionFamily& family, std::span<const std::size_t> cover);

// Add-beta rule (sum y + beta) / (t + 2 beta); beta = 1/2 is KT.
Prediction kt_predict(std::span<const int> labels, double beta = 0.5);

// Uniform mixture over cover elements of the double-Beta(1,1) marginal
// likelihood. State is kept as per-element counts plus log-marginals.
class VcMixture {
 public:
  VcMixture(const RegionFamily& family, std::vector<std::size_t> cover);

  Prediction predict(std::size_t x) const;
  // Predictions for every context; O(U * cover size).
  std::vector<double> predict_all() const;
  void update(std::size_t x, int y);
  void clear();

  // ln q(y_{1:t} || x_{1:t}) = logsumexp(log-marginals) - ln m.
  double log_joint() const;

  std::size_t size() const { return cover_.size(); }
  std::span<const std::size_t> cover() const { return cover_; }
  std::span<const RegionCounts> counts() const { return counts_; }
  std::span<const double> log_marginals() const { return log_marginal_; }

 private:
  void normalized_weights(std::vector<double>& w) const;

  const RegionFamily* family_;
  std::vector<std::size_t> cover_;
  std::vector<RegionCounts> counts_;
  std::vector<double> log_marginal_;
  mutable std::vector<double> weights_;
};

struct FtplConfig {
  double n = 1.0;       // Poisson rate of hallucinated samples per round
  double alpha = 0.01;  // truncation, in (0, 1/2)

  void validate() const;
};

inline double truncate_prediction(double f, double alpha) { return (f + alpha) / (1.0 + 2.0 * alpha); }

// A hypothesis seen through the affine map f -> (f + alpha) / (1 + 2 alpha).
struct TruncatedClassView {
  double alpha = 0.0;
  Hypothesis hypothesis;

  Prediction evaluate(const RegionFamily& family, std::size_t x) const {
    return {truncate_prediction(smoothpa::evaluate(family, hypothesis, x).q1, alpha)};
  }
  double lower() const { return alpha / (1.0 + 2.0 * alpha); }
  double upper() const { return (1.0 + alpha) / (1.0 + 2.0 * alpha); }
};

struct FtplStep {
  Prediction prediction;
  Hypothesis leader;
  std::uint64_t hallucinated = 0;
};

// One round of follow-the-perturbed-leader: N ~ Poi(n) uniform hallucinated
// examples, the MLE on hallucinated plus history, then truncation at x_t.
FtplStep ftpl_step(const ContextCounts& history, const FtplConfig& config,
                   const RegionFamily& family, Rng& rng, std::size_t x);

class UniformLearner final : public Learner {
 public:
  std::string name() const override { return "uniform"; }
  void reset(std::uint64_t) override {}
  Prediction predict(std::size_t) override { return {0.5}; }
  void observe(const Example&) override {}
};

// Context-free add-beta learner.
class KtLearner final : public Learner {
 public:
  explicit KtLearner(double beta = 0.5);
  std::string name() const override;
  void reset(std::uint64_t) override { ones_ = total_ = 0; }
  Prediction predict(std::size_t) override;
  void observe(const Example& e) override;

 private:
  double beta_;
  std::uint64_t ones_ = 0, total_ = 0;
};

class VcMixtureLearner final : public Learner {
 public:
  VcMixtureLearner(const RegionFamily& family, double eps);
  std::string name() const override;
  void reset(std::uint64_t) override { mixture_.clear(); }
  Prediction predict(std::size_t x) override { return mixture_.predict(x); }
  void observe(const Example& e) override { mixture_.update(e.x, e.y); }

  const VcMixture& mixture() const { return mixture_; }

 private:
  double eps_;
  VcMixture mixture_;
};

class FtplLearner final : public Learner {
 public:
  FtplLearner(const RegionFamily& family, FtplConfig config);
  std::string name() const override;
  void reset(std::uint64_t seed) override;
  Prediction predict(std::size_t x) override;
  void observe(const Example& e) override { history_.add(e.x, e.y); }

  const FtplConfig& config() const { return config_; }

 private:
  const RegionFamily* family_;
  FtplConfig config_;
  ContextCounts history_;
  Rng rng_;
};

// Horizon and smoothness of the game a learner is built for; used to resolve
// defaults such as eps = sigma / T^2 and the "auto" FTPL schedule.
struct GameShape {
  std::size_t horizon = 1;
  double sigma = 1.0;
};

// {"ftpl":{"n":..,"alpha":..}}, {"vc_mixture":{"eps":..}}, {"kt":{"beta":..}}, {"uniform":{}}.
// FTPL accepts "n":"auto" (round(T^0.8 / sqrt(sigma))) and "alpha":"auto" (1/T);
// vc_mixture without "eps" uses sigma / T^2.
std::unique_ptr<Learner> make_learner(const nlohmann::json& spec, const RegionFamily& family,
                                      const GameShape& shape);

// Stable short label for a learner spec, used in run ids and summaries.
std::string learner_label(const nlohmann::json& spec);

}  // namespace smoothpa
