#include "smoothpa/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace smoothpa {

SmoothnessCheck validate_smooth(std::span<const double> pmf, double sigma) {
  if (!(sigma > 0.0 && sigma <= 1.0)) return {false, std::nullopt, "sigma must lie in (0,1]"};
  if (pmf.empty()) return {false, std::nullopt, "empty pmf"};
  const double cap = 1.0 / (sigma * static_cast<double>(pmf.size())) + kSmoothTolerance;
  double total = 0.0;
  for (std::size_t x = 0; x < pmf.size(); ++x) {
    if (!(pmf[x] >= 0.0)) return {false, x, "negative or NaN mass"};
    if (pmf[x] > cap) return {false, x, "mass exceeds 1/(sigma U)"};
    total += pmf[x];
  }
  if (std::fabs(total - 1.0) > kSmoothTolerance) return {false, std::nullopt, "total mass differs from 1"};
  return {};
}

std::size_t min_smooth_support(double sigma, std::size_t universe_size) {
  const double need = std::ceil(sigma * static_cast<double>(universe_size) - 1e-9);
  return std::max<std::size_t>(1, static_cast<std::size_t>(need));
}

SmoothDistribution::SmoothDistribution(std::vector<double> pmf, double sigma)
    : pmf_(std::move(pmf)), sigma_(sigma) {
  const auto check = validate_smooth(pmf_, sigma_);
  if (!check.ok) {
    std::string msg = "distribution is not sigma-smooth: " + check.reason;
    if (check.offending_index) msg += " at context " + std::to_string(*check.offending_index);
    throw std::invalid_argument(msg);
  }
}

SmoothDistribution SmoothDistribution::uniform(const ContextUniverse& universe, double sigma) {
  return SmoothDistribution(std::vector<double>(universe.size(), universe.base_mass()), sigma);
}

SmoothDistribution SmoothDistribution::uniform_on(std::span<const std::size_t> support,
                                                  const ContextUniverse& universe, double sigma) {
  std::vector<double> pmf(universe.size(), 0.0);
  if (support.empty()) throw std::invalid_argument("uniform_on: empty support");
  const double mass = 1.0 / static_cast<double>(support.size());
  for (std::size_t x : support) {
    if (!universe.contains(x)) throw std::invalid_argument("uniform_on: context outside universe");
    if (pmf[x] != 0.0) throw std::invalid_argument("uniform_on: duplicate context " + std::to_string(x));
    pmf[x] = mass;
  }
  return SmoothDistribution(std::move(pmf), sigma);
}

std::size_t SmoothDistribution::sample(Rng& rng) const {
  const double u = rng.uniform01();
  double cdf = 0.0;
  std::size_t last = 0;
  for (std::size_t x = 0; x < pmf_.size(); ++x) {
    if (pmf_[x] <= 0.0) continue;
    cdf += pmf_[x];
    last = x;
    if (u < cdf) return x;
  }
  return last;  // rounding left u above the accumulated mass
}

// --- context rules -----------------------------------------------------------

AdaptiveExtremeRule::AdaptiveExtremeRule(const RegionFamily& family, double cover_eps, std::size_t set_size)
    : shadow_(family, epsilon_cover(family, cover_eps)), set_size_(set_size) {
  if (set_size == 0 || set_size > family.universe().size())
    throw std::invalid_argument("adaptive rule: set size out of range");
}

void AdaptiveExtremeRule::reset() {
  shadow_.clear();
  seen_ = 0;
}

std::vector<std::size_t> AdaptiveExtremeRule::select(std::span<const Example> history) {
  if (history.size() < seen_) reset();
  for (; seen_ < history.size(); ++seen_) shadow_.update(history[seen_].x, history[seen_].y);

  const auto q = shadow_.predict_all();
  std::vector<std::size_t> order(q.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::fabs(q[a] - 0.5) > std::fabs(q[b] - 0.5);
  });
  order.resize(set_size_);
  std::sort(order.begin(), order.end());
  return order;
}

SubsetUniformContexts::SubsetUniformContexts(const ContextUniverse& universe, double sigma,
                                             std::unique_ptr<TargetSetRule> rule)
    : universe_(universe), sigma_(sigma), rule_(std::move(rule)) {
  if (!(sigma > 0.0 && sigma <= 1.0)) throw std::invalid_argument("adversary.sigma: must lie in (0,1]");
  if (!rule_) throw std::invalid_argument("subset adversary: missing target-set rule");
}

std::string SubsetUniformContexts::name() const { return "subset_uniform_" + rule_->name(); }

SmoothDistribution SubsetUniformContexts::distribution(std::span<const Example> history) {
  const auto set = rule_->select(history);
  const std::size_t need = min_smooth_support(sigma_, universe_.size());
  if (set.size() < need)
    throw std::invalid_argument("target set of size " + std::to_string(set.size()) +
                                " is smaller than ceil(sigma U) = " + std::to_string(need));
  return SmoothDistribution::uniform_on(set, universe_, sigma_);
}

SubsetUniformContexts subset_smooth_adversary(const ContextUniverse& universe, double sigma,
                                              std::unique_ptr<TargetSetRule> rule) {
  return SubsetUniformContexts(universe, sigma, std::move(rule));
}

// --- label rules -------------------------------------------------------------

int greedy_label(Prediction q) { return q.q1 >= 0.5 ? 0 : 1; }

int realizable_label(const RegionFamily& family, const Hypothesis& f_star, std::size_t x, Rng& rng) {
  return rng.bernoulli(evaluate(family, f_star, x).q1);
}

FixedSequenceLabels::FixedSequenceLabels(std::vector<int> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw std::invalid_argument("fixed_sequence: empty label list");
  for (int y : labels_)
    if (y != 0 && y != 1) throw std::invalid_argument("fixed_sequence: labels must be 0 or 1");
}

// --- policy ------------------------------------------------------------------

AdversaryPolicy::AdversaryPolicy(SubsetUniformContexts contexts, std::unique_ptr<LabelRule> labels)
    : contexts_(std::move(contexts)), labels_(std::move(labels)) {
  if (!labels_) throw std::invalid_argument("adversary: missing label rule");
}

std::string AdversaryPolicy::name() const { return contexts_.name() + "+" + labels_->name(); }

void AdversaryPolicy::reset(std::uint64_t seed) {
  contexts_.reset();
  rng_.reseed(seed);
}

AdversaryPolicy make_adversary(const nlohmann::json& spec, const RegionFamily& family, const GameShape& shape) {
  if (!spec.is_object()) throw std::invalid_argument("adversary: expected an object");
  const auto& universe = family.universe();
  const auto context = spec.value("context", std::string("subset_uniform"));
  if (context != "subset_uniform")
    throw std::invalid_argument("adversary.context: unknown context rule \"" + context + "\"");
  const double sigma = shape.sigma;
  const std::size_t need = min_smooth_support(sigma, universe.size());

  std::unique_ptr<TargetSetRule> rule;
  const auto rule_name = spec.value("rule", std::string("static"));
  if (rule_name == "static") {
    std::vector<std::size_t> set;
    if (spec.contains("set")) {
      set = spec.at("set").get<std::vector<std::size_t>>();
    } else {
      set.resize(need);
      std::iota(set.begin(), set.end(), std::size_t{0});
    }
    if (set.size() < need)
      throw std::invalid_argument("adversary.set: needs at least ceil(sigma U) = " + std::to_string(need) +
                                  " contexts");
    rule = std::make_unique<StaticSetRule>(std::move(set));
  } else if (rule_name == "adaptive") {
    const double t = static_cast<double>(shape.horizon);
    const double eps = spec.value("cover_eps", sigma / (t * t));
    rule = std::make_unique<AdaptiveExtremeRule>(family, eps, need);
  } else {
    throw std::invalid_argument("adversary.rule: unknown rule \"" + rule_name + "\"");
  }

  std::unique_ptr<LabelRule> labels;
  const auto label_name = spec.value("label", std::string("greedy"));
  if (label_name == "greedy") {
    labels = std::make_unique<GreedyLabels>();
  } else if (label_name == "realizable") {
    if (!spec.contains("f_star")) throw std::invalid_argument("adversary.f_star: required for realizable labels");
    const auto& f = spec.at("f_star");
    Hypothesis h{f.at("region").get<std::size_t>(), f.at("theta0").get<double>(), f.at("theta1").get<double>()};
    if (h.region >= family.num_regions()) throw std::invalid_argument("adversary.f_star.region: out of range");
    if (!(h.theta0 >= 0.0 && h.theta0 <= 1.0 && h.theta1 >= 0.0 && h.theta1 <= 1.0))
      throw std::invalid_argument("adversary.f_star: thetas must lie in [0,1]");
    labels = std::make_unique<RealizableLabels>(family, h);
  } else if (label_name == "fixed_sequence") {
    if (!spec.contains("labels")) throw std::invalid_argument("adversary.labels: required for fixed_sequence");
    labels = std::make_unique<FixedSequenceLabels>(spec.at("labels").get<std::vector<int>>());
  } else {
    throw std::invalid_argument("adversary.label: unknown label rule \"" + label_name + "\"");
  }
  return AdversaryPolicy(subset_smooth_adversary(universe, sigma, std::move(rule)), std::move(labels));
}

}  // namespace smoothpa
