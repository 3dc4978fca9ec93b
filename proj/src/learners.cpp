#include "smoothpa/learners.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace smoothpa {

namespace {

std::string fmt_param(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

double laplace_integral_log(std::uint64_t k, std::uint64_t n) {
  if (k > n) throw std::invalid_argument("laplace_integral_log: k > n");
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  const double log_binom = std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0);
  return -std::log(nd + 1.0) - log_binom;
}

std::vector<std::size_t> epsilon_cover(const RegionFamily& family, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("epsilon_cover: eps must be positive");
  const std::size_t regions = family.num_regions();
  if (eps >= 1.0) return {0};

  std::vector<std::size_t> cover;
  if (family.kind() == RegionKind::threshold_grid) {
    const double u = static_cast<double>(family.universe().size());
    const auto step = static_cast<std::size_t>(std::max(1.0, std::ceil(eps * u - 1e-9)));
    for (std::size_t a = 0; a < regions; a += step) cover.push_back(a);
    if (cover.back() != regions - 1) cover.push_back(regions - 1);
    return cover;
  }

  std::vector<double> dist(regions);
  for (std::size_t r = 0; r < regions; ++r) dist[r] = family.distance(r, 0);
  cover.push_back(0);
  for (;;) {
    const auto far = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
    if (dist[far] <= eps) break;
    cover.push_back(far);
    for (std::size_t r = 0; r < regions; ++r) dist[r] = std::min(dist[r], family.distance(r, far));
  }
  return cover;
}

double cover_radius(const RegionFamily& family, std::span<const std::size_t> cover) {
  double radius = 0.0;
  for (std::size_t r = 0; r < family.num_regions(); ++r) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t c : cover) nearest = std::min(nearest, family.distance(r, c));
    radius = std::max(radius, nearest);
  }
  return radius;
}

Prediction kt_predict(std::span<const int> labels, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("kt_predict: beta must be positive");
  double ones = 0.0;
  for (int y : labels) ones += y;
  return {(ones + beta) / (static_cast<double>(labels.size()) + 2.0 * beta)};
}

// --- VcMixture -------------------------------------------------------------

VcMixture::VcMixture(const RegionFamily& family, std::vector<std::size_t> cover)
    : family_(&family), cover_(std::move(cover)) {
  if (cover_.empty()) throw std::invalid_argument("VcMixture: empty cover");
  for (std::size_t r : cover_)
    if (r >= family.num_regions()) throw std::invalid_argument("VcMixture: cover index out of range");
  clear();
}

void VcMixture::clear() {
  counts_.assign(cover_.size(), RegionCounts{});
  log_marginal_.assign(cover_.size(), 0.0);
}

void VcMixture::normalized_weights(std::vector<double>& w) const {
  const double top = *std::max_element(log_marginal_.begin(), log_marginal_.end());
  w.resize(cover_.size());
  double total = 0.0;
  for (std::size_t i = 0; i < cover_.size(); ++i) {
    w[i] = std::exp(log_marginal_[i] - top);
    total += w[i];
  }
  for (double& v : w) v /= total;
}

Prediction VcMixture::predict(std::size_t x) const {
  normalized_weights(weights_);
  double q1 = 0.0;
  for (std::size_t i = 0; i < cover_.size(); ++i) {
    const auto& c = counts_[i];
    const bool inside = family_->contains(cover_[i], x);
    const double k = static_cast<double>(inside ? c.k0 : c.k1);
    const double n = static_cast<double>(inside ? c.n0 : c.n1);
    q1 += weights_[i] * (k + 1.0) / (n + 2.0);
  }
  return {q1};
}

std::vector<double> VcMixture::predict_all() const {
  normalized_weights(weights_);
  const std::size_t u = family_->universe().size();
  std::vector<double> q(u, 0.0);
  for (std::size_t i = 0; i < cover_.size(); ++i) {
    const auto& c = counts_[i];
    const double in = weights_[i] * (static_cast<double>(c.k0) + 1.0) / (static_cast<double>(c.n0) + 2.0);
    const double out = weights_[i] * (static_cast<double>(c.k1) + 1.0) / (static_cast<double>(c.n1) + 2.0);
    for (std::size_t x = 0; x < u; ++x) q[x] += family_->contains(cover_[i], x) ? in : out;
  }
  return q;
}

void VcMixture::update(std::size_t x, int y) {
  for (std::size_t i = 0; i < cover_.size(); ++i) {
    auto& c = counts_[i];
    const bool inside = family_->contains(cover_[i], x);
    auto& k = inside ? c.k0 : c.k1;
    auto& n = inside ? c.n0 : c.n1;
    // B(k+1,n+1)/B(k,n) = (k+1)/(n+2);  B(k,n+1)/B(k,n) = (n-k+1)/(n+2).
    const double num = y == 1 ? static_cast<double>(k) + 1.0 : static_cast<double>(n - k) + 1.0;
    log_marginal_[i] += std::log(num / (static_cast<double>(n) + 2.0));
    k += static_cast<std::uint64_t>(y);
    ++n;
  }
}

double VcMixture::log_joint() const {
  const double top = *std::max_element(log_marginal_.begin(), log_marginal_.end());
  double total = 0.0;
  for (double lm : log_marginal_) total += std::exp(lm - top);
  return top + std::log(total) - std::log(static_cast<double>(cover_.size()));
}

// --- FTPL ------------------------------------------------------------------

void FtplConfig::validate() const {
  if (!(n >= 0.0) || !std::isfinite(n)) throw std::invalid_argument("ftpl.n: must be a finite non-negative rate");
  if (!(alpha > 0.0 && alpha < 0.5)) throw std::invalid_argument("ftpl.alpha: must lie in (0, 1/2)");
}

FtplStep ftpl_step(const ContextCounts& history, const FtplConfig& config,
                   const RegionFamily& family, Rng& rng, std::size_t x) {
  const std::size_t u = family.universe().size();
  ContextCounts data = history;
  const std::uint64_t hallucinated = rng.poisson(config.n);
  for (std::uint64_t i = 0; i < hallucinated; ++i) {
    const auto hx = static_cast<std::size_t>(rng.uniform_index(u));
    data.add(hx, rng.bit());
  }
  const MleFit leader = mle_oracle(data, family);
  const double h = evaluate(family, leader.hypothesis, x).q1;
  return {{truncate_prediction(h, config.alpha)}, leader.hypothesis, hallucinated};
}

// --- Learners --------------------------------------------------------------

KtLearner::KtLearner(double beta) : beta_(beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("kt.beta: must be positive");
}

std::string KtLearner::name() const { return "kt(beta=" + fmt_param(beta_) + ")"; }

Prediction KtLearner::predict(std::size_t) {
  return {(static_cast<double>(ones_) + beta_) / (static_cast<double>(total_) + 2.0 * beta_)};
}

void KtLearner::observe(const Example& e) {
  ones_ += static_cast<std::uint64_t>(e.y);
  ++total_;
}

VcMixtureLearner::VcMixtureLearner(const RegionFamily& family, double eps)
    : eps_(eps), mixture_(family, epsilon_cover(family, eps)) {}

std::string VcMixtureLearner::name() const {
  return "vc_mixture(eps=" + fmt_param(eps_) + ",m=" + std::to_string(mixture_.size()) + ")";
}

FtplLearner::FtplLearner(const RegionFamily& family, FtplConfig config)
    : family_(&family), config_(config), history_(family.universe().size()) {
  config_.validate();
}

std::string FtplLearner::name() const {
  return "ftpl(n=" + fmt_param(config_.n) + ",alpha=" + fmt_param(config_.alpha) + ")";
}

void FtplLearner::reset(std::uint64_t seed) {
  history_ = ContextCounts(family_->universe().size());
  rng_.reseed(seed);
}

Prediction FtplLearner::predict(std::size_t x) {
  return ftpl_step(history_, config_, *family_, rng_, x).prediction;
}

// --- Config ------------------------------------------------------------------

namespace {

double number_or_auto(const nlohmann::json& params, const char* key, double auto_value,
                      const std::string& path) {
  if (!params.contains(key)) throw std::invalid_argument(path + "." + key + ": required");
  const auto& v = params.at(key);
  if (v.is_string()) {
    if (v.get<std::string>() == "auto") return auto_value;
    throw std::invalid_argument(path + "." + key + ": expected a number or \"auto\"");
  }
  if (!v.is_number()) throw std::invalid_argument(path + "." + key + ": expected a number or \"auto\"");
  return v.get<double>();
}

const nlohmann::json& single_entry(const nlohmann::json& spec, std::string& kind) {
  if (!spec.is_object() || spec.size() != 1)
    throw std::invalid_argument("learner: expected an object with exactly one key");
  kind = spec.begin().key();
  return spec.begin().value();
}

}  // namespace

std::unique_ptr<Learner> make_learner(const nlohmann::json& spec, const RegionFamily& family,
                                      const GameShape& shape) {
  std::string kind;
  const auto& params = single_entry(spec, kind);
  const std::string path = "learner." + kind;
  const double t = static_cast<double>(shape.horizon);
  if (kind == "uniform") return std::make_unique<UniformLearner>();
  if (kind == "kt") return std::make_unique<KtLearner>(params.value("beta", 0.5));
  if (kind == "vc_mixture") {
    const double eps = params.contains("eps") ? params.at("eps").get<double>() : shape.sigma / (t * t);
    if (!(eps > 0.0)) throw std::invalid_argument(path + ".eps: must be positive");
    return std::make_unique<VcMixtureLearner>(family, eps);
  }
  if (kind == "ftpl") {
    FtplConfig cfg;
    cfg.n = number_or_auto(params, "n", std::round(std::pow(t, 0.8) / std::sqrt(shape.sigma)), path);
    cfg.alpha = number_or_auto(params, "alpha", 1.0 / t, path);
    try {
      cfg.validate();
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("learner." + std::string(e.what()));
    }
    return std::make_unique<FtplLearner>(family, cfg);
  }
  throw std::invalid_argument("learner: unknown kind \"" + kind + "\"");
}

std::string learner_label(const nlohmann::json& spec) {
  std::string kind;
  const auto& params = single_entry(spec, kind);
  std::string label = kind;
  for (auto it = params.begin(); it != params.end(); ++it) {
    label += "_" + it.key() + "-";
    label += it.value().is_string() ? it.value().get<std::string>() : fmt_param(it.value().get<double>());
  }
  return label;
}

}  // namespace smoothpa
