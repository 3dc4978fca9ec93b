#include "smoothpa/hypotheses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace smoothpa {

namespace {

double xlogx(std::uint64_t v) {
  if (v == 0) return 0.0;
  const double d = static_cast<double>(v);
  return d * std::log(d);
}

double theta_or_half(std::uint64_t k, std::uint64_t n) {
  return n == 0 ? 0.5 : static_cast<double>(k) / static_cast<double>(n);
}

double side_nll(const RegionCounts& c) {
  return bernoulli_nll(c.k0, c.n0) + bernoulli_nll(c.k1, c.n1);
}

MleFit fit_from_counts(std::size_t region, const RegionCounts& c) {
  return {{region, theta_or_half(c.k0, c.n0), theta_or_half(c.k1, c.n1)}, side_nll(c)};
}

}  // namespace

RegionFamily::RegionFamily(ContextUniverse universe, RegionKind kind, std::size_t num_regions)
    : universe_(universe),
      kind_(kind),
      num_regions_(num_regions),
      membership_(kind == RegionKind::explicit_list ? num_regions * universe.size() : 0, 0) {}

RegionFamily RegionFamily::threshold_grid(const ContextUniverse& universe) {
  return RegionFamily(universe, RegionKind::threshold_grid, universe.size());
}

RegionFamily RegionFamily::explicit_list(const ContextUniverse& universe,
                                         const std::vector<std::vector<std::size_t>>& regions) {
  if (regions.empty()) throw std::invalid_argument("explicit region family must be non-empty");
  const std::size_t u = universe.size();
  RegionFamily fam(universe, RegionKind::explicit_list, regions.size());
  for (std::size_t r = 0; r < regions.size(); ++r) {
    for (std::size_t x : regions[r]) {
      if (x >= u)
        throw std::invalid_argument("region " + std::to_string(r) + " contains context " +
                                    std::to_string(x) + " outside the universe");
      fam.membership_[r * u + x] = 1;
    }
  }
  return fam;
}

RegionFamily RegionFamily::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind")) throw std::invalid_argument("family: missing \"kind\"");
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "threshold_grid") {
    if (!j.contains("size")) throw std::invalid_argument("family.size: required for threshold_grid");
    return threshold_grid(ContextUniverse(j.at("size").get<std::size_t>()));
  }
  if (kind == "explicit") {
    if (!j.contains("regions")) throw std::invalid_argument("family.regions: required for explicit");
    auto regions = j.at("regions").get<std::vector<std::vector<std::size_t>>>();
    std::size_t size = 0;
    if (j.contains("size")) {
      size = j.at("size").get<std::size_t>();
    } else {
      for (const auto& r : regions)
        for (std::size_t x : r) size = std::max(size, x + 1);
    }
    return explicit_list(ContextUniverse(size), regions);
  }
  throw std::invalid_argument("family.kind: unknown kind \"" + kind + "\"");
}

nlohmann::json RegionFamily::to_json() const {
  if (kind_ == RegionKind::threshold_grid)
    return {{"kind", "threshold_grid"}, {"size", universe_.size()}};
  nlohmann::json regions = nlohmann::json::array();
  for (std::size_t r = 0; r < num_regions_; ++r) {
    std::vector<std::size_t> ids;
    for (std::size_t x = 0; x < universe_.size(); ++x)
      if (contains(r, x)) ids.push_back(x);
    regions.push_back(ids);
  }
  return {{"kind", "explicit"}, {"size", universe_.size()}, {"regions", regions}};
}

std::size_t RegionFamily::region_size(std::size_t region) const {
  if (kind_ == RegionKind::threshold_grid) return region + 1;
  const auto* row = membership_.data() + region * universe_.size();
  return static_cast<std::size_t>(std::count(row, row + universe_.size(), 1));
}

double RegionFamily::distance(std::size_t a, std::size_t b) const {
  const std::size_t u = universe_.size();
  if (kind_ == RegionKind::threshold_grid)
    return static_cast<double>(a > b ? a - b : b - a) / static_cast<double>(u);
  std::size_t diff = 0;
  for (std::size_t x = 0; x < u; ++x) diff += membership_[a * u + x] != membership_[b * u + x];
  return static_cast<double>(diff) / static_cast<double>(u);
}

Prediction evaluate(const RegionFamily& family, const Hypothesis& h, std::size_t x) {
  return {family.contains(h.region, x) ? h.theta0 : h.theta1};
}

RegionCounts count_regions(const RegionFamily& family, std::size_t region,
                           std::span<const Example> data) {
  RegionCounts c;
  for (const auto& e : data) {
    const auto y = static_cast<std::uint64_t>(e.y);
    if (family.contains(region, e.x)) {
      ++c.n0;
      c.k0 += y;
    } else {
      ++c.n1;
      c.k1 += y;
    }
  }
  return c;
}

RegionCounts count_regions(const RegionFamily& family, std::size_t region,
                           const ContextCounts& counts) {
  RegionCounts c;
  for (std::size_t x = 0; x < counts.n.size(); ++x) {
    if (family.contains(region, x)) {
      c.n0 += counts.n[x];
      c.k0 += counts.k[x];
    } else {
      c.n1 += counts.n[x];
      c.k1 += counts.k[x];
    }
  }
  return c;
}

double bernoulli_nll(std::uint64_t k, std::uint64_t n) {
  if (k > n) throw std::invalid_argument("bernoulli_nll: k > n");
  return xlogx(n) - xlogx(k) - xlogx(n - k);
}

double hypothesis_loss(const RegionFamily& family, const Hypothesis& h,
                       std::span<const Example> data) {
  double total = 0.0;
  for (const auto& e : data) {
    const double p = evaluate(family, h, e.x).prob(e.y);
    if (p <= 0.0) return std::numeric_limits<double>::infinity();
    total -= std::log(p);
  }
  return total;
}

MleFit mle_oracle_generic(const ContextCounts& counts, const RegionFamily& family) {
  MleFit best = fit_from_counts(0, count_regions(family, 0, counts));
  for (std::size_t r = 1; r < family.num_regions(); ++r) {
    const MleFit fit = fit_from_counts(r, count_regions(family, r, counts));
    if (fit.loss < best.loss) best = fit;
  }
  return best;
}

MleFit mle_oracle(const ContextCounts& counts, const RegionFamily& family) {
  if (counts.n.size() != family.universe().size())
    throw std::invalid_argument("mle_oracle: counts and family disagree on universe size");
  if (family.kind() != RegionKind::threshold_grid) return mle_oracle_generic(counts, family);

  // Region a = {x <= a}: one prefix-sum pass.
  std::uint64_t n_tot = 0, k_tot = 0;
  for (std::size_t x = 0; x < counts.n.size(); ++x) {
    n_tot += counts.n[x];
    k_tot += counts.k[x];
  }
  RegionCounts c{0, 0, n_tot, k_tot};
  MleFit best;
  for (std::size_t a = 0; a < family.num_regions(); ++a) {
    c.n0 += counts.n[a];
    c.k0 += counts.k[a];
    c.n1 -= counts.n[a];
    c.k1 -= counts.k[a];
    const MleFit fit = fit_from_counts(a, c);
    if (a == 0 || fit.loss < best.loss) best = fit;
  }
  return best;
}

MleFit mle_oracle(std::span<const Example> data, const RegionFamily& family) {
  ContextCounts counts(family.universe().size());
  counts.add(data);
  return mle_oracle(counts, family);
}

double offline_best_loss(std::span<const Example> data, const RegionFamily& family) {
  return mle_oracle(data, family).loss;
}

std::vector<double> prefix_best_losses(std::span<const Example> data, const RegionFamily& family) {
  const std::size_t regions = family.num_regions();
  std::vector<RegionCounts> counts(regions);
  std::vector<double> inside(regions, 0.0), outside(regions, 0.0);
  std::vector<double> out;
  out.reserve(data.size());
  for (const auto& e : data) {
    double best = std::numeric_limits<double>::infinity();
    const auto y = static_cast<std::uint64_t>(e.y);
    for (std::size_t r = 0; r < regions; ++r) {
      auto& c = counts[r];
      if (family.contains(r, e.x)) {
        ++c.n0;
        c.k0 += y;
        inside[r] = bernoulli_nll(c.k0, c.n0);
      } else {
        ++c.n1;
        c.k1 += y;
        outside[r] = bernoulli_nll(c.k1, c.n1);
      }
      best = std::min(best, inside[r] + outside[r]);
    }
    out.push_back(best);
  }
  return out;
}

}  // namespace smoothpa
