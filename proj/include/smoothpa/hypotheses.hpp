#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "smoothpa/core.hpp"

namespace smoothpa {

enum class RegionKind { threshold_grid, explicit_list };

// Finite family of regions A in the universe. A hypothesis predicts theta0
// inside its region and theta1 outside. Threshold grids hold {x <= a} for
// a = 0..U-1, so region index == threshold; the empty region is redundant
// because f(empty, t0, t1) == f(universe, t1, t0).
class RegionFamily {
 public:
  static RegionFamily threshold_grid(const ContextUniverse& universe);
  static RegionFamily explicit_list(const ContextUniverse& universe,
                                    const std::vector<std::vector<std::size_t>>& regions);

  // {"kind":"threshold_grid","size":U} or {"kind":"explicit","size":U,"regions":[[...],...]}.
  // "size" may be omitted for explicit families (inferred from the largest id).
  static RegionFamily from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  const ContextUniverse& universe() const { return universe_; }
  RegionKind kind() const { return kind_; }
  std::size_t num_regions() const { return num_regions_; }

  bool contains(std::size_t region, std::size_t x) const {
    if (kind_ == RegionKind::threshold_grid) return x <= region;
    return membership_[region * universe_.size() + x] != 0;
  }
  std::size_t region_size(std::size_t region) const;

  // Normalized Hamming distance under the uniform base measure.
  double distance(std::size_t a, std::size_t b) const;

 private:
  RegionFamily(ContextUniverse universe, RegionKind kind, std::size_t num_regions);

  ContextUniverse universe_;
  RegionKind kind_;
  std::size_t num_regions_;
  std::vector<std::uint8_t> membership_;  // row-major num_regions x U; empty for threshold grids
};

struct Hypothesis {
  std::size_t region = 0;
  double theta0 = 0.5;  // inside the region
  double theta1 = 0.5;  // outside
};

// Sample and positive-label counts inside (0) and outside (1) a region.
struct RegionCounts {
  std::uint64_t n0 = 0, k0 = 0, n1 = 0, k1 = 0;

  friend bool operator==(const RegionCounts&, const RegionCounts&) = default;
};

// Per-context sufficient statistics of a labelled multiset.
struct ContextCounts {
  explicit ContextCounts(std::size_t universe_size) : n(universe_size, 0), k(universe_size, 0) {}

  void add(std::size_t x, int y) {
    ++n[x];
    k[x] += static_cast<std::uint64_t>(y);
  }
  void add(std::span<const Example> data) {
    for (const auto& e : data) add(e.x, e.y);
  }

  std::vector<std::uint64_t> n;
  std::vector<std::uint64_t> k;
};

struct MleFit {
  Hypothesis hypothesis;
  double loss = 0.0;  // minimized negative log-likelihood, nats
};

Prediction evaluate(const RegionFamily& family, const Hypothesis& h, std::size_t x);

RegionCounts count_regions(const RegionFamily& family, std::size_t region,
                           std::span<const Example> data);
RegionCounts count_regions(const RegionFamily& family, std::size_t region,
                           const ContextCounts& counts);

// Minimum Bernoulli negative log-likelihood of k ones among n draws (0 ln 0 = 0).
double bernoulli_nll(std::uint64_t k, std::uint64_t n);

// Negative log-likelihood of a fixed hypothesis on data; +inf if some label
// has probability zero.
double hypothesis_loss(const RegionFamily& family, const Hypothesis& h,
                       std::span<const Example> data);

// Maximum likelihood over (region, theta0, theta1). Ties go to the lowest
// region index; an empty side gets theta = 1/2.
MleFit mle_oracle(std::span<const Example> data, const RegionFamily& family);
MleFit mle_oracle(const ContextCounts& counts, const RegionFamily& family);

// Reference scan: counts every region directly, ignoring the threshold fast path.
MleFit mle_oracle_generic(const ContextCounts& counts, const RegionFamily& family);

double offline_best_loss(std::span<const Example> data, const RegionFamily& family);

// Best-in-class loss on every prefix of data, in O(|data| * regions).
std::vector<double> prefix_best_losses(std::span<const Example> data, const RegionFamily& family);

}  // namespace smoothpa
