#include <doctest.h>

#include <cmath>
#include <limits>

#include "smoothpa/hypotheses.hpp"
#include "smoothpa/rng.hpp"

using namespace smoothpa;

namespace {

std::vector<Example> random_examples(Rng& rng, std::size_t u, std::size_t len) {
  std::vector<Example> data(len);
  for (auto& e : data) {
    e.x = static_cast<std::size_t>(rng.uniform_index(u));
    e.y = rng.bit();
  }
  return data;
}

RegionCounts naive_counts(const RegionFamily& family, std::size_t r, std::span<const Example> data) {
  RegionCounts c;
  for (const auto& e : data) {
    bool inside = false;
    for (std::size_t x = 0; x < family.universe().size(); ++x)
      if (x == e.x && family.contains(r, x)) inside = true;
    if (inside) {
      c.n0 += 1;
      c.k0 += e.y == 1;
    } else {
      c.n1 += 1;
      c.k1 += e.y == 1;
    }
  }
  return c;
}

// Per-side loss minimized over theta on a grid; separable in theta0/theta1.
double grid_side(std::uint64_t k, std::uint64_t n, double step) {
  double best = std::numeric_limits<double>::infinity();
  const int steps = static_cast<int>(std::lround(1.0 / step));
  for (int i = 0; i <= steps; ++i) {
    const double th = i * step;
    double loss = 0.0;
    if (k > 0) loss -= static_cast<double>(k) * std::log(th);
    if (n > k) loss -= static_cast<double>(n - k) * std::log1p(-th);
    best = std::min(best, loss);
  }
  return best;
}

double grid_oracle(const RegionFamily& family, std::span<const Example> data, double step) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < family.num_regions(); ++r) {
    const auto c = naive_counts(family, r, data);
    best = std::min(best, grid_side(c.k0, c.n0, step) + grid_side(c.k1, c.n1, step));
  }
  return best;
}

RegionFamily random_explicit(Rng& rng, std::size_t u, std::size_t regions) {
  std::vector<std::vector<std::size_t>> list(regions);
  for (auto& r : list)
    for (std::size_t x = 0; x < u; ++x)
      if (rng.bit()) r.push_back(x);
  return RegionFamily::explicit_list(ContextUniverse(u), list);
}

}  // namespace

TEST_CASE("threshold grid regions are the prefixes {x <= a}") {
  const auto family = RegionFamily::threshold_grid(ContextUniverse(10));
  CHECK(family.kind() == RegionKind::threshold_grid);
  CHECK(family.num_regions() == 10);
  for (std::size_t a = 0; a < 10; ++a) {
    CHECK(family.region_size(a) == a + 1);
    for (std::size_t x = 0; x < 10; ++x) CHECK(family.contains(a, x) == (x <= a));
  }
  CHECK(family.distance(2, 7) == doctest::Approx(0.5));
  CHECK(family.distance(4, 4) == 0.0);
}

TEST_CASE("explicit families validate membership") {
  const ContextUniverse u(4);
  CHECK_THROWS_AS(RegionFamily::explicit_list(u, {{0, 4}}), std::invalid_argument);
  CHECK_THROWS_AS(RegionFamily::explicit_list(u, {}), std::invalid_argument);
  const auto f = RegionFamily::explicit_list(u, {{}, {1, 3}});
  CHECK(f.region_size(0) == 0);
  CHECK(f.contains(1, 3));
  CHECK_FALSE(f.contains(1, 2));
}

TEST_CASE("RegionFamily JSON round trip") {
  const auto grid = RegionFamily::from_json({{"kind", "threshold_grid"}, {"size", 6}});
  CHECK(grid.num_regions() == 6);
  CHECK(RegionFamily::from_json(grid.to_json()).to_json() == grid.to_json());

  const auto expl = RegionFamily::from_json(nlohmann::json::parse(R"({"kind":"explicit","regions":[[0,1],[2]]})"));
  CHECK(expl.universe().size() == 3);
  CHECK(expl.num_regions() == 2);
  CHECK(RegionFamily::from_json(expl.to_json()).to_json() == expl.to_json());
  CHECK_THROWS(RegionFamily::from_json({{"kind", "balls"}}));
}

TEST_CASE("evaluate picks theta by membership") {
  const ContextUniverse u(10);
  const auto expl = RegionFamily::explicit_list(u, {{0, 1}, {}});
  CHECK(evaluate(expl, {0, 0.2, 0.9}, 0).q1 == 0.2);
  CHECK(evaluate(expl, {0, 0.2, 0.9}, 5).q1 == 0.9);
  CHECK(evaluate(expl, {1, 0.123, 0.7}, 3).q1 == 0.7);
  const auto grid = RegionFamily::threshold_grid(u);
  CHECK(evaluate(grid, {5, 0.3, 0.6}, 5).q1 == 0.3);
  CHECK(evaluate(grid, {5, 0.3, 0.6}, 6).q1 == 0.6);
}

TEST_CASE("count_regions") {
  const ContextUniverse u(8);
  const auto grid = RegionFamily::threshold_grid(u);
  CHECK(count_regions(grid, 3, std::span<const Example>{}) == RegionCounts{});
  const std::vector<Example> same{{2, 1}, {2, 1}, {2, 0}};
  CHECK(count_regions(grid, 7, same) == RegionCounts{3, 2, 0, 0});

  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto data = random_examples(rng, 8, 20);
    const auto expl = random_explicit(rng, 8, 5);
    ContextCounts cc(8);
    cc.add(data);
    for (std::size_t r = 0; r < 8; ++r) {
      CHECK(count_regions(grid, r, data) == naive_counts(grid, r, data));
      CHECK(count_regions(grid, r, cc) == naive_counts(grid, r, data));
    }
    for (std::size_t r = 0; r < 5; ++r) CHECK(count_regions(expl, r, data) == naive_counts(expl, r, data));
  }
}

TEST_CASE("mle_oracle closed-form cases") {
  const ContextUniverse u(4);
  const auto single = RegionFamily::explicit_list(u, {{0, 1, 2, 3}});
  const std::vector<Example> data{{0, 1}, {1, 1}, {3, 0}};
  const auto fit = mle_oracle(data, single);
  CHECK(fit.hypothesis.region == 0);
  CHECK(fit.hypothesis.theta0 == doctest::Approx(2.0 / 3.0));
  CHECK(fit.hypothesis.theta1 == 0.5);

  const auto empty = mle_oracle(std::span<const Example>{}, RegionFamily::threshold_grid(u));
  CHECK(empty.hypothesis.region == 0);
  CHECK(empty.hypothesis.theta0 == 0.5);
  CHECK(empty.hypothesis.theta1 == 0.5);
  CHECK(empty.loss == 0.0);
}

TEST_CASE("mle_oracle loss is the per-region Bernoulli likelihood") {
  CHECK(bernoulli_nll(0, 0) == 0.0);
  CHECK(bernoulli_nll(3, 3) == 0.0);
  CHECK(bernoulli_nll(1, 2) == doctest::Approx(2.0 * std::log(2.0)));
  CHECK(bernoulli_nll(2, 3) == doctest::Approx(-2.0 * std::log(2.0 / 3.0) - std::log(1.0 / 3.0)));
}

TEST_CASE("mle_oracle on 15 points over 8 thresholds matches a 1e-4 theta grid") {
  Rng rng(15);
  const auto grid = RegionFamily::threshold_grid(ContextUniverse(8));
  for (int trial = 0; trial < 5; ++trial) {
    const auto data = random_examples(rng, 8, 15);
    const auto fit = mle_oracle(data, grid);
    const double brute = grid_oracle(grid, data, 1e-4);
    CHECK(fit.loss <= brute + 1e-12);
    CHECK(brute - fit.loss <= 1e-3);
    CHECK(hypothesis_loss(grid, fit.hypothesis, data) == doctest::Approx(fit.loss).epsilon(1e-12));
  }
}

TEST_CASE("mle_oracle never loses to a 1e-3 theta grid") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t u = 1 + rng.uniform_index(32);
    const std::size_t len = rng.uniform_index(21);
    const auto data = random_examples(rng, u, len);
    const auto family = trial % 2 ? RegionFamily::threshold_grid(ContextUniverse(u))
                                  : random_explicit(rng, u, 1 + rng.uniform_index(6));
    const auto fit = mle_oracle(data, family);
    CHECK(fit.loss <= grid_oracle(family, data, 1e-3) + 1e-12);
  }
}

TEST_CASE("threshold fast path equals the generic scan") {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t u = 1 + rng.uniform_index(40);
    const auto data = random_examples(rng, u, rng.uniform_index(60));
    const auto family = RegionFamily::threshold_grid(ContextUniverse(u));
    ContextCounts cc(u);
    cc.add(data);
    const auto fast = mle_oracle(cc, family);
    const auto slow = mle_oracle_generic(cc, family);
    CHECK(fast.hypothesis.region == slow.hypothesis.region);
    CHECK(fast.hypothesis.theta0 == slow.hypothesis.theta0);
    CHECK(fast.hypothesis.theta1 == slow.hypothesis.theta1);
    CHECK(fast.loss == doctest::Approx(slow.loss).epsilon(1e-12));
  }
}

TEST_CASE("MLE tie-break picks the lowest region index") {
  const auto family = RegionFamily::threshold_grid(ContextUniverse(6));
  // All labels equal: every region attains zero loss.
  const std::vector<Example> data{{1, 1}, {4, 1}};
  CHECK(mle_oracle(data, family).hypothesis.region == 0);
}

TEST_CASE("offline_best_loss") {
  const ContextUniverse u(5);
  const auto grid = RegionFamily::threshold_grid(u);
  const std::vector<Example> ones{{0, 1}, {3, 1}, {4, 1}};
  CHECK(offline_best_loss(ones, grid) == 0.0);
  const auto single = RegionFamily::explicit_list(u, {{0, 1, 2, 3, 4}});
  const std::vector<Example> split{{2, 1}, {2, 0}};
  CHECK(offline_best_loss(split, single) == doctest::Approx(2.0 * std::log(2.0)));
}

TEST_CASE("offline_best_loss is monotone and prefix_best_losses agrees with it") {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t u = 2 + rng.uniform_index(20);
    const auto data = random_examples(rng, u, 60);
    const auto family = trial % 2 ? RegionFamily::threshold_grid(ContextUniverse(u))
                                  : random_explicit(rng, u, 1 + rng.uniform_index(8));
    const auto prefix = prefix_best_losses(data, family);
    REQUIRE(prefix.size() == data.size());
    double prev = 0.0;
    for (std::size_t t = 0; t < data.size(); ++t) {
      const double direct = offline_best_loss(std::span<const Example>(data).first(t + 1), family);
      CHECK(prefix[t] == doctest::Approx(direct).epsilon(1e-12));
      CHECK(direct >= prev - 1e-12);
      prev = direct;
    }
  }
}

TEST_CASE("hypothesis_loss is infinite when a label has probability zero") {
  const auto family = RegionFamily::threshold_grid(ContextUniverse(3));
  const std::vector<Example> data{{0, 1}};
  CHECK(std::isinf(hypothesis_loss(family, {0, 0.0, 0.5}, data)));
  CHECK(hypothesis_loss(family, {0, 1.0, 0.5}, data) == 0.0);
}
