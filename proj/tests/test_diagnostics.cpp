#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "smoothpa/diagnostics.hpp"
#include "smoothpa/harness.hpp"
#include "smoothpa/learners.hpp"

using namespace smoothpa;

namespace {

SmoothDistribution random_smooth(Rng& rng, std::size_t u, double sigma) {
  // Water-filling: random weights, capped at 1/(sigma U), excess spread over the rest.
  const double cap = 1.0 / (sigma * static_cast<double>(u));
  std::vector<double> w(u);
  for (auto& v : w) v = -std::log(1.0 - rng.uniform01());
  double sum = 0.0;
  for (double v : w) sum += v;
  for (auto& v : w) v /= sum;
  for (int pass = 0; pass < 64; ++pass) {
    double excess = 0.0, free_mass = 0.0;
    for (auto& v : w) {
      if (v > cap) {
        excess += v - cap;
        v = cap;
      } else if (v < cap) {
        free_mass += v;
      }
    }
    if (excess <= 0.0) break;
    for (auto& v : w)
      if (v < cap) v += excess * (free_mass > 0.0 ? v / free_mass : 1.0 / static_cast<double>(u));
  }
  for (auto& v : w) v = std::min(v, cap * (1.0 - 1e-15));
  sum = 0.0;
  for (double v : w) sum += v;
  for (auto& v : w) v /= sum;
  return SmoothDistribution(w, sigma);
}

// Exact E over all sign patterns of max(0, mean eps).
double exact_positive_mean(std::size_t t) {
  double total = 0.0;
  for (std::uint64_t mask = 0; mask < (1ULL << t); ++mask) {
    const double s = 2.0 * __builtin_popcountll(mask) - static_cast<double>(t);
    total += std::max(0.0, s / static_cast<double>(t));
  }
  return total / static_cast<double>(1ULL << t);
}

double brute_inner_sup(const RegionFamily& family, double alpha, std::span<const std::size_t> contexts,
                       std::span<const int> signs) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < family.num_regions(); ++r)
    for (double t0 : {0.0, 0.25, 0.5, 1.0})
      for (double t1 : {0.0, 0.5, 0.75, 1.0}) {
        double s = 0.0;
        for (std::size_t i = 0; i < contexts.size(); ++i)
          s += signs[i] * truncate_prediction(evaluate(family, {r, t0, t1}, contexts[i]).q1, alpha);
        best = std::max(best, s / static_cast<double>(contexts.size()));
      }
  return best;
}

// Worst-case regret of a sequential strategy over all label sequences.
double worst_case_regret(const RegionFamily& family, std::span<const PointwiseHypothesis> hyps,
                         std::span<const std::size_t> contexts) {
  const std::size_t t = contexts.size();
  double worst = -std::numeric_limits<double>::infinity();
  for (std::uint64_t mask = 0; mask < (1ULL << t); ++mask) {
    VcMixture mix(family, epsilon_cover(family, 1e-9));
    double learner = 0.0;
    std::vector<double> comparator(hyps.size(), 0.0);
    for (std::size_t i = 0; i < t; ++i) {
      const int y = static_cast<int>((mask >> i) & 1);
      const double q = mix.predict(contexts[i]).q1;
      learner -= std::log(y ? q : 1.0 - q);
      for (std::size_t h = 0; h < hyps.size(); ++h) {
        const double p = y ? hyps[h][contexts[i]] : 1.0 - hyps[h][contexts[i]];
        comparator[h] -= p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
      }
      mix.update(contexts[i], y);
    }
    worst = std::max(worst, learner - *std::min_element(comparator.begin(), comparator.end()));
  }
  return worst;
}

}  // namespace

TEST_CASE("chi-square closed form examples") {
  for (std::size_t u : {1u, 4u, 10u}) {
    const auto d = SmoothDistribution::uniform(ContextUniverse(u));
    const auto r = chi_square_closed_form(d, 8.0);
    CHECK(r.closed_form == doctest::Approx(2.0 / 8.0));
    CHECK(r.bound == doctest::Approx(r.closed_form));
  }
  const ContextUniverse u(10);
  const std::vector<std::size_t> half{0, 2, 4, 6, 8};
  const auto d = SmoothDistribution::uniform_on(half, u, 0.5);
  const auto r = chi_square_closed_form(d, 3.0);
  CHECK(r.closed_form == doctest::Approx(4.0 / 3.0));
  CHECK(r.closed_form == doctest::Approx(r.bound));
  CHECK_THROWS(chi_square_closed_form(d, 0.0));
}

TEST_CASE("chi-square closed form respects the smoothness bound") {
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    const std::size_t u = 1 + rng.uniform_index(64);
    const double sigma = 0.01 + 0.99 * rng.uniform01();
    const double n = 0.5 + 50.0 * rng.uniform01();
    const auto d = random_smooth(rng, u, sigma);
    const auto r = chi_square_closed_form(d, n);
    CHECK(r.closed_form <= r.bound + 1e-9);
  }
}

TEST_CASE("chi-square brute force agrees with the closed form") {
  const auto d = SmoothDistribution::uniform(ContextUniverse(2));
  const auto tight = chi_square_bruteforce(d, 4.0, 1e-12);
  REQUIRE(tight.brute_force);
  CHECK(std::abs(*tight.brute_force - tight.closed_form) <= 1e-6);

  Rng rng(2);
  for (std::size_t u : {2u, 3u})
    for (double n : {2.0, 8.0}) {
      const auto skew = random_smooth(rng, u, 0.6);
      const auto r = chi_square_bruteforce(skew, n, 1e-12);
      CHECK(std::abs(*r.brute_force - r.closed_form) <= 1e-6 + r.discarded_mass);
    }
}

TEST_CASE("looser cutoff discards more mass") {
  const auto d = SmoothDistribution::uniform(ContextUniverse(2));
  const auto tight = chi_square_bruteforce(d, 4.0, 1e-12);
  const auto loose = chi_square_bruteforce(d, 4.0, 1e-3);
  CHECK(loose.discarded_mass > tight.discarded_mass);
  CHECK(tight.discarded_mass < 1e-9);
  CHECK_THROWS(chi_square_bruteforce(d, 4.0, 0.0));
  CHECK_THROWS(chi_square_bruteforce(d, 4.0, 1.0));
  CHECK_THROWS(chi_square_bruteforce(SmoothDistribution::uniform(ContextUniverse(12)), 8.0, 1e-12));
}

TEST_CASE("Rademacher inner sup is exact") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t u = 1 + rng.uniform_index(8);
    std::vector<std::vector<std::size_t>> regions(1 + rng.uniform_index(5));
    for (auto& r : regions)
      for (std::size_t x = 0; x < u; ++x)
        if (rng.bit()) r.push_back(x);
    const auto family = trial % 2 ? RegionFamily::threshold_grid(ContextUniverse(u))
                                  : RegionFamily::explicit_list(ContextUniverse(u), regions);
    const std::size_t t = 1 + rng.uniform_index(12);
    std::vector<std::size_t> contexts(t);
    std::vector<int> signs(t);
    for (std::size_t i = 0; i < t; ++i) {
      contexts[i] = rng.uniform_index(u);
      signs[i] = rng.bit() ? 1 : -1;
    }
    const double alpha = trial % 3 == 0 ? 0.0 : 0.1;
    CHECK(rademacher_inner_sup(family, alpha, contexts, signs) ==
          doctest::Approx(brute_inner_sup(family, alpha, contexts, signs)).epsilon(1e-12));
  }
}

TEST_CASE("Rademacher of a constant class matches exact enumeration") {
  const auto single = RegionFamily::explicit_list(ContextUniverse(3), {{0, 1, 2}});
  for (std::size_t t : {1u, 4u, 9u}) {
    Rng rng(t);
    const auto est = rademacher_estimate(single, 0.0, t, 4000, rng);
    CHECK(std::abs(est.value - exact_positive_mean(t)) <= 4.0 * est.std_error + 1e-12);
  }
}

TEST_CASE("truncation changes the estimate by the affine factor") {
  const auto grid = RegionFamily::threshold_grid(ContextUniverse(20));
  for (double alpha : {0.01, 0.1, 0.3}) {
    Rng a(5), b(5);
    const double plain = rademacher_estimate(grid, 0.0, 30, 200, a).value;
    const double truncated = rademacher_estimate(grid, alpha, 30, 200, b).value;
    CHECK(std::abs((1.0 + 2.0 * alpha) * truncated - plain) <= alpha + 1e-12);
  }
  Rng rng(1);
  CHECK_THROWS(rademacher_estimate(grid, 0.1, 0, 10, rng));
  CHECK_THROWS(rademacher_estimate(grid, 0.1, 10, 0, rng));
}

TEST_CASE("Rademacher of thresholds decays like 1/sqrt(T)") {
  const auto grid = RegionFamily::threshold_grid(ContextUniverse(256));
  std::vector<double> xs, ys;
  for (std::size_t t = 16; t <= 2048; t *= 2) {
    Rng rng(t);
    xs.push_back(std::log(static_cast<double>(t)));
    ys.push_back(std::log(rademacher_estimate(grid, 0.0, t, 100, rng).value));
  }
  const auto [slope, intercept] = least_squares(xs, ys);
  CHECK(std::abs(slope + 0.5) <= 0.1);
}

TEST_CASE("bound with rad = 0, sigma = 1, m = n") {
  const double n = 40.0, alpha = 0.05, t = 1000.0;
  BoundInputs in{n, alpha, 1.0, t, n, [](double) { return 0.0; }};
  const auto r = theorem_bound(in);
  const double l = std::log(1.0 / alpha);
  CHECK(r.total == doctest::Approx(n * l + alpha * t + t * std::sqrt(l / n) + t * std::exp(-n / 8.0)).epsilon(1e-13));
  CHECK(r.block_size == n);
}

TEST_CASE("bound scaling") {
  auto slope_for = [](const std::function<double(double)>& alpha_of) {
    std::vector<double> xs, ys;
    for (int k = 10; k <= 20; ++k) {
      const double t = std::ldexp(1.0, k);
      BoundInputs in{std::pow(t, 0.8), alpha_of(t), 1.0, t, std::nullopt,
                     [](double s) { return std::sqrt(1.0 / s); }};
      xs.push_back(std::log(t));
      ys.push_back(std::log(theorem_bound(in).total));
    }
    return least_squares(xs, ys).first;
  };
  // With alpha tuned as T^{-1/5} every term balances at T^{4/5}.
  const double tuned = slope_for([](double t) { return std::pow(t, -0.2); });
  CHECK(tuned >= 0.75);
  CHECK(tuned <= 0.9);
  // A fixed alpha = 0.01 lets the (1/alpha) rad term dominate: still sublinear.
  const double fixed = slope_for([](double) { return 0.01; });
  CHECK(fixed > 0.5);
  CHECK(fixed < 1.0);
}

TEST_CASE("bound is monotone nonincreasing in sigma") {
  Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    const double n = 1.0 + 500.0 * rng.uniform01();
    const double alpha = 0.001 + 0.4 * rng.uniform01();
    const double t = 10.0 + 1e5 * rng.uniform01();
    std::optional<double> m;
    if (i % 2) m = 1.0 + (n - 1.0) * rng.uniform01();
    double prev = std::numeric_limits<double>::infinity();
    for (double sigma = 0.05; sigma <= 1.0; sigma += 0.05) {
      BoundInputs in{n, alpha, sigma, t, m, [](double s) { return 1.0 / std::sqrt(s); }};
      const double v = theorem_bound(in).total;
      CHECK(v <= prev * (1.0 + 1e-12));
      prev = v;
    }
  }
}

TEST_CASE("bound input validation") {
  auto rad = [](double) { return 0.1; };
  CHECK_THROWS(theorem_bound({0.5, 0.1, 0.5, 10.0, std::nullopt, rad}));
  CHECK_THROWS(theorem_bound({5.0, 0.0, 0.5, 10.0, std::nullopt, rad}));
  CHECK_THROWS(theorem_bound({5.0, 0.1, 0.0, 10.0, std::nullopt, rad}));
  CHECK_THROWS(theorem_bound({5.0, 0.1, 0.5, 10.0, 6.0, rad}));
  CHECK_THROWS(theorem_bound({5.0, 0.1, 0.5, 10.0, std::nullopt, {}}));
}

TEST_CASE("nml_value examples") {
  const std::vector<PointwiseHypothesis> half{{0.5, 0.5}};
  const std::vector<std::size_t> contexts{0, 1, 1, 0, 1};
  CHECK(std::abs(nml_value(half, contexts)) <= 1e-12);

  const std::vector<PointwiseHypothesis> extremes{{0.0}, {1.0}};
  const std::vector<std::size_t> two{0, 0};
  CHECK(nml_value(extremes, two) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  CHECK_THROWS(nml_value({}, two));
  CHECK_THROWS(nml_value(half, std::vector<std::size_t>(23, 0)));
  CHECK_THROWS(nml_value(half, std::vector<std::size_t>{2}));
}

TEST_CASE("nml_value is invariant under context permutation") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<PointwiseHypothesis> hyps(1 + rng.uniform_index(8), PointwiseHypothesis(4));
    for (auto& h : hyps)
      for (auto& v : h) v = rng.uniform01();
    std::vector<std::size_t> contexts(8);
    for (auto& x : contexts) x = rng.uniform_index(4);
    const double base = nml_value(hyps, contexts);
    auto shuffled = contexts;
    std::reverse(shuffled.begin(), shuffled.end());
    std::rotate(shuffled.begin(), shuffled.begin() + 3, shuffled.end());
    CHECK(nml_value(hyps, shuffled) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("mixture worst-case regret is at least the NML value") {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t u = 1 + rng.uniform_index(4);
    const auto family = RegionFamily::threshold_grid(ContextUniverse(u));
    std::vector<PointwiseHypothesis> hyps;
    const std::size_t count = 1 + rng.uniform_index(16);
    for (std::size_t i = 0; i < count; ++i)
      hyps.push_back(tabulate(family, {rng.uniform_index(u), rng.uniform01(), rng.uniform01()}));
    std::vector<std::size_t> contexts(1 + rng.uniform_index(8));
    for (auto& x : contexts) x = rng.uniform_index(u);
    CHECK(worst_case_regret(family, hyps, contexts) >= nml_value(hyps, contexts) - 1e-9);
  }
}

TEST_CASE("tabulate") {
  const auto grid = RegionFamily::threshold_grid(ContextUniverse(4));
  CHECK(tabulate(grid, {1, 0.2, 0.7}) == PointwiseHypothesis{0.2, 0.2, 0.7, 0.7});
}
