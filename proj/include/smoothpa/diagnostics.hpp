#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "smoothpa/adversary.hpp"
#include "smoothpa/hypotheses.hpp"
#include "smoothpa/rng.hpp"

namespace smoothpa {

// --- chi-square stability ----------------------------------------------------

struct ChiSquareReport {
  double closed_form = 0.0;
  std::optional<double> brute_force;
  double bound = 0.0;           // 2 / (sigma n)
  double discarded_mass = 0.0;  // P-mass outside the enumerated box
};

// (2U/n) * sum_x D(x)^2, the chi-square between the one-step-shifted
// hallucination count law and the unshifted one.
ChiSquareReport chi_square_closed_form(const SmoothDistribution& d, double n_rate);

// Exhaustive evaluation of sum Q^2/P - 1 over count vectors whose per-cell
// Poisson(n/2U) mass exceeds tail_cutoff, with the adversary labelling every
// context 1. Throws if the enumeration would exceed max_states.
ChiSquareReport chi_square_bruteforce(const SmoothDistribution& d, double n_rate, double tail_cutoff,
                                      std::size_t max_states = 20'000'000);

// --- Rademacher complexity -----------------------------------------------------

struct RademacherEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::vector<std::size_t> worst_set;  // the multiset of contexts attaining the max
};

// sup over candidate context multisets X (|X| = sample_size) of
// E_eps sup_{f in F_alpha} (1/T) sum eps_x f(x). Candidates are mc_rounds random
// multisets plus the cyclic repeat of the universe; the sign expectation uses
// mc_rounds shared sign draws. The inner sup is exact: per region the best
// theta on each side is 0 or 1.
RademacherEstimate rademacher_estimate(const RegionFamily& family, double alpha, std::size_t sample_size,
                                       std::size_t mc_rounds, Rng& rng);

// Exact inner supremum for a given multiset and sign vector.
double rademacher_inner_sup(const RegionFamily& family, double alpha, std::span<const std::size_t> contexts,
                            std::span<const int> signs);

// --- regret bound ----------------------------------------------------------------

struct BoundInputs {
  double n_rate = 1.0;
  double alpha = 0.01;
  double sigma = 1.0;
  double horizon = 1.0;
  std::optional<double> block_size;               // fixed m; otherwise minimized over a log grid
  std::function<double(double)> rademacher;       // sample size -> Rad(F_alpha, size)

  void validate() const;
};

struct BoundReport {
  double total = 0.0;
  double perturbation = 0.0;  // n ln(1/alpha)
  double truncation = 0.0;    // alpha T
  double chi_square = 0.0;    // T sqrt(ln(1/alpha) / (sigma n))
  double generalization = 0.0;  // T * bracket at the chosen m
  double block_size = 1.0;
};

// Grid of 32 log-spaced block sizes on [1, n].
BoundReport theorem_bound(const BoundInputs& in);

// --- NML ---------------------------------------------------------------------------

// A hypothesis given by its value f(x) = P(y = 1 | x) on every context.
using PointwiseHypothesis = std::vector<double>;

// ln sum_{y in {0,1}^T} max_f prod_t p_f(y_t | x_t). Rejects T > 22, more than
// 10^4 hypotheses, or 2^T * |F| above 2^31.
double nml_value(std::span<const PointwiseHypothesis> hypotheses, std::span<const std::size_t> contexts);

// Tabulates a region hypothesis on every context.
PointwiseHypothesis tabulate(const RegionFamily& family, const Hypothesis& h);

}  // namespace smoothpa
