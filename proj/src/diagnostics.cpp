#include "smoothpa/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace smoothpa {

namespace {

double poisson_pmf(double mean, std::uint64_t k) {
  const double kd = static_cast<double>(k);
  return std::exp(kd * std::log(mean) - mean - std::lgamma(kd + 1.0));
}

}  // namespace

ChiSquareReport chi_square_closed_form(const SmoothDistribution& d, double n_rate) {
  if (!(n_rate > 0.0)) throw std::invalid_argument("chi_square: n must be positive");
  double collision = 0.0;
  for (double p : d.pmf()) collision += p * p;
  ChiSquareReport r;
  r.closed_form = 2.0 * static_cast<double>(d.size()) / n_rate * collision;
  r.bound = 2.0 / (d.sigma() * n_rate);
  return r;
}

ChiSquareReport chi_square_bruteforce(const SmoothDistribution& d, double n_rate, double tail_cutoff,
                                      std::size_t max_states) {
  if (!(tail_cutoff > 0.0 && tail_cutoff < 1.0))
    throw std::invalid_argument("chi_square_bruteforce: cutoff must lie in (0,1)");
  ChiSquareReport report = chi_square_closed_form(d, n_rate);
  const std::size_t u = d.size();
  const double lambda = n_rate / (2.0 * static_cast<double>(u));

  // Per-cell support: the contiguous run of counts whose mass exceeds the
  // cutoff (the Poisson pmf is unimodal).
  std::vector<double> pmf;
  std::uint64_t lo = std::numeric_limits<std::uint64_t>::max();
  for (std::uint64_t c = 0;; ++c) {
    const double p = poisson_pmf(lambda, c);
    if (p > tail_cutoff) {
      if (lo == std::numeric_limits<std::uint64_t>::max()) lo = c;
      pmf.push_back(p);
    } else if (lo != std::numeric_limits<std::uint64_t>::max() || static_cast<double>(c) > lambda) {
      break;
    }
  }
  if (pmf.empty()) throw std::invalid_argument("chi_square_bruteforce: cutoff removes the whole support");
  const std::size_t width = pmf.size();
  const double cell_mass = std::accumulate(pmf.begin(), pmf.end(), 0.0);

  double states = 1.0;
  for (std::size_t i = 0; i < u; ++i) states *= static_cast<double>(width);
  if (states > static_cast<double>(max_states))
    throw std::invalid_argument("chi_square_bruteforce: enumeration of " + std::to_string(states) +
                                " states exceeds the limit");

  // pmf of count c within the box, and of c - 1 (the pre-shift count), which
  // may fall below the box.
  auto box_pmf = [&](std::size_t idx) { return pmf[idx]; };
  auto shifted_pmf = [&](std::size_t idx) {
    const std::uint64_t c = lo + idx;
    return c == 0 ? 0.0 : poisson_pmf(lambda, c - 1);
  };

  // Label-0 cells are identical under P and Q and factor out; enumerate the
  // label-1 cells, where the adversary's point lands.
  std::vector<std::size_t> idx(u, 0);
  double sum_ratio = 0.0;
  for (;;) {
    double p = 1.0;
    for (std::size_t x = 0; x < u; ++x) p *= box_pmf(idx[x]);
    double q = 0.0;
    for (std::size_t star = 0; star < u; ++star) {
      if (d[star] == 0.0) continue;
      double term = d[star] * shifted_pmf(idx[star]);
      for (std::size_t x = 0; x < u; ++x)
        if (x != star) term *= box_pmf(idx[x]);
      q += term;
    }
    sum_ratio += q * q / p;

    std::size_t pos = 0;
    while (pos < u && ++idx[pos] == width) idx[pos++] = 0;
    if (pos == u) break;
  }
  const double label0_mass = std::pow(cell_mass, static_cast<double>(u));
  report.brute_force = label0_mass * sum_ratio - 1.0;
  report.discarded_mass = 1.0 - label0_mass * label0_mass;
  return report;
}

// --- Rademacher ---------------------------------------------------------------------

double rademacher_inner_sup(const RegionFamily& family, double alpha, std::span<const std::size_t> contexts,
                            std::span<const int> signs) {
  if (contexts.size() != signs.size() || contexts.empty())
    throw std::invalid_argument("rademacher_inner_sup: contexts and signs must be non-empty and aligned");
  const std::size_t u = family.universe().size();
  std::vector<double> per_context(u, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    per_context[contexts[i]] += signs[i];
    total += signs[i];
  }

  double best = 0.0;
  if (family.kind() == RegionKind::threshold_grid) {
    double inside = 0.0;
    for (std::size_t a = 0; a < family.num_regions(); ++a) {
      inside += per_context[a];
      best = std::max(best, std::max(0.0, inside) + std::max(0.0, total - inside));
    }
  } else {
    for (std::size_t r = 0; r < family.num_regions(); ++r) {
      double inside = 0.0;
      for (std::size_t x = 0; x < u; ++x)
        if (family.contains(r, x)) inside += per_context[x];
      best = std::max(best, std::max(0.0, inside) + std::max(0.0, total - inside));
    }
  }
  return (best + alpha * total) / ((1.0 + 2.0 * alpha) * static_cast<double>(contexts.size()));
}

RademacherEstimate rademacher_estimate(const RegionFamily& family, double alpha, std::size_t sample_size,
                                       std::size_t mc_rounds, Rng& rng) {
  if (sample_size == 0) throw std::invalid_argument("rademacher_estimate: sample_size must be >= 1");
  if (mc_rounds == 0) throw std::invalid_argument("rademacher_estimate: mc_rounds must be >= 1");
  if (!(alpha >= 0.0)) throw std::invalid_argument("rademacher_estimate: alpha must be non-negative");
  const std::size_t u = family.universe().size();

  std::vector<std::vector<int>> signs(mc_rounds, std::vector<int>(sample_size));
  for (auto& draw : signs)
    for (int& s : draw) s = rng.bit() ? 1 : -1;

  std::vector<std::vector<std::size_t>> candidates;
  candidates.reserve(mc_rounds + 1);
  std::vector<std::size_t> cyclic(sample_size);
  for (std::size_t i = 0; i < sample_size; ++i) cyclic[i] = i % u;
  candidates.push_back(std::move(cyclic));
  for (std::size_t c = 0; c < mc_rounds; ++c) {
    std::vector<std::size_t> set(sample_size);
    for (auto& x : set) x = static_cast<std::size_t>(rng.uniform_index(u));
    candidates.push_back(std::move(set));
  }

  RademacherEstimate best;
  best.value = -std::numeric_limits<double>::infinity();
  for (const auto& set : candidates) {
    double sum = 0.0, sum_sq = 0.0;
    for (const auto& draw : signs) {
      const double v = rademacher_inner_sup(family, alpha, set, draw);
      sum += v;
      sum_sq += v * v;
    }
    const double k = static_cast<double>(mc_rounds);
    const double mean = sum / k;
    if (mean > best.value) {
      const double var = mc_rounds > 1 ? std::max(0.0, (sum_sq - k * mean * mean) / (k - 1.0)) : 0.0;
      best.value = mean;
      best.std_error = std::sqrt(var / k);
      best.worst_set = set;
    }
  }
  return best;
}

// --- bound ---------------------------------------------------------------------------

void BoundInputs::validate() const {
  if (!(n_rate >= 1.0)) throw std::invalid_argument("bound: n must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("bound: alpha must lie in (0,1)");
  if (!(sigma > 0.0 && sigma <= 1.0)) throw std::invalid_argument("bound: sigma must lie in (0,1]");
  if (!(horizon > 0.0)) throw std::invalid_argument("bound: T must be positive");
  if (block_size && !(*block_size >= 1.0 && *block_size <= n_rate))
    throw std::invalid_argument("bound: m must lie in [1, n]");
  if (!rademacher) throw std::invalid_argument("bound: missing Rademacher function");
}

BoundReport theorem_bound(const BoundInputs& in) {
  in.validate();
  const double log_inv_alpha = std::log(1.0 / in.alpha);
  const double n = in.n_rate;
  const double t = in.horizon;

  auto bracket = [&](double m) {
    return in.rademacher(n / m) / in.alpha + n * std::pow(1.0 - in.sigma, m) * log_inv_alpha / m +
           std::exp(-n / 8.0);
  };

  BoundReport r;
  r.perturbation = n * log_inv_alpha;
  r.truncation = in.alpha * t;
  r.chi_square = t * std::sqrt(log_inv_alpha / (in.sigma * n));
  if (in.block_size) {
    r.block_size = *in.block_size;
    r.generalization = t * bracket(r.block_size);
  } else {
    constexpr int kGrid = 32;
    r.generalization = std::numeric_limits<double>::infinity();
    for (int k = 0; k < kGrid; ++k) {
      const double m = std::exp(std::log(n) * k / (kGrid - 1));
      const double value = t * bracket(m);
      if (value < r.generalization) {
        r.generalization = value;
        r.block_size = m;
      }
    }
  }
  r.total = r.perturbation + r.truncation + r.chi_square + r.generalization;
  return r;
}

// --- NML -----------------------------------------------------------------------------

namespace {

struct LogSumExp {
  double top = -std::numeric_limits<double>::infinity();
  double sum = 0.0;

  void add(double v) {
    if (v == -std::numeric_limits<double>::infinity()) return;
    if (v > top) {
      sum = sum * std::exp(top - v) + 1.0;
      top = v;
    } else {
      sum += std::exp(v - top);
    }
  }
  double value() const { return top + std::log(sum); }
};

double safe_log(double p) { return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity(); }

void nml_descend(std::span<const PointwiseHypothesis> hyps, std::span<const std::size_t> contexts,
                 std::size_t depth, std::vector<std::vector<double>>& logp, LogSumExp& acc) {
  const auto& cur = logp[depth];
  if (depth == contexts.size()) {
    acc.add(*std::max_element(cur.begin(), cur.end()));
    return;
  }
  auto& next = logp[depth + 1];
  const std::size_t x = contexts[depth];
  for (int y = 0; y <= 1; ++y) {
    for (std::size_t h = 0; h < hyps.size(); ++h) {
      const double p = y == 1 ? hyps[h][x] : 1.0 - hyps[h][x];
      next[h] = cur[h] + safe_log(p);
    }
    nml_descend(hyps, contexts, depth + 1, logp, acc);
  }
}

}  // namespace

double nml_value(std::span<const PointwiseHypothesis> hypotheses, std::span<const std::size_t> contexts) {
  if (hypotheses.empty()) throw std::invalid_argument("nml_value: empty hypothesis list");
  if (contexts.size() > 22) throw std::invalid_argument("nml_value: T > 22 is too large to enumerate");
  if (hypotheses.size() > 10'000) throw std::invalid_argument("nml_value: more than 10^4 hypotheses");
  if (std::ldexp(static_cast<double>(hypotheses.size()), static_cast<int>(contexts.size())) > 0x1p31)
    throw std::invalid_argument("nml_value: 2^T * |F| exceeds the enumeration budget");
  for (const auto& h : hypotheses) {
    for (std::size_t x : contexts)
      if (x >= h.size()) throw std::invalid_argument("nml_value: context outside a hypothesis' domain");
    for (double v : h)
      if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("nml_value: hypothesis value outside [0,1]");
  }
  std::vector<std::vector<double>> logp(contexts.size() + 1, std::vector<double>(hypotheses.size(), 0.0));
  LogSumExp acc;
  nml_descend(hypotheses, contexts, 0, logp, acc);
  return acc.value();
}

PointwiseHypothesis tabulate(const RegionFamily& family, const Hypothesis& h) {
  PointwiseHypothesis out(family.universe().size());
  for (std::size_t x = 0; x < out.size(); ++x) out[x] = evaluate(family, h, x).q1;
  return out;
}

}  // namespace smoothpa
