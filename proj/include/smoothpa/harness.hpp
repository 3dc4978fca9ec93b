#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "smoothpa/core.hpp"
#include "smoothpa/hypotheses.hpp"

namespace smoothpa {

// Invalid experiment configuration; the message starts with the field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  nlohmann::json family;                 // RegionFamily spec
  std::vector<nlohmann::json> learners;  // learner specs, one sweep axis
  nlohmann::json adversary;
  std::vector<std::size_t> horizons;     // T axis
  std::vector<double> sigmas;            // sigma axis
  std::size_t repetitions = 1;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> output;
  std::size_t bootstrap = 200;

  // Accepts "T"/"sigma" scalars or "sweep":{"T":[...],"sigma":[...]}, a single
  // "learner" or a "learners" list, and "universe" as shorthand for a
  // threshold-grid family. Throws ConfigError.
  static ExperimentConfig from_json(const nlohmann::json& j);
};

struct CellSummary {
  std::string learner;       // stable label of the spec
  std::string learner_name;  // resolved name, e.g. with the auto FTPL schedule filled in
  std::size_t horizon = 0;
  double sigma = 1.0;
  std::vector<double> final_regret;  // one per repetition, in order
  double mean_regret = 0.0;
  double std_regret = 0.0;
  double mean_learner_loss = 0.0;
  double mean_comparator_loss = 0.0;
  double min_q1 = 1.0;
  double max_q1 = 0.0;
  bool complete = false;
};

struct ScalingFit {
  std::string learner;
  double sigma = 1.0;
  std::size_t points = 0;
  double loglog_slope = 0.0;  // ln(mean regret) vs ln T; NaN if some mean <= 0
  double loglog_intercept = 0.0;
  double loglog_ci_low = 0.0, loglog_ci_high = 0.0;
  double log_slope = 0.0;  // mean regret vs ln T
  double log_intercept = 0.0;
  double log_ci_low = 0.0, log_ci_high = 0.0;
};

struct SweepSummary {
  std::vector<CellSummary> cells;
  std::vector<ScalingFit> fits;
  bool interrupted = false;

  nlohmann::json to_json() const;
  static SweepSummary from_json(const nlohmann::json& j);
};

struct RunOptions {
  std::size_t threads = 1;
  const std::atomic<bool>* stop = nullptr;  // polled between repetitions
};

// Worker count from SMOOTHPA_THREADS, else hardware concurrency.
std::size_t default_thread_count();

// Plays every cell x repetition, fills comparators, writes one per-round CSV
// per cell and summary.json under config.output (when set), and fits scaling
// exponents when the T axis has at least four points. Output is independent
// of the thread count.
SweepSummary run(const ExperimentConfig& config, const RunOptions& options = {});

// Least-squares slopes per (learner, sigma) group, with bootstrap intervals
// over repetitions. Throws std::invalid_argument if a group has fewer than
// four horizons.
std::vector<ScalingFit> fit_scaling(const SweepSummary& summary, std::size_t bootstrap = 200,
                                    std::uint64_t seed = 0);

// Ordinary least-squares slope and intercept.
std::pair<double, double> least_squares(std::span<const double> xs, std::span<const double> ys);

inline constexpr const char* kRoundsCsvHeader =
    "run_id,seed,t,learner_loss,cum_learner_loss,cum_comparator_loss,cum_regret";

void write_rounds_csv(std::ostream& out, const std::string& run_id, const GameResult& result);

}  // namespace smoothpa
