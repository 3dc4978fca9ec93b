#include "smoothpa/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "smoothpa/adversary.hpp"
#include "smoothpa/game.hpp"
#include "smoothpa/learners.hpp"
#include "smoothpa/rng.hpp"

namespace smoothpa {

namespace {

template <class T>
T get_field(const nlohmann::json& j, const std::string& key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path + ": missing or has the wrong type");
  }
}

template <class T>
std::vector<T> scalar_or_list(const nlohmann::json& j, const std::string& key, const std::string& path) {
  const auto& v = j.at(key);
  try {
    if (v.is_array()) return v.get<std::vector<T>>();
    return {v.get<T>()};
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path + ": expected a value or a list of values");
  }
}

std::string format_sigma(double sigma) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", sigma);
  return buf;
}

std::string run_id(const std::string& label, std::size_t horizon, double sigma, std::size_t rep) {
  return label + ":T" + std::to_string(horizon) + ":s" + format_sigma(sigma) + ":r" + std::to_string(rep);
}

std::string cell_file_name(const CellSummary& cell) {
  return "rounds_" + cell.learner + "_T" + std::to_string(cell.horizon) + "_s" + format_sigma(cell.sigma) + ".csv";
}

void write_file_atomically(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double nan_if_not_finite(double v) { return std::isfinite(v) ? v : std::numeric_limits<double>::quiet_NaN(); }

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

double number_from(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

// --- config ------------------------------------------------------------------

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("$: expected a JSON object");
  ExperimentConfig c;

  if (j.contains("family")) {
    c.family = j.at("family");
  } else if (j.contains("universe")) {
    c.family = {{"kind", "threshold_grid"}, {"size", get_field<std::size_t>(j, "universe", "universe")}};
  } else {
    throw ConfigError("family: required (or give \"universe\" for a threshold grid)");
  }
  std::optional<RegionFamily> family;
  try {
    family.emplace(RegionFamily::from_json(c.family));
  } catch (const std::exception& e) {
    throw ConfigError(std::string(e.what()));
  }
  if (j.contains("universe") && get_field<std::size_t>(j, "universe", "universe") != family->universe().size())
    throw ConfigError("universe: disagrees with family size");

  if (j.contains("learners")) {
    if (!j.at("learners").is_array() || j.at("learners").empty())
      throw ConfigError("learners: expected a non-empty list");
    for (const auto& l : j.at("learners")) c.learners.push_back(l);
  } else if (j.contains("learner")) {
    c.learners.push_back(j.at("learner"));
  } else {
    throw ConfigError("learners: required");
  }

  if (!j.contains("adversary")) throw ConfigError("adversary: required");
  c.adversary = j.at("adversary");

  const nlohmann::json sweep = j.value("sweep", nlohmann::json::object());
  if (sweep.contains("T")) c.horizons = scalar_or_list<std::size_t>(sweep, "T", "sweep.T");
  else if (j.contains("T")) c.horizons = scalar_or_list<std::size_t>(j, "T", "T");
  else throw ConfigError("T: required (or sweep.T)");

  if (sweep.contains("sigma")) c.sigmas = scalar_or_list<double>(sweep, "sigma", "sweep.sigma");
  else if (j.contains("sigma")) c.sigmas = scalar_or_list<double>(j, "sigma", "sigma");
  else if (c.adversary.is_object() && c.adversary.contains("sigma"))
    c.sigmas = {get_field<double>(c.adversary, "sigma", "adversary.sigma")};
  else throw ConfigError("sigma: required (or sweep.sigma, or adversary.sigma)");

  if (c.horizons.empty()) throw ConfigError("T: empty sweep axis");
  if (c.sigmas.empty()) throw ConfigError("sigma: empty sweep axis");
  for (std::size_t i = 0; i < c.horizons.size(); ++i)
    if (c.horizons[i] == 0) throw ConfigError("T[" + std::to_string(i) + "]: must be at least 1");
  for (std::size_t i = 0; i < c.sigmas.size(); ++i)
    if (!(c.sigmas[i] > 0.0 && c.sigmas[i] <= 1.0))
      throw ConfigError("sigma[" + std::to_string(i) + "]: must lie in (0,1]");

  c.repetitions = j.contains("repetitions") ? get_field<std::size_t>(j, "repetitions", "repetitions") : 1;
  if (c.repetitions == 0) throw ConfigError("repetitions: must be at least 1");
  c.seed = j.contains("seed") ? get_field<std::uint64_t>(j, "seed", "seed") : 0;
  if (j.contains("output")) c.output = get_field<std::string>(j, "output", "output");
  if (j.contains("bootstrap")) c.bootstrap = get_field<std::size_t>(j, "bootstrap", "bootstrap");

  // Build every learner and adversary once so spec errors surface before running.
  for (std::size_t li = 0; li < c.learners.size(); ++li) {
    for (std::size_t t : c.horizons) {
      for (double s : c.sigmas) {
        const GameShape shape{t, s};
        try {
          (void)make_learner(c.learners[li], *family, shape);
        } catch (const std::exception& e) {
          throw ConfigError("learners[" + std::to_string(li) + "]: " + e.what());
        }
        try {
          (void)make_adversary(c.adversary, *family, shape);
        } catch (const std::exception& e) {
          throw ConfigError(std::string(e.what()));
        }
      }
    }
    (void)learner_label(c.learners[li]);
  }
  return c;
}

// --- summary json --------------------------------------------------------------

nlohmann::json SweepSummary::to_json() const {
  nlohmann::json cj = nlohmann::json::array();
  for (const auto& c : cells) {
    cj.push_back({{"learner", c.learner},
                  {"learner_name", c.learner_name},
                  {"T", c.horizon},
                  {"sigma", c.sigma},
                  {"repetitions", c.final_regret.size()},
                  {"complete", c.complete},
                  {"final_regret", c.final_regret},
                  {"mean_regret", c.mean_regret},
                  {"std_regret", c.std_regret},
                  {"mean_learner_loss", c.mean_learner_loss},
                  {"mean_comparator_loss", c.mean_comparator_loss},
                  {"min_q1", c.min_q1},
                  {"max_q1", c.max_q1}});
  }
  nlohmann::json fj = nlohmann::json::array();
  for (const auto& f : fits) {
    fj.push_back({{"learner", f.learner},
                  {"sigma", f.sigma},
                  {"points", f.points},
                  {"loglog_slope", number_or_null(f.loglog_slope)},
                  {"loglog_intercept", number_or_null(f.loglog_intercept)},
                  {"loglog_ci", {number_or_null(f.loglog_ci_low), number_or_null(f.loglog_ci_high)}},
                  {"log_slope", number_or_null(f.log_slope)},
                  {"log_intercept", number_or_null(f.log_intercept)},
                  {"log_ci", {number_or_null(f.log_ci_low), number_or_null(f.log_ci_high)}}});
  }
  return {{"cells", cj}, {"fits", fj}, {"interrupted", interrupted}};
}

SweepSummary SweepSummary::from_json(const nlohmann::json& j) {
  SweepSummary s;
  s.interrupted = j.value("interrupted", false);
  for (const auto& c : j.at("cells")) {
    CellSummary cell;
    cell.learner = c.at("learner").get<std::string>();
    cell.learner_name = c.value("learner_name", cell.learner);
    cell.horizon = c.at("T").get<std::size_t>();
    cell.sigma = c.at("sigma").get<double>();
    cell.final_regret = c.at("final_regret").get<std::vector<double>>();
    cell.mean_regret = c.value("mean_regret", mean_of(cell.final_regret));
    cell.std_regret = c.value("std_regret", stddev_of(cell.final_regret));
    cell.mean_learner_loss = c.value("mean_learner_loss", 0.0);
    cell.mean_comparator_loss = c.value("mean_comparator_loss", 0.0);
    cell.min_q1 = c.value("min_q1", 0.0);
    cell.max_q1 = c.value("max_q1", 1.0);
    cell.complete = c.value("complete", true);
    s.cells.push_back(std::move(cell));
  }
  if (j.contains("fits")) {
    for (const auto& f : j.at("fits")) {
      ScalingFit fit;
      fit.learner = f.at("learner").get<std::string>();
      fit.sigma = f.at("sigma").get<double>();
      fit.points = f.at("points").get<std::size_t>();
      fit.loglog_slope = number_from(f.at("loglog_slope"));
      fit.loglog_intercept = number_from(f.at("loglog_intercept"));
      fit.loglog_ci_low = number_from(f.at("loglog_ci")[0]);
      fit.loglog_ci_high = number_from(f.at("loglog_ci")[1]);
      fit.log_slope = number_from(f.at("log_slope"));
      fit.log_intercept = number_from(f.at("log_intercept"));
      fit.log_ci_low = number_from(f.at("log_ci")[0]);
      fit.log_ci_high = number_from(f.at("log_ci")[1]);
      s.fits.push_back(fit);
    }
  }
  return s;
}

// --- csv -------------------------------------------------------------------------

void write_rounds_csv(std::ostream& out, const std::string& id, const GameResult& result) {
  char buf[256];
  for (const auto& r : result.records) {
    std::snprintf(buf, sizeof buf, "%s,%llu,%zu,%.12g,%.12g,%.12g,%.12g\n", id.c_str(),
                  static_cast<unsigned long long>(r.seed), r.t, r.learner_loss, r.cum_learner_loss,
                  r.cum_comparator_loss, r.cum_regret);
    out << buf;
  }
}

// --- fitting ---------------------------------------------------------------------

std::pair<double, double> least_squares(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw std::invalid_argument("least_squares: need >= 2 aligned points");
  const double mx = mean_of(xs), my = mean_of(ys);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("least_squares: x values are all equal");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

std::vector<ScalingFit> fit_scaling(const SweepSummary& summary, std::size_t bootstrap, std::uint64_t seed) {
  std::map<std::pair<std::string, double>, std::vector<const CellSummary*>> groups;
  std::vector<std::pair<std::string, double>> order;
  for (const auto& c : summary.cells) {
    if (!c.complete || c.final_regret.empty()) continue;
    const auto key = std::make_pair(c.learner, c.sigma);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&c);
  }
  if (groups.empty()) throw std::invalid_argument("fit_scaling: no complete cells");

  std::vector<ScalingFit> fits;
  for (std::size_t g = 0; g < order.size(); ++g) {
    auto cells = groups[order[g]];
    std::sort(cells.begin(), cells.end(), [](auto* a, auto* b) { return a->horizon < b->horizon; });
    if (cells.size() < 4)
      throw std::invalid_argument("fit_scaling: group " + order[g].first + " sigma=" + format_sigma(order[g].second) +
                                  " has " + std::to_string(cells.size()) + " horizons; need at least 4");

    std::vector<double> ln_t;
    for (auto* c : cells) ln_t.push_back(std::log(static_cast<double>(c->horizon)));

    auto slopes = [&](const std::vector<double>& means) {
      std::vector<double> ln_r(means.size());
      bool positive = true;
      for (std::size_t i = 0; i < means.size(); ++i) {
        positive = positive && means[i] > 0.0;
        ln_r[i] = positive ? std::log(means[i]) : 0.0;
      }
      const auto lin = least_squares(ln_t, means);
      std::pair<double, double> loglog{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
      if (positive) loglog = least_squares(ln_t, ln_r);
      return std::make_pair(loglog, lin);
    };

    std::vector<double> means;
    for (auto* c : cells) means.push_back(mean_of(c->final_regret));
    const auto [loglog, lin] = slopes(means);

    ScalingFit fit;
    fit.learner = order[g].first;
    fit.sigma = order[g].second;
    fit.points = cells.size();
    fit.loglog_slope = loglog.first;
    fit.loglog_intercept = loglog.second;
    fit.log_slope = lin.first;
    fit.log_intercept = lin.second;

    Rng rng(derive_seed(seed, {0xb007, g}));
    std::vector<double> boot_loglog, boot_lin;
    for (std::size_t b = 0; b < bootstrap; ++b) {
      std::vector<double> resampled;
      for (auto* c : cells) {
        double sum = 0.0;
        const std::size_t k = c->final_regret.size();
        for (std::size_t i = 0; i < k; ++i) sum += c->final_regret[rng.uniform_index(k)];
        resampled.push_back(sum / static_cast<double>(k));
      }
      const auto [bl, bs] = slopes(resampled);
      if (std::isfinite(bl.first)) boot_loglog.push_back(bl.first);
      boot_lin.push_back(bs.first);
    }
    std::sort(boot_loglog.begin(), boot_loglog.end());
    std::sort(boot_lin.begin(), boot_lin.end());
    fit.loglog_ci_low = nan_if_not_finite(quantile_sorted(boot_loglog, 0.025));
    fit.loglog_ci_high = nan_if_not_finite(quantile_sorted(boot_loglog, 0.975));
    fit.log_ci_low = nan_if_not_finite(quantile_sorted(boot_lin, 0.025));
    fit.log_ci_high = nan_if_not_finite(quantile_sorted(boot_lin, 0.975));
    fits.push_back(fit);
  }
  return fits;
}

// --- run -----------------------------------------------------------------------------

std::size_t default_thread_count() {
  std::size_t n = std::max<unsigned>(1, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SMOOTHPA_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && v > 0) n = std::min<std::size_t>(n, v);
  }
  return n;
}

SweepSummary run(const ExperimentConfig& config, const RunOptions& options) {
  const RegionFamily family = RegionFamily::from_json(config.family);

  struct Cell {
    std::size_t learner;
    std::size_t horizon;
    double sigma;
  };
  std::vector<Cell> cells;
  for (std::size_t li = 0; li < config.learners.size(); ++li)
    for (double s : config.sigmas)
      for (std::size_t t : config.horizons) cells.push_back({li, t, s});

  SweepSummary summary;
  summary.cells.resize(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    auto& cs = summary.cells[c];
    cs.learner = learner_label(config.learners[cells[c].learner]);
    cs.horizon = cells[c].horizon;
    cs.sigma = cells[c].sigma;
  }

  if (config.output) std::filesystem::create_directories(*config.output);

  const std::size_t reps = config.repetitions;
  const std::size_t tasks = cells.size() * reps;
  std::vector<std::optional<GameResult>> results(tasks);
  std::vector<std::size_t> done_per_cell(cells.size(), 0);
  std::mutex mutex;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> interrupted{false};
  std::exception_ptr failure;

  auto finish_cell = [&](std::size_t c) {
    // Called with the mutex held once every repetition of cell c is present.
    auto& cs = summary.cells[c];
    std::string csv = std::string(kRoundsCsvHeader) + "\n";
    std::vector<double> learner_losses, comparator_losses;
    for (std::size_t r = 0; r < reps; ++r) {
      auto& res = *results[c * reps + r];
      const auto& last = res.records.back();
      cs.final_regret.push_back(last.cum_regret);
      learner_losses.push_back(last.cum_learner_loss);
      comparator_losses.push_back(last.cum_comparator_loss);
      for (const auto& rec : res.records) {
        cs.min_q1 = std::min(cs.min_q1, rec.q1);
        cs.max_q1 = std::max(cs.max_q1, rec.q1);
      }
      cs.learner_name = res.learner_id;
      if (config.output) {
        std::ostringstream rows;
        write_rounds_csv(rows, run_id(cs.learner, cs.horizon, cs.sigma, r), res);
        csv += rows.str();
      }
      results[c * reps + r].reset();
    }
    cs.mean_regret = mean_of(cs.final_regret);
    cs.std_regret = stddev_of(cs.final_regret);
    cs.mean_learner_loss = mean_of(learner_losses);
    cs.mean_comparator_loss = mean_of(comparator_losses);
    cs.complete = true;
    if (config.output) write_file_atomically(*config.output / cell_file_name(cs), csv);
  };

  auto worker = [&]() {
    for (;;) {
      if (options.stop && options.stop->load()) {
        interrupted = true;
        return;
      }
      {
        std::lock_guard<std::mutex> lock(mutex);
        if (failure) return;
      }
      const std::size_t task = next.fetch_add(1);
      if (task >= tasks) return;
      const std::size_t c = task / reps, rep = task % reps;
      const Cell& cell = cells[c];
      try {
        const GameShape shape{cell.horizon, cell.sigma};
        auto learner = make_learner(config.learners[cell.learner], family, shape);
        auto adversary = make_adversary(config.adversary, family, shape);
        const std::uint64_t seed = derive_seed(
            config.seed, {cell.horizon, static_cast<std::uint64_t>(std::llround(cell.sigma * 1e9)), rep});
        GameResult res = play_game(*learner, adversary, cell.horizon, seed);
        if (const auto* ftpl = dynamic_cast<const FtplLearner*>(learner.get())) {
          const TruncatedClassView view{ftpl->config().alpha, {}};
          for (const auto& rec : res.records)
            if (rec.q1 < view.lower() || rec.q1 > view.upper())
              throw NumericalAssertionError("FTPL prediction " + std::to_string(rec.q1) + " outside the truncation range");
        }
        fill_comparator(res, family);
        std::lock_guard<std::mutex> lock(mutex);
        results[task] = std::move(res);
        if (++done_per_cell[c] == reps) finish_cell(c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, tasks));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  summary.interrupted = interrupted.load();
  if (!summary.interrupted && config.horizons.size() >= 4)
    summary.fits = fit_scaling(summary, config.bootstrap, config.seed);
  if (config.output) write_file_atomically(*config.output / "summary.json", summary.to_json().dump(2) + "\n");
  return summary;
}

}  // namespace smoothpa
