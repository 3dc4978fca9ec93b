// Command-line front end: experiment runs and the diagnostic reports.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "smoothpa/adversary.hpp"
#include "smoothpa/diagnostics.hpp"
#include "smoothpa/harness.hpp"
#include "smoothpa/learners.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitInterrupted = 130;

std::atomic<bool> g_stop{false};

extern "C" void on_sigint(int) { g_stop = true; }

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw smoothpa::ConfigError(path + ": cannot open");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw smoothpa::ConfigError(path + ": " + e.what());
  }
}

int cmd_run(const std::string& config_path, std::size_t threads) {
  const auto config = smoothpa::ExperimentConfig::from_json(read_json(config_path));
  std::signal(SIGINT, on_sigint);
  smoothpa::RunOptions options;
  options.threads = threads ? threads : smoothpa::default_thread_count();
  options.stop = &g_stop;
  const auto summary = smoothpa::run(config, options);
  std::cout << summary.to_json().dump(2) << "\n";
  return summary.interrupted ? kExitInterrupted : 0;
}

int cmd_chi2(double sigma, double n, std::size_t universe, double cutoff) {
  const smoothpa::ContextUniverse u(universe);
  std::vector<std::size_t> support(smoothpa::min_smooth_support(sigma, universe));
  for (std::size_t i = 0; i < support.size(); ++i) support[i] = i;
  const auto d = smoothpa::SmoothDistribution::uniform_on(support, u, sigma);

  nlohmann::json out = {{"sigma", sigma}, {"n", n}, {"universe", universe}};
  try {
    const auto r = smoothpa::chi_square_bruteforce(d, n, cutoff);
    out["closed"] = r.closed_form;
    out["brute"] = *r.brute_force;
    out["bound"] = r.bound;
    out["discarded_mass"] = r.discarded_mass;
  } catch (const std::invalid_argument&) {
    const auto r = smoothpa::chi_square_closed_form(d, n);
    out["closed"] = r.closed_form;
    out["brute"] = nullptr;
    out["bound"] = r.bound;
  }
  std::cout << nlohmann::json{{"chi2", out}}.dump(2) << "\n";
  return 0;
}

int cmd_nml(const std::string& class_path, const std::string& contexts_path) {
  const auto cls = read_json(class_path);
  std::vector<smoothpa::PointwiseHypothesis> hyps;
  if (!cls.contains("hypotheses")) throw smoothpa::ConfigError("hypotheses: required in class file");
  if (cls.contains("family")) {
    const auto family = smoothpa::RegionFamily::from_json(cls.at("family"));
    for (const auto& h : cls.at("hypotheses"))
      hyps.push_back(smoothpa::tabulate(
          family, {h.at("region").get<std::size_t>(), h.at("theta0").get<double>(), h.at("theta1").get<double>()}));
  } else {
    hyps = cls.at("hypotheses").get<std::vector<smoothpa::PointwiseHypothesis>>();
  }
  const auto cj = read_json(contexts_path);
  const auto contexts = (cj.is_object() ? cj.at("contexts") : cj).get<std::vector<std::size_t>>();
  const double value = smoothpa::nml_value(hyps, contexts);
  std::cout << nlohmann::json{{"nml", {{"value", value}, {"T", contexts.size()}, {"hypotheses", hyps.size()}}}}.dump(2)
            << "\n";
  return 0;
}

int cmd_cover(const std::string& family_path, double eps) {
  const auto family = smoothpa::RegionFamily::from_json(read_json(family_path));
  const auto cover = smoothpa::epsilon_cover(family, eps);
  nlohmann::json out = {{"eps", eps},
                        {"size", cover.size()},
                        {"indices", cover},
                        {"radius", smoothpa::cover_radius(family, cover)}};
  std::cout << nlohmann::json{{"cover", out}}.dump(2) << "\n";
  return 0;
}

int cmd_fit(const std::string& summary_path, std::size_t bootstrap) {
  const auto summary = smoothpa::SweepSummary::from_json(read_json(summary_path));
  smoothpa::SweepSummary fitted;
  fitted.fits = smoothpa::fit_scaling(summary, bootstrap);
  std::cout << nlohmann::json{{"fits", fitted.to_json().at("fits")}}.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential probability assignment against smoothed adversaries"};
  app.require_subcommand(1);

  std::string config_path;
  std::size_t threads = 0;
  auto* run = app.add_subcommand("run", "Run an experiment sweep");
  run->add_option("--config", config_path, "Experiment JSON")->required();
  run->add_option("--threads", threads, "Worker threads (default: SMOOTHPA_THREADS or all cores)");

  double sigma = 0.5, n = 4.0, cutoff = 1e-12;
  std::size_t universe = 2;
  auto* chi2 = app.add_subcommand("chi2", "Chi-square stability of the hallucination counts");
  chi2->add_option("--sigma", sigma)->required();
  chi2->add_option("--n", n, "Poisson rate")->required();
  chi2->add_option("--universe", universe)->required();
  chi2->add_option("--cutoff", cutoff, "Per-cell Poisson tail cutoff for the brute-force sum");

  std::string class_path, contexts_path;
  auto* nml = app.add_subcommand("nml", "NML log-normalizer on fixed contexts");
  nml->add_option("--class", class_path)->required();
  nml->add_option("--contexts", contexts_path)->required();

  std::string family_path;
  double eps = 0.1;
  auto* cover = app.add_subcommand("cover", "Epsilon-cover of a region family");
  cover->add_option("--family", family_path)->required();
  cover->add_option("--eps", eps)->required();

  std::string summary_path;
  std::size_t bootstrap = 200;
  auto* fit = app.add_subcommand("fit", "Scaling fits of a sweep summary");
  fit->add_option("--summary", summary_path)->required();
  fit->add_option("--bootstrap", bootstrap);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config_path, threads);
    if (*chi2) return cmd_chi2(sigma, n, universe, cutoff);
    if (*nml) return cmd_nml(class_path, contexts_path);
    if (*cover) return cmd_cover(family_path, eps);
    if (*fit) return cmd_fit(summary_path, bootstrap);
  } catch (const smoothpa::NumericalAssertionError& e) {
    std::cerr << "numerical assertion failed: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const smoothpa::InfiniteLossError& e) {
    std::cerr << "numerical assertion failed: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const smoothpa::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
