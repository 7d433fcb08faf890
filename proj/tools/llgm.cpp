// llgm: command-line driver for the local latent Gaussian model pipeline.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "llgm/errors.hpp"
#include "llgm/parallel.hpp"
#include "llgm/pipeline/config.hpp"
#include "llgm/pipeline/csv.hpp"
#include "llgm/pipeline/experiment.hpp"
#include "llgm/pipeline/simulate.hpp"
#include "llgm/pipeline/stages.hpp"

namespace fs = std::filesystem;
using namespace llgm;
using namespace llgm::pipeline;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
  std::optional<std::string> levels;
  std::optional<int> gh_order;
  std::optional<std::string> mode;
  std::optional<std::string> data;
};

ExperimentConfig resolve(const Options& o) {
  ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (o.mode) c.mode = parse_mode(*o.mode);
  if (o.seed) c.seeds = {*o.seed};
  if (o.workers) c.workers = *o.workers;
  if (o.out) c.out = *o.out;
  if (o.levels) c.levels = parse_levels(*o.levels);
  if (o.gh_order) c.gh_order = *o.gh_order;
  c.validate();
  return c;
}

fs::path data_path(const Options& o, const ExperimentConfig& c) {
  return o.data ? fs::path(*o.data) : fs::path(c.out) / "data.csv";
}

/// Rebuilds the study from files in the output directory.
Study load_study(const Options& o, const ExperimentConfig& c, bool fresh_partition) {
  const fs::path dir = c.out;
  if (c.mode == Mode::ar1) {
    Ar1Data d;
    d.series = read_series(data_path(o, c));
    d.tau = c.ar1.tau;
    read_ar1_truth(dir, d.phi_true, d.tau);
    if (!d.phi_true.empty() && d.phi_true.size() != d.series.size())
      throw ConfigError("truth.csv: region count does not match the data");
    return make_ar1_study(d, c.ar1);
  }
  const ObservationTable obs = read_observations(data_path(o, c));
  if (fresh_partition) return make_spatial_study(obs, c.spatial, c.seeds.front());
  return make_spatial_study(obs, c.spatial, read_partition(dir, obs.locations));
}

int cmd_simulate(const Options& o) {
  const ExperimentConfig c = resolve(o);
  const fs::path dir = c.out;
  fs::create_directories(dir);
  const std::uint64_t seed = c.seeds.front();
  if (c.mode == Mode::ar1) {
    const Ar1Data d = simulate_ar1(c.ar1, seed);
    write_series(dir / "data.csv", d.series);
    write_ar1_truth(dir, d);
  } else {
    const SpatialData d = simulate_spatial(c.spatial, seed);
    write_observations(dir / "data.csv", d.obs);
    write_spatial_truth(dir, d);
  }
  std::cout << "wrote " << (dir / "data.csv").string() << "\n";
  return 0;
}

int cmd_fit(const Options& o) {
  const ExperimentConfig c = resolve(o);
  const Study s = load_study(o, c, true);
  const FitResult fit = run_fit(s, resolve_workers(c.workers));
  write_fit(c.out, s, fit);
  if (c.mode == Mode::spatial) write_partition(c.out, s.partition);
  std::cout << "fitted " << s.region_count() << " regions\n";
  return 0;
}

int cmd_smooth(const Options& o) {
  const ExperimentConfig c = resolve(o);
  const Study s = load_study(o, c, false);
  const FitResult fit = read_fit(c.out, s);
  write_smoothed(c.out, run_smooth(s, fit, c.effective_levels(), resolve_workers(c.workers)));
  std::cout << "smoothed " << c.effective_levels().size() << " levels\n";
  return 0;
}

int cmd_refit(const Options& o) {
  const ExperimentConfig c = resolve(o);
  const Study s = load_study(o, c, false);
  const SmoothedTable sm = read_smoothed(c.out, s.region_count(), s.components());
  const auto variants = c.effective_variants();
  write_refit(c.out, run_refit(s, sm, variants, c.gh_order, resolve_workers(c.workers)), variants, c.gh_order,
              sm.levels);
  std::cout << "refit " << sm.levels.size() << " levels\n";
  return 0;
}

int cmd_score(const Options& o) {
  const ExperimentConfig c = resolve(o);
  const Study s = load_study(o, c, false);
  const FitResult fit = read_fit(c.out, s);
  const SmoothedTable sm = read_smoothed(c.out, s.region_count(), s.components());
  const auto rows = run_score(s, fit, sm, c.effective_variants(), c.gh_order, resolve_workers(c.workers));
  write_scores(c.out, rows);
  for (const auto& r : rows)
    std::cout << r.report.label << " " << r.report.variant << " emlcpo=" << format_double(r.report.emlcpo_value)
              << "\n";
  return 0;
}

int cmd_experiment(const Options& o) {
  const ExperimentConfig c = resolve(o);
  run_experiment(c);
  std::cout << "wrote " << (fs::path(c.out) / "summary.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local latent Gaussian models: fit, smooth, refit and score"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "TOML configuration file");
    sub->add_option("--seed", o.seed, "random seed (replaces the configured seed list)");
    sub->add_option("--workers", o.workers, "worker threads (0: LLGM_THREADS or all cores)");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--levels", o.levels, "comma-separated log smoothing precisions");
    sub->add_option("--gh-order", o.gh_order, "Gauss-Hermite points per hyperparameter");
    sub->add_option("--mode", o.mode, "ar1 or spatial")->check(CLI::IsMember({"ar1", "spatial"}));
  };
  struct Cmd {
    const char* name;
    const char* help;
    int (*run)(const Options&);
    bool reads_data;
  };
  const Cmd cmds[] = {{"simulate", "write synthetic data and truth", cmd_simulate, false},
                      {"fit", "per-region grid posteriors", cmd_fit, true},
                      {"smooth", "smooth posterior modes across regions", cmd_smooth, true},
                      {"refit", "rebuild latent posteriors from smoothed hyperparameters", cmd_refit, true},
                      {"score", "KL and CPO scores per smoothing level", cmd_score, true},
                      {"experiment", "full pipeline over all seeds", cmd_experiment, false}};
  int (*selected)(const Options&) = nullptr;
  for (const auto& c : cmds) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_common(sub);
    if (c.reads_data) sub->add_option("--data", o.data, "input CSV (default: OUT/data.csv)");
    sub->callback([&selected, run = c.run] { selected = run; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    return selected(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
