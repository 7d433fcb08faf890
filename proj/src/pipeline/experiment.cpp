#include "llgm/pipeline/experiment.hpp"

#include <chrono>
#include <fstream>
#include <limits>

#include <Eigen/Core>
#include <json.hpp>

#include "llgm/errors.hpp"
#include "llgm/parallel.hpp"
#include "llgm/pipeline/csv.hpp"
#include "llgm/version.hpp"

namespace llgm::pipeline {
namespace {

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

template <typename Fn>
auto with_stage(const char* stage, std::uint64_t seed, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(stage) + " (seed " + std::to_string(seed) + "): " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(stage) + " (seed " + std::to_string(seed) + "): " + e.what());
  }
}

}  // namespace

SeedResult run_seed(const ExperimentConfig& config, std::uint64_t seed,
                    const std::optional<std::filesystem::path>& dir) {
  config.validate();
  const int workers = resolve_workers(config.workers);
  const auto levels = config.effective_levels();
  const auto variants = config.effective_variants();
  SeedResult res;
  res.seed = seed;
  Stopwatch sw;

  res.study = with_stage("simulate", seed, [&] {
    if (config.mode == Mode::ar1) {
      const Ar1Data data = simulate_ar1(config.ar1, seed);
      if (dir) {
        write_series(*dir / "data.csv", data.series);
        write_ar1_truth(*dir, data);
      }
      return make_ar1_study(data, config.ar1);
    }
    const SpatialData data = simulate_spatial(config.spatial, seed);
    if (dir) {
      write_observations(*dir / "data.csv", data.obs);
      write_spatial_truth(*dir, data);
    }
    return make_spatial_study(data.obs, config.spatial, seed);
  });
  res.seconds.simulate = sw.lap();

  res.fit = with_stage("fit", seed, [&] { return run_fit(res.study, workers); });
  if (dir) {
    write_fit(*dir, res.study, res.fit);
    if (config.mode == Mode::spatial) write_partition(*dir, res.study.partition);
  }
  res.seconds.fit = sw.lap();

  res.smoothed = with_stage("smooth", seed, [&] { return run_smooth(res.study, res.fit, levels, workers); });
  if (dir) write_smoothed(*dir, res.smoothed);
  res.seconds.smooth = sw.lap();

  if (dir) {
    const auto rows = with_stage("refit", seed, [&] {
      return run_refit(res.study, res.smoothed, variants, config.gh_order, workers);
    });
    write_refit(*dir, rows, variants, config.gh_order, levels);
  }
  res.seconds.refit = sw.lap();

  res.scores = with_stage("score", seed, [&] {
    return run_score(res.study, res.fit, res.smoothed, variants, config.gh_order, workers);
  });
  if (dir) write_scores(*dir, res.scores);
  res.seconds.score = sw.lap();
  return res;
}

std::vector<SeedResult> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::filesystem::path out = config.out;
  std::filesystem::create_directories(out);
  std::vector<SeedResult> results;
  for (const auto seed : config.seeds) {
    const auto dir = out / ("seed_" + std::to_string(seed));
    std::filesystem::create_directories(dir);
    results.push_back(run_seed(config, seed, dir));
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  CsvTable summary{{"seed", "level", "variant", "emlcpo", "emlkl", "phi_mae"}, {}};
  for (const auto& r : results)
    for (const auto& row : r.scores)
      summary.rows.push_back({std::to_string(r.seed), row.report.label, row.report.variant,
                              format_double(row.report.emlcpo_value),
                              format_double(row.report.emlkl_value.value_or(nan)),
                              format_double(row.phi_mae.value_or(nan))});
  write_csv(out / "summary.csv", summary);

  nlohmann::ordered_json m;
  m["tool"] = "llgm";
  m["version"] = kVersion;
  m["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                       std::to_string(EIGEN_MINOR_VERSION);
  m["compiler"] = __VERSION__;
  m["mode"] = to_string(config.mode);
  m["seeds"] = config.seeds;
  m["workers"] = resolve_workers(config.workers);
  m["levels"] = config.effective_levels();
  m["variants"] = config.effective_variants();
  m["gh_order"] = config.gh_order;
  m["config"] = dump_config(config);
  nlohmann::ordered_json timings = nlohmann::ordered_json::array();
  for (const auto& r : results)
    timings.push_back({{"seed", r.seed},
                       {"simulate_s", r.seconds.simulate},
                       {"fit_s", r.seconds.fit},
                       {"smooth_s", r.seconds.smooth},
                       {"refit_s", r.seconds.refit},
                       {"score_s", r.seconds.score}});
  m["timings"] = timings;
  m["outputs"] = {"summary.csv", "seed_<s>/data.csv", "seed_<s>/truth.csv", "seed_<s>/fit_summary.csv",
                  "seed_<s>/fit_grid.csv", "seed_<s>/smoothed.csv", "seed_<s>/refit.csv", "seed_<s>/scores.csv"};
  std::ofstream f(out / "manifest.json");
  if (!f) throw std::runtime_error("cannot write " + (out / "manifest.json").string());
  f << m.dump(2) << '\n';
  return results;
}

}  // namespace llgm::pipeline
