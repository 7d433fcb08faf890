#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "llgm/pipeline/config.hpp"
#include "llgm/pipeline/stages.hpp"

namespace llgm::pipeline {

struct StageTimings {
  double simulate = 0, fit = 0, smooth = 0, refit = 0, score = 0;
};

struct SeedResult {
  std::uint64_t seed = 0;
  Study study;
  FitResult fit;
  SmoothedTable smoothed;
  std::vector<ScoreRow> scores;
  StageTimings seconds;
};

/// simulate -> fit -> smooth -> (refit) -> score for one seed. When `dir`
/// is given every stage output is written there and refit is run.
SeedResult run_seed(const ExperimentConfig& config, std::uint64_t seed,
                    const std::optional<std::filesystem::path>& dir = std::nullopt);

/// All seeds into config.out/seed_<s>/, then summary.csv and manifest.json.
std::vector<SeedResult> run_experiment(const ExperimentConfig& config);

}  // namespace llgm::pipeline
