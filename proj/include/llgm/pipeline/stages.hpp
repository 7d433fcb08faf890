#pragma once

// The four pipeline stages as in-memory transforms, plus the file formats
// each stage reads and writes.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "llgm/gaussian.hpp"
#include "llgm/hyper_grid.hpp"
#include "llgm/partition.hpp"
#include "llgm/pipeline/config.hpp"
#include "llgm/pipeline/simulate.hpp"
#include "llgm/scoring.hpp"

namespace llgm::pipeline {

/// Everything a stage needs to rebuild any region's local model.
struct Study {
  Mode mode = Mode::ar1;
  // ar1
  std::vector<Eigen::VectorXd> series;
  double tau = 1;
  std::vector<double> phi_true;  // empty when unknown
  double prior_precision = 0.15;
  GridSpec grid;
  // spatial
  Partition partition;
  std::vector<Region> regions;
  SpatialSettings spatial;
  double smoothing_range = 1;

  int region_count() const;
  int components() const { return mode == Mode::ar1 ? 1 : 3; }
  const Eigen::VectorXd& y(int r) const;
};

Study make_ar1_study(const Ar1Data& data, const Ar1Settings& settings);
/// Partitions the locations with k-means seeded from `seed`; values are
/// moved to the modelling scale first.
Study make_spatial_study(const ObservationTable& raw, const SpatialSettings& settings, std::uint64_t seed);
/// Rebuilds a spatial study from a stored partition.
Study make_spatial_study(const ObservationTable& raw, const SpatialSettings& settings, Partition partition);

/// Step-1 output: R x K summaries plus the full grid posterior.
struct FitResult {
  Eigen::MatrixXd mode, mean, sd;
  std::vector<Eigen::MatrixXd> grid_theta;  // per region, G_r x K
  std::vector<Eigen::VectorXd> grid_log_weight;
};

FitResult run_fit(const Study& study, int workers);

/// Step-2 output, one R x K block per smoothing level.
struct SmoothedTable {
  std::vector<double> levels;
  std::vector<Eigen::MatrixXd> mean, sd;
};

SmoothedTable run_smooth(const Study& study, const FitResult& fit, const std::vector<double>& levels, int workers);

/// Step-3 summaries: per (variant, level, region, index) posterior mean and
/// sd of the latent signal at each observation.
struct RefitRow {
  std::string variant;
  double level = 0;
  int region = 0;
  int index = 0;
  double mean = 0;
  double sd = 0;
};

std::vector<RefitRow> run_refit(const Study& study, const SmoothedTable& smoothed,
                                const std::vector<std::string>& variants, int gh_order, int workers);

struct ScoreRow {
  scoring::ScoreReport report;
  std::optional<double> phi_mae;  // AR(1) with known truth only
};

/// Rows: "no-smooth" with variants "grid" and "point-mass", then each level
/// with each requested variant.
std::vector<ScoreRow> run_score(const Study& study, const FitResult& fit, const SmoothedTable& smoothed,
                                const std::vector<std::string>& variants, int gh_order, int workers);

// File formats.
void write_fit(const std::filesystem::path& dir, const Study& study, const FitResult& fit);
FitResult read_fit(const std::filesystem::path& dir, const Study& study);
void write_partition(const std::filesystem::path& dir, const Partition& partition);
Partition read_partition(const std::filesystem::path& dir, const Coordinates& locations);
void write_smoothed(const std::filesystem::path& dir, const SmoothedTable& table);
SmoothedTable read_smoothed(const std::filesystem::path& dir, int regions, int components);
void write_refit(const std::filesystem::path& dir, const std::vector<RefitRow>& rows,
                 const std::vector<std::string>& variants, int gh_order, const std::vector<double>& levels);
void write_scores(const std::filesystem::path& dir, const std::vector<ScoreRow>& rows);
std::vector<ScoreRow> read_scores(const std::filesystem::path& dir);

void write_ar1_truth(const std::filesystem::path& dir, const Ar1Data& data);
/// Reads phi_true and tau back; phi_true is empty when truth.csv is absent.
void read_ar1_truth(const std::filesystem::path& dir, std::vector<double>& phi_true, double& tau);
void write_spatial_truth(const std::filesystem::path& dir, const SpatialData& data);

}  // namespace llgm::pipeline
