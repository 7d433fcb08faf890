#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "llgm/hyper_grid.hpp"

namespace llgm::pipeline {

enum class Mode { ar1, spatial };

std::string_view to_string(Mode m);
Mode parse_mode(std::string_view text);

struct Ar1Settings {
  int regions = 100;
  int length = 50;
  double tau = 2.0;
  // phi_r = offset + amplitude * sin^2(pi * periods * r / R), r = 1..R
  double phi_offset = 0.3;
  double phi_amplitude = 0.67;
  double phi_periods = 2.0;
  double prior_precision = 0.15;
  GridSpec grid;
};

struct SpatialSettings {
  int points = 5000;
  int regions = 100;
  double spacing = 5.0;       // km between lattice sites
  double range_scale = 1.0;   // multiplies the true range surface (roughness)
  double field_sd = 0.3;      // typical sd of the latent field, sqrt scale
  double nugget_sd = 0.07;
  double alpha1 = 0.01;
  double alpha2 = 0.01;
  double beta_prior_var = 1000.0;
  int coarse_points = 11;
  int grid_points = 15;
  double smoothing_range = 0.0;  // 0: half the domain extent
  int kmeans_restarts = 1;
};

/// Refit variants: "point-mass" and/or "gh".
struct ExperimentConfig {
  Mode mode = Mode::ar1;
  std::vector<std::uint64_t> seeds{1};
  int workers = 0;
  std::string out = "llgm_out";
  std::vector<double> levels;  // empty: mode default
  int gh_order = 5;
  std::vector<std::string> variants;  // empty: mode default
  Ar1Settings ar1;
  SpatialSettings spatial;

  /// Throws ConfigError on any out-of-range field.
  void validate() const;
  std::vector<double> effective_levels() const;
  std::vector<std::string> effective_variants() const;
};

/// log tau_u sweep used when none is configured.
std::vector<double> default_levels(Mode mode);

/// Parses a TOML document. Unknown keys are rejected.
ExperimentConfig parse_config(std::string_view toml_text, std::string_view source = "config");
ExperimentConfig load_config(const std::filesystem::path& path);

/// "a,b,c" into numbers.
std::vector<double> parse_levels(std::string_view csv);

/// TOML rendering that parse_config reads back to an equal config.
std::string dump_config(const ExperimentConfig& config);

}  // namespace llgm::pipeline
