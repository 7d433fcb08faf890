#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "llgm/pipeline/config.hpp"
#include "llgm/region.hpp"

namespace llgm::pipeline {

/// Deterministic 64-bit mixing of a seed and a stream index.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// phi_r for 0-based region r.
double phi_schedule(const Ar1Settings& s, int r);

struct Ar1Data {
  std::vector<Eigen::VectorXd> series;
  std::vector<double> phi_true;
  double tau = 1;
};

Ar1Data simulate_ar1(const Ar1Settings& s, std::uint64_t seed);

/// Synthetic non-stationary field. `obs.values` are on the observed (wind
/// speed) scale; the model works on their square root.
struct SpatialData {
  ObservationTable obs;
  Eigen::VectorXd true_range;     // km, per location
  Eigen::VectorXd true_field_sd;  // sqrt scale, per location
  Eigen::VectorXd field;          // latent field, sqrt scale
};

SpatialData simulate_spatial(const SpatialSettings& s, std::uint64_t seed);

/// Square-root transform applied before spatial fitting.
ObservationTable modelling_scale(const ObservationTable& obs);

}  // namespace llgm::pipeline
