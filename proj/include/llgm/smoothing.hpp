#pragma once

#include <vector>

#include <Eigen/Dense>

#include "llgm/region.hpp"

namespace llgm::smoothing {

/// Per-region posterior modes treated as noisy observations of a smooth
/// field, each with its own fixed precision (1 / posterior sd^2).
struct SmoothingInput {
  Eigen::VectorXd modes;
  Eigen::VectorXd obs_prec;
  Coordinates coords;  // region centroids; only used by spatial_smooth

  void validate(bool need_coords) const;
};

struct SmoothedHyperField {
  Eigen::VectorXd post_mean;
  Eigen::VectorXd post_sd;
  double tau_u = 0;
};

/// Intrinsic second-order random walk over the region index:
///   (tau_u D'D + diag(obs_prec)) mu = diag(obs_prec) modes.
/// Solved in a rotated basis split into the RW(2) null space (straight
/// lines) and its complement, so the tau_u -> infinity limit stays exact.
/// Needs at least two positive precisions.
SmoothedHyperField rw2_smooth(const SmoothingInput& input, double tau_u);

/// Second-difference operator, (R - 2) x R.
Eigen::MatrixXd second_difference(int r);

/// Gaussian smoothing over region centroids with a Matern(nu = 1) prior of
/// variance 1/tau_u_tilde and fixed range, heteroscedastic noise 1/obs_prec.
SmoothedHyperField spatial_smooth(const SmoothingInput& input, double tau_u_tilde, double range);

/// Per-component centering and scaling across regions.
struct NormalizedModes {
  std::vector<Eigen::VectorXd> values;
  std::vector<double> shift;
  std::vector<double> scale;
  std::vector<bool> constant;  // zero spread: centred only, scale 1
};

NormalizedModes normalize_modes(const std::vector<Eigen::VectorXd>& modes_by_component);

/// Inverse of the affine map for component k.
Eigen::VectorXd denormalize(const NormalizedModes& norm, int k, const Eigen::VectorXd& values);

}  // namespace llgm::smoothing
