#pragma once

#include <Eigen/Dense>

namespace llgm {

/// Equispaced 1-D grid over a transformed hyperparameter.
struct GridSpec {
  double lo = -15.0;
  double hi = 15.0;
  int points = 751;

  Eigen::VectorXd nodes() const;
};

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v);

/// Discretized posterior over one scalar hyperparameter.
struct HyperPosterior {
  Eigen::VectorXd grid;         // strictly increasing
  Eigen::VectorXd log_weights;  // log of normalized point masses
  int mode_index = 0;
  double mode = 0;
  double mean = 0;
  double sd = 0;

  Eigen::VectorXd weights() const { return log_weights.array().exp(); }
};

/// Normalizes unnormalized log masses and fills in mode, mean and sd.
HyperPosterior summarize_grid(Eigen::VectorXd grid, const Eigen::VectorXd& log_unnormalized);

/// Throws BoundaryMassError if either endpoint carries more than `tol`.
void check_boundary_mass(const HyperPosterior& post, double tol, int component = 0);

/// A N(mean, sd^2) density discretized on `grid`.
HyperPosterior discretize_gaussian(const Eigen::VectorXd& grid, double mean, double sd);

/// Gaussian leave-one-out predictive moments y_t | y_{-t}.
struct LooPredictive {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};

/// For y ~ N(0, S) with K = S^{-1}:  mean_t = y_t - (K y)_t / K_tt,  var_t = 1 / K_tt.
LooPredictive loo_from_precision(const Eigen::MatrixXd& K, const Eigen::VectorXd& y);

}  // namespace llgm
