#pragma once

// Local spatial latent Gaussian model for one region:
//   y = Z beta + u + eps,  u ~ GP(0, Matern(nu = 1)),  eps ~ N(0, 1/tau_eps),
//   beta ~ N(0, beta_prior_var I).
// Hyperparameters theta = (log tau_eps, log tau_u, log rho) with
// sigma_u^2 = 1/tau_u the field variance and rho the range.

#include <array>

#include <Eigen/Dense>

#include "llgm/gaussian.hpp"
#include "llgm/hyper_grid.hpp"
#include "llgm/region.hpp"

namespace llgm::spatial {

struct SpatialHyper {
  double log_noise_precision = 0;  // theta1 = log tau_eps
  double log_field_precision = 0;  // theta2 = log tau_u
  double log_range = 0;            // theta3 = log rho

  double noise_var() const { return std::exp(-log_noise_precision); }
  double field_var() const { return std::exp(-log_field_precision); }
  double range() const { return std::exp(log_range); }

  Eigen::Vector3d as_vector() const { return {log_noise_precision, log_field_precision, log_range}; }
  static SpatialHyper from_vector(const Eigen::Vector3d& v) { return {v(0), v(1), v(2)}; }
};

/// Matern covariance with nu = 1 and kappa = sqrt(8)/rho:
///   sigma^2 (kappa h) K_1(kappa h),  equal to sigma^2 at h = 0.
double matern_cov(double h, double sigma_sq, double rho);

/// Correlation matrix (sigma^2 = 1) for a distance matrix.
Eigen::MatrixXd matern_correlation(const Eigen::MatrixXd& distances, double rho);

/// Penalized-complexity prior on (range, standard deviation) in d = 2,
/// calibrated by P(rho < rho0) = alpha2 and P(sigma > sigma0) = alpha1.
struct PcPriorSpec {
  double rho0 = 1;
  double sigma0_sq = 1;
  double alpha1 = 0.01;
  double alpha2 = 0.01;

  void validate() const;
};

/// log pi(rho, sigma) as a density in (rho, sigma), sigma = sqrt(sigma_sq).
double pc_prior_logdensity(double rho, double sigma_sq, const PcPriorSpec& spec);

/// Everything about the local model that is not a hyperparameter.
struct SpatialPriors {
  PcPriorSpec pc;
  double beta_prior_var = 1000.0;
  double noise_gamma_shape = 1.0;
  double noise_gamma_rate = 0.00005;
};

/// Joint log prior density of theta (Jacobians to the log scale included).
double log_prior(const SpatialHyper& hyper, const SpatialPriors& priors);

/// rho0 = 20% of the largest pairwise distance, sigma0^2 = sample variance of y.
PcPriorSpec default_pc_prior(const Region& region, double alpha1 = 0.01, double alpha2 = 0.01);

/// Matern correlation between the region's own locations.
Eigen::MatrixXd region_correlation(const Region& region, double rho);

/// Exact pi(u, beta | y, theta) in moment form over the stacked (u, beta).
Gaussian conditional(const Region& region, const SpatialHyper& hyper, double beta_prior_var);
/// Same, reusing a correlation matrix already computed for hyper.range().
Gaussian conditional(const Region& region, const SpatialHyper& hyper, double beta_prior_var,
                     const Eigen::MatrixXd& corr);

/// log pi(y | theta) under y ~ N(0, Z Vb Z' + C(theta) + exp(-theta1) I).
double marginal_loglik(const Region& region, const SpatialHyper& hyper, double beta_prior_var);

/// Leave-one-out predictive moments of each y_i given theta.
LooPredictive loo_predictive(const Region& region, const SpatialHyper& hyper, double beta_prior_var);
LooPredictive loo_predictive(const Region& region, const SpatialHyper& hyper, double beta_prior_var,
                             const Eigen::MatrixXd& corr);

struct GridSpec3 {
  std::array<GridSpec, 3> axes;
};

/// Posterior over a tensor grid of theta. Flat index i0 + n0 * (i1 + n1 * i2).
struct HyperPosterior3 {
  std::array<Eigen::VectorXd, 3> axes;
  Eigen::VectorXd log_weights;
  std::array<HyperPosterior, 3> marginals;

  Eigen::Index size() const { return log_weights.size(); }
  SpatialHyper point(Eigen::Index flat) const;
  /// Marginal modes refined by a parabola through the log marginal at the
  /// arg-max node and its neighbours.
  Eigen::Vector3d refined_modes() const;
  Eigen::Vector3d sds() const;
};

/// Evaluates the posterior on the given grid. Throws BoundaryMassError when a
/// marginal puts more than `boundary_tol` on either end of its axis.
HyperPosterior3 hyper_posterior(const Region& region, const SpatialPriors& priors, const GridSpec3& grid,
                                double boundary_tol = 1e-6);

/// Starting bounds: theta1 and theta2 centred on a moment estimate of the
/// precisions +- 4, theta3 between log(0.05 D) and log(2 D) for the region
/// diameter D.
GridSpec3 default_grid(const Region& region, int points);

struct FitOptions {
  int coarse_points = 11;
  int points = 15;
  double boundary_tol = 1e-6;
  int max_expansions = 8;
};

/// Two-pass grid fit: a coarse grid over the default bounds, then a refined
/// grid over mean +- 5 sd of the coarse marginals. Axes whose boundary mass
/// exceeds the tolerance are extended at unchanged spacing and the pass
/// repeated, at most `max_expansions` times.
HyperPosterior3 fit_hyper_posterior(const Region& region, const SpatialPriors& priors,
                                    const FitOptions& options = {});

}  // namespace llgm::spatial
