#pragma once

// Step-3 refits: rebuild latent posteriors from smoothed hyperparameter
// summaries. Nothing here touches a hyperparameter prior or likelihood;
// theta values come only from the smoothed (mean, sd) per component.

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "llgm/gaussian.hpp"
#include "llgm/region.hpp"
#include "llgm/spatial.hpp"

namespace llgm::refit {

/// Data an AR(1) refit needs.
struct Ar1Context {
  Eigen::VectorXd y;
  double tau = 1;
};

/// Data a spatial refit needs.
struct SpatialContext {
  const Region* region = nullptr;
  double beta_prior_var = 1000.0;
};

struct MixtureComponent {
  double weight = 0;
  Gaussian dist;          // moment form
  Eigen::VectorXd theta;  // hyperparameter configuration used
};

struct MixturePosterior {
  std::vector<MixtureComponent> components;

  Eigen::Index dim() const { return components.empty() ? 0 : components.front().dist.dim(); }
};

/// Tensor Gauss-Hermite design for independent N(mean_k, sd_k^2):
/// theta_k = mean_k + sqrt(2) xi_k sd_k, weight prod_k Delta_k / pi^{K/2},
/// renormalized to sum to one. Order of points: first component fastest.
struct QuadratureDesign {
  std::vector<Eigen::VectorXd> thetas;
  std::vector<double> weights;
};

QuadratureDesign gh_design(const Eigen::VectorXd& mean, const Eigen::VectorXd& sd, int order);

Gaussian refit_point_mass(const Ar1Context& ctx, double theta_star);
Gaussian refit_point_mass(const SpatialContext& ctx, const Eigen::Vector3d& theta_star);

MixturePosterior refit_gh_mixture(const Ar1Context& ctx, double mean, double sd, int order);
MixturePosterior refit_gh_mixture(const SpatialContext& ctx, const Eigen::Vector3d& mean,
                                  const Eigen::Vector3d& sd, int order);

/// Single Gaussian with the mixture's first two moments.
Gaussian moment_match(const MixturePosterior& post);

/// Predictive moments of one component for a given query: latent mean and
/// variance of the predicted signal plus the observation-noise variance.
struct ComponentPrediction {
  double mean = 0;
  double latent_var = 0;
  double noise_var = 0;
};

using PredictionQuery = std::function<ComponentPrediction(const MixtureComponent&)>;

/// New observation at time index t of an AR(1) series.
PredictionQuery ar1_query(int t, double tau);
/// Replicate observation at in-sample location i of a spatial region.
PredictionQuery spatial_in_sample_query(const Region& region, int i);
/// Observation at a new location with covariates (intercept included).
PredictionQuery spatial_new_location_query(const Region& region, const Eigen::Vector2d& location,
                                           const Eigen::VectorXd& covariates);

/// p(y*) = sum_l w_l N(y*; m_l, v_l + noise_l).
class MixturePredictive {
 public:
  MixturePredictive(std::vector<double> weights, std::vector<double> means, std::vector<double> vars);

  double logpdf(double y) const;
  double pdf(double y) const { return std::exp(logpdf(y)); }
  double mean() const { return mean_; }
  double variance() const { return variance_; }

  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& variances() const { return vars_; }

 private:
  std::vector<double> weights_, means_, vars_;
  double mean_ = 0, variance_ = 0;
};

MixturePredictive mixture_predictive(const MixturePosterior& post, const PredictionQuery& query);

}  // namespace llgm::refit
