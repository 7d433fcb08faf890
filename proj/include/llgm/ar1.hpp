#pragma once

// Local AR(1) latent Gaussian model: y(t) = x(t) + eps, eps ~ N(0, 1/tau),
// x stationary AR(1) with unit innovation variance and coefficient phi.
// The hyperparameter is carried as theta = log((1 + phi) / (1 - phi)).

#include <cstdint>

#include <Eigen/Dense>

#include "llgm/gaussian.hpp"
#include "llgm/hyper_grid.hpp"

namespace llgm::ar1 {

struct Ar1Config {
  double phi = 0;
  double tau = 1;
  int length = 1;

  void validate() const;
};

inline double phi_from_theta(double theta) { return std::tanh(0.5 * theta); }
inline double theta_from_phi(double phi) { return 2.0 * std::atanh(phi); }
/// d theta / d phi, for reporting theta-space densities on the phi scale.
inline double theta_jacobian(double phi) { return 2.0 / ((1.0 - phi) * (1.0 + phi)); }

struct Sample {
  Eigen::VectorXd y;
  Eigen::VectorXd x;
};

/// Draws x from the stationary process and adds N(0, 1/tau) noise.
/// Deterministic for a given seed.
Sample simulate(const Ar1Config& cfg, std::uint64_t seed);

/// Dense tridiagonal AR(1) precision: 1 in the corners, 1 + phi^2 on the
/// interior diagonal, -phi off the diagonal. Requires length >= 2.
Eigen::MatrixXd precision(double phi, int length);

/// pi(x | y, phi) in canonical form: P = Q + tau I, b = tau y. A length-1
/// series uses Q = [1].
Gaussian latent_conditional(const Eigen::VectorXd& y, double phi, double tau);

/// log pi(y | phi) from the ratio pi(y, x | phi) / pi(x | y, phi) at x = 0.
double marginal_loglik(const Eigen::VectorXd& y, double phi, double tau);

/// Exact leave-one-out predictive moments of y_t given the other
/// observations at a fixed phi.
LooPredictive loo_predictive(const Eigen::VectorXd& y, double phi, double tau);

struct ThetaPrior {
  double mean = 0.0;
  double precision = 0.15;

  double logpdf(double theta) const { return normal_logpdf(theta, mean, 1.0 / precision); }
};

/// Grid posterior of theta given y. Throws BoundaryMassError if either grid
/// endpoint holds more than `boundary_tol` of the mass.
HyperPosterior hyper_posterior(const Eigen::VectorXd& y, double tau, const ThetaPrior& prior,
                               const GridSpec& grid, double boundary_tol = 1e-6);

/// Prior implied by a grid posterior: log post(theta) - log pi(y | phi(theta)),
/// renormalized on the grid (returned as log point masses, like
/// HyperPosterior::log_weights).
Eigen::VectorXd retrieve_prior(const HyperPosterior& post, const Eigen::VectorXd& y, double tau);

/// Posterior-mode phi for each grid posterior.
double mode_phi(const HyperPosterior& post);

}  // namespace llgm::ar1
