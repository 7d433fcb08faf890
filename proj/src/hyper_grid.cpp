#include "llgm/hyper_grid.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "llgm/errors.hpp"
#include "llgm/gaussian.hpp"

namespace llgm {

Eigen::VectorXd GridSpec::nodes() const {
  if (points < 2 || !(hi > lo)) throw ConfigError("GridSpec: need at least two points and hi > lo");
  return Eigen::VectorXd::LinSpaced(points, lo, hi);
}

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

HyperPosterior summarize_grid(Eigen::VectorXd grid, const Eigen::VectorXd& log_unnormalized) {
  if (grid.size() != log_unnormalized.size() || grid.size() < 2)
    throw std::invalid_argument("summarize_grid: size mismatch");
  if (!log_unnormalized.allFinite()) throw NumericalError("summarize_grid: non-finite log weights");
  HyperPosterior post;
  post.log_weights = log_unnormalized.array() - log_sum_exp(log_unnormalized);
  post.grid = std::move(grid);
  post.log_weights.maxCoeff(&post.mode_index);
  post.mode = post.grid(post.mode_index);
  const Eigen::VectorXd w = post.weights();
  post.mean = w.dot(post.grid);
  const double var = w.dot((post.grid.array() - post.mean).square().matrix());
  // A posterior collapsed onto one node still gets a finite sd.
  const double floor = 1e-3 * (post.grid(1) - post.grid(0));
  post.sd = std::max(std::sqrt(var), floor);
  return post;
}

void check_boundary_mass(const HyperPosterior& post, double tol, int component) {
  const double lo = std::exp(post.log_weights(0));
  const double hi = std::exp(post.log_weights(post.log_weights.size() - 1));
  if (lo > tol)
    throw BoundaryMassError("posterior mass " + std::to_string(lo) + " at lower grid boundary of component " +
                                std::to_string(component + 1),
                            component, false);
  if (hi > tol)
    throw BoundaryMassError("posterior mass " + std::to_string(hi) + " at upper grid boundary of component " +
                                std::to_string(component + 1),
                            component, true);
}

HyperPosterior discretize_gaussian(const Eigen::VectorXd& grid, double mean, double sd) {
  Eigen::VectorXd lw(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) lw(i) = normal_logpdf(grid(i), mean, sd * sd);
  return summarize_grid(grid, lw);
}

LooPredictive loo_from_precision(const Eigen::MatrixXd& K, const Eigen::VectorXd& y) {
  const Eigen::VectorXd ky = K * y;
  LooPredictive out;
  out.var = K.diagonal().cwiseInverse();
  out.mean = y - ky.cwiseProduct(out.var);
  return out;
}

}  // namespace llgm
