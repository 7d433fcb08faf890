#include "llgm/refit.hpp"

#include <cmath>
#include <numbers>

#include "llgm/ar1.hpp"
#include "llgm/errors.hpp"
#include "llgm/gauss_hermite.hpp"
#include "llgm/hyper_grid.hpp"

namespace llgm::refit {
namespace {

MixturePosterior assemble(const QuadratureDesign& design, const std::function<Gaussian(const Eigen::VectorXd&)>& fn) {
  MixturePosterior post;
  post.components.reserve(design.thetas.size());
  for (std::size_t l = 0; l < design.thetas.size(); ++l)
    post.components.push_back({design.weights[l], fn(design.thetas[l]), design.thetas[l]});
  return post;
}

const Region& region_of(const SpatialContext& ctx) {
  if (ctx.region == nullptr) throw std::invalid_argument("refit: spatial context without a region");
  return *ctx.region;
}

}  // namespace

QuadratureDesign gh_design(const Eigen::VectorXd& mean, const Eigen::VectorXd& sd, int order) {
  if (mean.size() != sd.size() || mean.size() < 1 || mean.size() > 3)
    throw std::invalid_argument("gh_design: need 1 to 3 components");
  if (order < 1 || order > 10) throw std::invalid_argument("gh_design: order must be in [1, 10]");
  const auto rule = gauss_hermite_rule<double>(order);
  const auto k = static_cast<int>(mean.size());
  int total = 1;
  for (int i = 0; i < k; ++i) total *= order;

  QuadratureDesign d;
  d.thetas.reserve(total);
  d.weights.reserve(total);
  const double norm = std::pow(std::numbers::pi, -0.5 * k);
  double sum = 0;
  for (int flat = 0; flat < total; ++flat) {
    Eigen::VectorXd theta(k);
    double w = norm;
    int rest = flat;
    for (int i = 0; i < k; ++i) {
      const int l = rest % order;
      rest /= order;
      theta(i) = mean(i) + std::numbers::sqrt2 * rule.nodes(l) * sd(i);
      w *= rule.weights(l);
    }
    d.thetas.push_back(std::move(theta));
    d.weights.push_back(w);
    sum += w;
  }
  for (double& w : d.weights) w /= sum;
  return d;
}

Gaussian refit_point_mass(const Ar1Context& ctx, double theta_star) {
  if (!std::isfinite(theta_star)) throw std::invalid_argument("refit_point_mass: non-finite theta");
  return to_moment(ar1::latent_conditional(ctx.y, ar1::phi_from_theta(theta_star), ctx.tau));
}

Gaussian refit_point_mass(const SpatialContext& ctx, const Eigen::Vector3d& theta_star) {
  if (!theta_star.allFinite()) throw std::invalid_argument("refit_point_mass: non-finite theta");
  return spatial::conditional(region_of(ctx), spatial::SpatialHyper::from_vector(theta_star), ctx.beta_prior_var);
}

MixturePosterior refit_gh_mixture(const Ar1Context& ctx, double mean, double sd, int order) {
  const auto design = gh_design(Eigen::VectorXd::Constant(1, mean), Eigen::VectorXd::Constant(1, sd), order);
  return assemble(design, [&](const Eigen::VectorXd& theta) { return refit_point_mass(ctx, theta(0)); });
}

MixturePosterior refit_gh_mixture(const SpatialContext& ctx, const Eigen::Vector3d& mean, const Eigen::Vector3d& sd,
                                  int order) {
  const auto design = gh_design(mean, sd, order);
  return assemble(design, [&](const Eigen::VectorXd& theta) {
    return refit_point_mass(ctx, Eigen::Vector3d(theta));
  });
}

Gaussian moment_match(const MixturePosterior& post) {
  if (post.components.empty()) throw std::invalid_argument("moment_match: empty mixture");
  const Eigen::Index n = post.dim();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  for (const auto& c : post.components) mean += c.weight * c.dist.mean;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
  for (const auto& c : post.components) {
    const Eigen::VectorXd d = c.dist.mean - mean;
    cov += c.weight * (c.dist.matrix + d * d.transpose());
  }
  return Gaussian::moment(std::move(mean), std::move(cov));
}

PredictionQuery ar1_query(int t, double tau) {
  return [t, tau](const MixtureComponent& c) {
    if (t < 0 || t >= c.dist.dim()) throw std::out_of_range("ar1_query: time index outside the series");
    return ComponentPrediction{c.dist.mean(t), c.dist.matrix(t, t), 1.0 / tau};
  };
}

PredictionQuery spatial_in_sample_query(const Region& region, int i) {
  if (i < 0 || i >= region.size()) throw std::out_of_range("spatial_in_sample_query: index outside region");
  const Eigen::Index n = region.size();
  const Eigen::Index p = region.covariate_count();
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n + p);
  a(i) = 1.0;
  a.tail(p) = region.Z.row(i).transpose();
  return [a](const MixtureComponent& c) {
    if (c.dist.dim() != a.size()) throw std::invalid_argument("spatial query: latent dimension mismatch");
    return ComponentPrediction{a.dot(c.dist.mean), a.dot(c.dist.matrix * a), std::exp(-c.theta(0))};
  };
}

PredictionQuery spatial_new_location_query(const Region& region, const Eigen::Vector2d& location,
                                           const Eigen::VectorXd& covariates) {
  if (covariates.size() != region.covariate_count())
    throw std::invalid_argument("spatial_new_location_query: covariate count mismatch");
  const Eigen::MatrixXd dist = pairwise_distances(region.locations, region.locations);
  Coordinates target(1, 2);
  target.row(0) = location.transpose();
  const Eigen::VectorXd dstar = pairwise_distances(region.locations, target).col(0);
  const Eigen::Index n = region.size();
  return [dist, dstar, covariates, n](const MixtureComponent& c) {
    if (c.dist.dim() != n + covariates.size())
      throw std::invalid_argument("spatial query: latent dimension mismatch");
    const spatial::SpatialHyper h = spatial::SpatialHyper::from_vector(Eigen::Vector3d(c.theta));
    const Eigen::MatrixXd corr = spatial::matern_correlation(dist, h.range());
    Eigen::VectorXd cstar(dstar.size());
    for (Eigen::Index i = 0; i < dstar.size(); ++i) cstar(i) = spatial::matern_cov(dstar(i), 1.0, h.range());
    // u* | u ~ N(c*' R^{-1} u, sigma^2 (1 - c*' R^{-1} c*))
    const auto llt = robust_llt(corr, "spatial_new_location_query");
    const Eigen::VectorXd krig = llt.solve(cstar);
    Eigen::VectorXd a(n + covariates.size());
    a.head(n) = krig;
    a.tail(covariates.size()) = covariates;
    const double resid = std::max(0.0, h.field_var() * (1.0 - cstar.dot(krig)));
    return ComponentPrediction{a.dot(c.dist.mean), a.dot(c.dist.matrix * a) + resid, h.noise_var()};
  };
}

MixturePredictive::MixturePredictive(std::vector<double> weights, std::vector<double> means, std::vector<double> vars)
    : weights_(std::move(weights)), means_(std::move(means)), vars_(std::move(vars)) {
  if (weights_.empty() || weights_.size() != means_.size() || weights_.size() != vars_.size())
    throw std::invalid_argument("MixturePredictive: inconsistent component arrays");
  for (std::size_t l = 0; l < weights_.size(); ++l) mean_ += weights_[l] * means_[l];
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const double d = means_[l] - mean_;
    variance_ += weights_[l] * (vars_[l] + d * d);
  }
}

double MixturePredictive::logpdf(double y) const {
  Eigen::VectorXd terms(static_cast<Eigen::Index>(weights_.size()));
  for (std::size_t l = 0; l < weights_.size(); ++l)
    terms(static_cast<Eigen::Index>(l)) = std::log(weights_[l]) + normal_logpdf(y, means_[l], vars_[l]);
  return log_sum_exp(terms);
}

MixturePredictive mixture_predictive(const MixturePosterior& post, const PredictionQuery& query) {
  if (post.components.empty()) throw std::invalid_argument("mixture_predictive: empty mixture");
  std::vector<double> w, m, v;
  for (const auto& c : post.components) {
    if (!c.dist.is_moment()) throw std::invalid_argument("mixture_predictive: components must be in moment form");
    const ComponentPrediction p = query(c);
    w.push_back(c.weight);
    m.push_back(p.mean);
    v.push_back(p.latent_var + p.noise_var);
  }
  return {std::move(w), std::move(m), std::move(v)};
}

}  // namespace llgm::refit
