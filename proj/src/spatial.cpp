#include "llgm/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "llgm/errors.hpp"

namespace llgm::spatial {
namespace {

constexpr double kSqrt8 = 2.8284271247461903;

void check_region(const Region& region) {
  if (region.size() == 0) throw ConfigError("spatial: empty region");
  if (region.Z.rows() != region.size() || region.locations.rows() != region.size())
    throw ConfigError("spatial: region arrays have inconsistent sizes");
}

// S = sigma^2 R + vb Z Z' + noise I
Eigen::MatrixXd marginal_covariance(const Eigen::MatrixXd& corr, const Eigen::MatrixXd& zzt,
                                    const SpatialHyper& hyper, double beta_prior_var) {
  Eigen::MatrixXd s = hyper.field_var() * corr + beta_prior_var * zzt;
  s.diagonal().array() += hyper.noise_var();
  return s;
}

double gaussian_loglik(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& y) {
  const double quad = llt.matrixL().solve(y).squaredNorm();
  return -0.5 * (static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi) + log_det(llt) + quad);
}

double max_distance(const Coordinates& locations) {
  double d = 0;
  for (Eigen::Index i = 0; i < locations.rows(); ++i)
    for (Eigen::Index j = i + 1; j < locations.rows(); ++j)
      d = std::max(d, (locations.row(i) - locations.row(j)).norm());
  return d;
}

}  // namespace

double matern_cov(double h, double sigma_sq, double rho) {
  if (!(sigma_sq > 0) || !(rho > 0)) throw std::invalid_argument("matern_cov: sigma_sq and rho must be positive");
  if (h < 0) throw std::invalid_argument("matern_cov: negative distance");
  const double x = kSqrt8 / rho * h;
  if (x < 1e-12) return sigma_sq;
  if (x > 700) return 0.0;
  return sigma_sq * x * std::cyl_bessel_k(1.0, x);
}

Eigen::MatrixXd matern_correlation(const Eigen::MatrixXd& distances, double rho) {
  Eigen::MatrixXd c(distances.rows(), distances.cols());
  for (Eigen::Index j = 0; j < distances.cols(); ++j)
    for (Eigen::Index i = 0; i < distances.rows(); ++i) c(i, j) = matern_cov(distances(i, j), 1.0, rho);
  return c;
}

void PcPriorSpec::validate() const {
  if (!(rho0 > 0) || !(sigma0_sq > 0)) throw ConfigError("PC prior: rho0 and sigma0^2 must be positive");
  if (!(alpha1 > 0 && alpha1 < 1) || !(alpha2 > 0 && alpha2 < 1))
    throw ConfigError("PC prior: tail probabilities must lie in (0, 1)");
}

double pc_prior_logdensity(double rho, double sigma_sq, const PcPriorSpec& spec) {
  if (!(rho > 0) || !(sigma_sq > 0)) throw std::invalid_argument("pc_prior_logdensity: nonpositive argument");
  spec.validate();
  constexpr double d = 2.0;
  const double sigma = std::sqrt(sigma_sq);
  const double lambda1 = -std::log(spec.alpha2) * std::pow(spec.rho0, d / 2);
  const double lambda2 = -std::log(spec.alpha1) / std::sqrt(spec.sigma0_sq);
  return std::log(lambda1 * d / 2) + (-d / 2 - 1) * std::log(rho) - lambda1 * std::pow(rho, -d / 2) +
         std::log(lambda2) - lambda2 * sigma;
}

double log_prior(const SpatialHyper& hyper, const SpatialPriors& priors) {
  const double a = priors.noise_gamma_shape;
  const double b = priors.noise_gamma_rate;
  const double tau_eps = std::exp(hyper.log_noise_precision);
  const double noise = a * std::log(b) - std::lgamma(a) + a * hyper.log_noise_precision - b * tau_eps;
  // d rho / d theta3 = rho,  |d sigma / d theta2| = sigma / 2
  const double sigma_sq = hyper.field_var();
  const double field = pc_prior_logdensity(hyper.range(), sigma_sq, priors.pc) + hyper.log_range +
                       std::log(0.5 * std::sqrt(sigma_sq));
  return noise + field;
}

PcPriorSpec default_pc_prior(const Region& region, double alpha1, double alpha2) {
  check_region(region);
  PcPriorSpec spec;
  const double d = max_distance(region.locations);
  spec.rho0 = d > 0 ? 0.2 * d : 1.0;
  const double n = static_cast<double>(region.size());
  const double var = n > 1 ? (region.y.array() - region.y.mean()).square().sum() / (n - 1) : 0.0;
  spec.sigma0_sq = var > 0 ? var : 1.0;
  spec.alpha1 = alpha1;
  spec.alpha2 = alpha2;
  return spec;
}

Eigen::MatrixXd region_correlation(const Region& region, double rho) {
  return matern_correlation(pairwise_distances(region.locations, region.locations), rho);
}

Gaussian conditional(const Region& region, const SpatialHyper& hyper, double beta_prior_var) {
  check_region(region);
  return conditional(region, hyper, beta_prior_var, region_correlation(region, hyper.range()));
}

Gaussian conditional(const Region& region, const SpatialHyper& hyper, double beta_prior_var,
                     const Eigen::MatrixXd& corr) {
  check_region(region);
  const Eigen::Index n = region.size();
  const Eigen::Index p = region.covariate_count();
  const Eigen::MatrixXd s = marginal_covariance(corr, region.Z * region.Z.transpose(), hyper, beta_prior_var);
  const auto llt = robust_llt(s, "spatial::conditional");

  // Prior covariance of x = (u, beta) and Cov(x, y) = Sigma_x A'.
  Eigen::MatrixXd prior_cov = Eigen::MatrixXd::Zero(n + p, n + p);
  prior_cov.topLeftCorner(n, n) = hyper.field_var() * corr;
  prior_cov.bottomRightCorner(p, p).diagonal().setConstant(beta_prior_var);
  Eigen::MatrixXd cross(n + p, n);
  cross.topRows(n) = hyper.field_var() * corr;
  cross.bottomRows(p) = beta_prior_var * region.Z.transpose();

  const Eigen::MatrixXd w = llt.matrixL().solve(cross.transpose());  // L^{-1} A Sigma_x
  const Eigen::VectorXd z = llt.matrixL().solve(region.y);
  Eigen::MatrixXd cov = prior_cov - w.transpose() * w;
  cov = 0.5 * (cov + cov.transpose()).eval();
  return Gaussian::moment(w.transpose() * z, std::move(cov));
}

double marginal_loglik(const Region& region, const SpatialHyper& hyper, double beta_prior_var) {
  check_region(region);
  const Eigen::MatrixXd corr = region_correlation(region, hyper.range());
  const Eigen::MatrixXd s = marginal_covariance(corr, region.Z * region.Z.transpose(), hyper, beta_prior_var);
  return gaussian_loglik(robust_llt(s, "spatial::marginal_loglik"), region.y);
}

LooPredictive loo_predictive(const Region& region, const SpatialHyper& hyper, double beta_prior_var) {
  check_region(region);
  return loo_predictive(region, hyper, beta_prior_var, region_correlation(region, hyper.range()));
}

LooPredictive loo_predictive(const Region& region, const SpatialHyper& hyper, double beta_prior_var,
                             const Eigen::MatrixXd& corr) {
  check_region(region);
  const Eigen::MatrixXd s = marginal_covariance(corr, region.Z * region.Z.transpose(), hyper, beta_prior_var);
  const auto llt = robust_llt(s, "spatial::loo_predictive");
  const Eigen::MatrixXd k = llt.solve(Eigen::MatrixXd::Identity(s.rows(), s.cols()));
  return loo_from_precision(k, region.y);
}

SpatialHyper HyperPosterior3::point(Eigen::Index flat) const {
  const Eigen::Index n0 = axes[0].size();
  const Eigen::Index n1 = axes[1].size();
  const Eigen::Index i0 = flat % n0;
  const Eigen::Index i1 = (flat / n0) % n1;
  const Eigen::Index i2 = flat / (n0 * n1);
  return {axes[0](i0), axes[1](i1), axes[2](i2)};
}

Eigen::Vector3d HyperPosterior3::refined_modes() const {
  Eigen::Vector3d out;
  for (int k = 0; k < 3; ++k) {
    const HyperPosterior& m = marginals[k];
    const int i = m.mode_index;
    out(k) = m.mode;
    if (i == 0 || i + 1 >= m.grid.size()) continue;
    const double lm = m.log_weights(i - 1);
    const double l0 = m.log_weights(i);
    const double lp = m.log_weights(i + 1);
    const double curv = lm - 2 * l0 + lp;
    if (!(curv < 0)) continue;
    const double h = m.grid(i + 1) - m.grid(i);
    const double shift = std::clamp(0.5 * (lm - lp) / curv, -0.5, 0.5);
    out(k) = m.mode + shift * h;
  }
  return out;
}

Eigen::Vector3d HyperPosterior3::sds() const { return {marginals[0].sd, marginals[1].sd, marginals[2].sd}; }

HyperPosterior3 hyper_posterior(const Region& region, const SpatialPriors& priors, const GridSpec3& grid,
                                double boundary_tol) {
  check_region(region);
  if (region.size() < region.covariate_count() + 1)
    throw ConfigError("spatial: region " + std::to_string(region.id + 1) + " has fewer than p + 1 observations");
  priors.pc.validate();
  HyperPosterior3 post;
  for (int k = 0; k < 3; ++k) post.axes[k] = grid.axes[k].nodes();
  const Eigen::Index n0 = post.axes[0].size();
  const Eigen::Index n1 = post.axes[1].size();
  const Eigen::Index n2 = post.axes[2].size();

  const Eigen::MatrixXd dist = pairwise_distances(region.locations, region.locations);
  const Eigen::MatrixXd zzt = region.Z * region.Z.transpose();
  Eigen::VectorXd lw(n0 * n1 * n2);
  for (Eigen::Index i2 = 0; i2 < n2; ++i2) {
    const Eigen::MatrixXd corr = matern_correlation(dist, std::exp(post.axes[2](i2)));
    for (Eigen::Index i1 = 0; i1 < n1; ++i1) {
      for (Eigen::Index i0 = 0; i0 < n0; ++i0) {
        const SpatialHyper h{post.axes[0](i0), post.axes[1](i1), post.axes[2](i2)};
        const Eigen::MatrixXd s = marginal_covariance(corr, zzt, h, priors.beta_prior_var);
        const auto llt = robust_llt(s, "spatial::hyper_posterior");
        lw(i0 + n0 * (i1 + n1 * i2)) = gaussian_loglik(llt, region.y) + log_prior(h, priors);
      }
    }
  }
  post.log_weights = lw.array() - log_sum_exp(lw);

  std::array<Eigen::VectorXd, 3> marg;
  for (int k = 0; k < 3; ++k) marg[k] = Eigen::VectorXd::Constant(post.axes[k].size(), -INFINITY);
  auto acc = [](double& target, double v) {
    if (target == -INFINITY) {
      target = v;
    } else {
      const double hi = std::max(target, v);
      target = hi + std::log(std::exp(target - hi) + std::exp(v - hi));
    }
  };
  for (Eigen::Index i2 = 0; i2 < n2; ++i2)
    for (Eigen::Index i1 = 0; i1 < n1; ++i1)
      for (Eigen::Index i0 = 0; i0 < n0; ++i0) {
        const double v = post.log_weights(i0 + n0 * (i1 + n1 * i2));
        acc(marg[0](i0), v);
        acc(marg[1](i1), v);
        acc(marg[2](i2), v);
      }
  for (int k = 0; k < 3; ++k) {
    post.marginals[k] = summarize_grid(post.axes[k], marg[k]);
    check_boundary_mass(post.marginals[k], boundary_tol, k);
  }
  return post;
}

GridSpec3 default_grid(const Region& region, int points) {
  check_region(region);
  const Eigen::Index n = region.size();
  const Eigen::Index p = region.covariate_count();
  const Eigen::VectorXd beta = region.Z.colPivHouseholderQr().solve(region.y);
  const double rss = (region.y - region.Z * beta).squaredNorm();
  double v = rss / static_cast<double>(std::max<Eigen::Index>(n - p, 1));
  const double scale = region.y.squaredNorm() / static_cast<double>(n);
  v = std::max(v, 1e-8 * scale + 1e-12);
  // Residual variance split evenly between field and noise.
  const double centre = std::log(2.0 / v);
  double diameter = max_distance(region.locations);
  if (!(diameter > 0)) diameter = 1.0;
  GridSpec3 g;
  g.axes[0] = {centre - 4.0, centre + 4.0, points};
  g.axes[1] = {centre - 4.0, centre + 4.0, points};
  g.axes[2] = {std::log(0.05 * diameter), std::log(2.0 * diameter), points};
  return g;
}

namespace {

HyperPosterior3 fit_with_expansion(const Region& region, const SpatialPriors& priors, GridSpec3 grid,
                                   const FitOptions& options) {
  for (int attempt = 0;; ++attempt) {
    HyperPosterior3 post = hyper_posterior(region, priors, grid, 1.0);
    bool clean = true;
    for (int k = 0; k < 3; ++k) {
      const HyperPosterior& m = post.marginals[k];
      const double lo_mass = std::exp(m.log_weights(0));
      const double hi_mass = std::exp(m.log_weights(m.log_weights.size() - 1));
      if (lo_mass <= options.boundary_tol && hi_mass <= options.boundary_tol) continue;
      clean = false;
      if (attempt >= options.max_expansions) check_boundary_mass(m, options.boundary_tol, k);
      // Extend each offending side by half the current width at the same spacing.
      GridSpec& axis = grid.axes[k];
      const double spacing = (axis.hi - axis.lo) / (axis.points - 1);
      const int add = std::max(1, (axis.points - 1) / 2);
      if (lo_mass > options.boundary_tol) {
        axis.lo -= add * spacing;
        axis.points += add;
      }
      if (hi_mass > options.boundary_tol) {
        axis.hi += add * spacing;
        axis.points += add;
      }
    }
    if (clean) return post;
  }
}

}  // namespace

HyperPosterior3 fit_hyper_posterior(const Region& region, const SpatialPriors& priors, const FitOptions& options) {
  const HyperPosterior3 coarse =
      fit_with_expansion(region, priors, default_grid(region, options.coarse_points), options);
  GridSpec3 refined;
  for (int k = 0; k < 3; ++k) {
    const HyperPosterior& m = coarse.marginals[k];
    const double spacing = m.grid(1) - m.grid(0);
    const double half = std::max(5.0 * m.sd, 1.5 * spacing);
    refined.axes[k] = {m.mean - half, m.mean + half, options.points};
  }
  return fit_with_expansion(region, priors, refined, options);
}

}  // namespace llgm::spatial
