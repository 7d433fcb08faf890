#include "llgm/ar1.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "llgm/errors.hpp"

namespace llgm::ar1 {
namespace {

void check_phi(double phi) {
  if (!(std::abs(phi) < 1.0)) throw std::invalid_argument("ar1: |phi| must be < 1");
}

// Cholesky factor of the symmetric tridiagonal P = Q + tau I:
// L has diagonal d and subdiagonal e.
struct TridiagonalFactor {
  Eigen::VectorXd d;
  Eigen::VectorXd e;

  TridiagonalFactor(double phi, double tau, Eigen::Index n) : d(n), e(n > 1 ? n - 1 : 0) {
    const double corner = 1.0 + tau;
    const double inner = 1.0 + phi * phi + tau;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double diag = (i == 0 || i == n - 1) ? corner : inner;
      const double sub = i > 0 ? e(i - 1) : 0.0;
      const double pivot = diag - sub * sub;
      if (!(pivot > 0)) throw NumericalError("ar1: posterior precision is not positive definite");
      d(i) = std::sqrt(pivot);
      if (i + 1 < n) e(i) = -phi / d(i);
    }
  }

  double log_det() const { return 2.0 * d.array().log().sum(); }

  // L^{-1} v
  Eigen::VectorXd forward(const Eigen::VectorXd& v) const {
    Eigen::VectorXd z(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) z(i) = (v(i) - (i > 0 ? e(i - 1) * z(i - 1) : 0.0)) / d(i);
    return z;
  }

  // P^{-1} v
  Eigen::VectorXd solve(const Eigen::VectorXd& v) const {
    Eigen::VectorXd z = forward(v);
    for (Eigen::Index i = z.size() - 1; i >= 0; --i) {
      if (i + 1 < z.size()) z(i) -= e(i) * z(i + 1);
      z(i) /= d(i);
    }
    return z;
  }

  // diag(P^{-1}) by the Takahashi recursion on a bidiagonal factor.
  Eigen::VectorXd inverse_diagonal() const {
    const Eigen::Index n = d.size();
    Eigen::VectorXd s(n);
    s(n - 1) = 1.0 / (d(n - 1) * d(n - 1));
    for (Eigen::Index i = n - 2; i >= 0; --i) {
      const double off = -(e(i) / d(i)) * s(i + 1);
      s(i) = 1.0 / (d(i) * d(i)) - (e(i) / d(i)) * off;
    }
    return s;
  }
};

}  // namespace

void Ar1Config::validate() const {
  check_phi(phi);
  if (!(tau > 0)) throw std::invalid_argument("ar1: tau must be positive");
  if (length < 1) throw std::invalid_argument("ar1: length must be positive");
}

Sample simulate(const Ar1Config& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Sample s{Eigen::VectorXd(cfg.length), Eigen::VectorXd(cfg.length)};
  s.x(0) = normal(rng) / std::sqrt((1.0 - cfg.phi) * (1.0 + cfg.phi));
  for (int t = 1; t < cfg.length; ++t) s.x(t) = cfg.phi * s.x(t - 1) + normal(rng);
  const double noise_sd = 1.0 / std::sqrt(cfg.tau);
  for (int t = 0; t < cfg.length; ++t) s.y(t) = s.x(t) + noise_sd * normal(rng);
  return s;
}

Eigen::MatrixXd precision(double phi, int length) {
  check_phi(phi);
  if (length < 2) throw std::invalid_argument("ar1::precision: length must be >= 2");
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(length, length);
  for (int i = 0; i < length; ++i) {
    q(i, i) = (i == 0 || i == length - 1) ? 1.0 : 1.0 + phi * phi;
    if (i + 1 < length) {
      q(i, i + 1) = -phi;
      q(i + 1, i) = -phi;
    }
  }
  return q;
}

Gaussian latent_conditional(const Eigen::VectorXd& y, double phi, double tau) {
  check_phi(phi);
  if (!(tau > 0)) throw std::invalid_argument("ar1: tau must be positive");
  const auto n = static_cast<int>(y.size());
  Eigen::MatrixXd p = n >= 2 ? precision(phi, n) : Eigen::MatrixXd::Ones(1, 1);
  p.diagonal().array() += tau;
  return Gaussian::canonical(tau * y, std::move(p));
}

double marginal_loglik(const Eigen::VectorXd& y, double phi, double tau) {
  check_phi(phi);
  const Eigen::Index n = y.size();
  const TridiagonalFactor factor(phi, tau, n);
  const double log_det_q = n >= 2 ? std::log((1.0 - phi) * (1.0 + phi)) : 0.0;
  const Eigen::VectorXd b = tau * y;
  const double quad = factor.forward(b).squaredNorm();  // b' P^{-1} b
  const double dn = static_cast<double>(n);
  return 0.5 * log_det_q - 0.5 * factor.log_det() + 0.5 * (quad - tau * y.squaredNorm()) +
         0.5 * dn * std::log(tau) - 0.5 * dn * std::log(2.0 * std::numbers::pi);
}

LooPredictive loo_predictive(const Eigen::VectorXd& y, double phi, double tau) {
  check_phi(phi);
  // Marginal precision of y by Woodbury: K = tau I - tau^2 P^{-1}.
  const TridiagonalFactor factor(phi, tau, y.size());
  const Eigen::VectorXd p_inv_y = factor.solve(y);
  const Eigen::VectorXd p_inv_diag = factor.inverse_diagonal();
  LooPredictive out;
  const Eigen::VectorXd k_diag = tau * (1.0 - tau * p_inv_diag.array());
  const Eigen::VectorXd ky = tau * (y - tau * p_inv_y);
  out.var = k_diag.cwiseInverse();
  out.mean = y - ky.cwiseProduct(out.var);
  return out;
}

HyperPosterior hyper_posterior(const Eigen::VectorXd& y, double tau, const ThetaPrior& prior,
                               const GridSpec& grid, double boundary_tol) {
  if (!(prior.precision > 0)) throw ConfigError("ar1: prior precision must be positive");
  Eigen::VectorXd nodes = grid.nodes();
  Eigen::VectorXd lw(nodes.size());
  for (Eigen::Index i = 0; i < nodes.size(); ++i)
    lw(i) = marginal_loglik(y, phi_from_theta(nodes(i)), tau) + prior.logpdf(nodes(i));
  HyperPosterior post = summarize_grid(std::move(nodes), lw);
  check_boundary_mass(post, boundary_tol);
  return post;
}

Eigen::VectorXd retrieve_prior(const HyperPosterior& post, const Eigen::VectorXd& y, double tau) {
  Eigen::VectorXd lp(post.grid.size());
  for (Eigen::Index i = 0; i < lp.size(); ++i)
    lp(i) = post.log_weights(i) - marginal_loglik(y, phi_from_theta(post.grid(i)), tau);
  return lp.array() - log_sum_exp(lp);
}

double mode_phi(const HyperPosterior& post) { return phi_from_theta(post.mode); }

}  // namespace llgm::ar1
