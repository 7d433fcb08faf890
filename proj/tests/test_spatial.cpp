#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "llgm/errors.hpp"
#include "llgm/spatial.hpp"
#include "oracles.hpp"

using namespace llgm;
using namespace llgm::spatial;

namespace {

Region random_region(int n, int covariates, std::mt19937_64& rng, double box = 30.0) {
  std::uniform_real_distribution<double> u(0, box);
  Region r;
  r.locations.resize(n, 2);
  for (int i = 0; i < n; ++i) r.locations.row(i) << u(rng), u(rng);
  r.Z.resize(n, covariates + 1);
  r.Z.col(0).setOnes();
  for (int j = 1; j <= covariates; ++j) r.Z.col(j) = oracle::random_vector(n, rng);
  r.y = oracle::random_vector(n, rng, 0.7);
  for (int i = 0; i < n; ++i) r.rows.push_back(i);
  return r;
}

SpatialHyper random_hyper(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> t1(0.5, 4), t2(-1, 2), t3(1, 3.5);
  return {t1(rng), t2(rng), t3(rng)};
}

// Prior of x = (u, beta) and the map y = A x + e.
struct Joint {
  Eigen::MatrixXd prior_cov, a, noise;
};

Joint joint(const Region& r, const SpatialHyper& h, double vb) {
  const int n = static_cast<int>(r.size()), p = static_cast<int>(r.Z.cols());
  Joint j;
  j.prior_cov = Eigen::MatrixXd::Zero(n + p, n + p);
  j.prior_cov.topLeftCorner(n, n) = std::exp(-h.log_field_precision) * oracle::matern_matrix(r.locations, r.locations, std::exp(h.log_range));
  j.prior_cov.bottomRightCorner(p, p) = vb * Eigen::MatrixXd::Identity(p, p);
  j.a.resize(n, n + p);
  j.a << Eigen::MatrixXd::Identity(n, n), r.Z;
  j.noise = std::exp(-h.log_noise_precision) * Eigen::MatrixXd::Identity(n, n);
  return j;
}

}  // namespace

TEST(Matern, AtOrigin) { EXPECT_DOUBLE_EQ(matern_cov(0.0, 2.5, 7.0), 2.5); }

TEST(Matern, CorrelationAtRange) {
  for (double rho : {0.5, 1.0, 10.0, 123.0}) {
    const double c = matern_cov(rho, 1.0, rho);
    EXPECT_NEAR(c, 0.13, 0.01);
  }
}

TEST(Matern, StrictlyDecreasing) {
  const double rho = 3.0;
  double prev = matern_cov(0.0, 1.0, rho);
  for (double h = 0.1; h <= 5 * rho; h += 0.1) {
    const double c = matern_cov(h, 1.0, rho);
    EXPECT_LT(c, prev);
    prev = c;
  }
}

TEST(Matern, MatchesBesselForm) {
  for (double h : {0.01, 0.5, 2.0, 9.0}) EXPECT_NEAR(matern_cov(h, 1.3, 4.0), 1.3 * oracle::matern(h, 4.0), 1e-14);
}

TEST(PcPrior, TailProbabilities) {
  using boost::math::quadrature::gauss_kronrod;
  const PcPriorSpec spec{5.0, 0.4, 0.01, 0.01};
  const double inf = std::numeric_limits<double>::infinity();
  auto density = [&](double rho, double sigma) { return std::exp(pc_prior_logdensity(rho, sigma * sigma, spec)); };
  auto sigma_marginal = [&](double sigma) {
    return gauss_kronrod<double, 61>::integrate([&](double rho) { return density(rho, sigma); }, 0.0, inf, 15, 1e-12);
  };
  auto rho_marginal = [&](double rho) {
    return gauss_kronrod<double, 61>::integrate([&](double s) { return density(rho, s); }, 0.0, inf, 15, 1e-12);
  };
  const double sigma0 = std::sqrt(spec.sigma0_sq);
  const double p_rho = gauss_kronrod<double, 61>::integrate(rho_marginal, 0.0, spec.rho0, 15, 1e-12);
  const double p_sigma = gauss_kronrod<double, 61>::integrate(sigma_marginal, sigma0, inf, 15, 1e-12);
  EXPECT_NEAR(p_rho, 0.01, 1e-4);
  EXPECT_NEAR(p_sigma, 0.01, 1e-4);
}

TEST(PcPrior, FiniteAtAnchor) {
  const PcPriorSpec spec{5.0, 0.4, 0.01, 0.01};
  const double v = pc_prior_logdensity(spec.rho0, spec.sigma0_sq, spec);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_THROW(pc_prior_logdensity(-1, 1, spec), std::invalid_argument);
  EXPECT_THROW(pc_prior_logdensity(1, 1, PcPriorSpec{1, 1, 0, 0.5}), ConfigError);
}

TEST(SpatialConditional, SingleObservation) {
  Region r;
  r.locations = Coordinates::Zero(1, 2);
  r.Z = Eigen::MatrixXd::Ones(1, 1);
  r.y = Eigen::VectorXd::Constant(1, 2.3);
  const SpatialHyper h{std::log(4.0), std::log(2.0), 1.0};
  const double vb = 1e6;
  const auto g = conditional(r, h, vb);
  const double signal = 0.5 + vb, noise = 0.25;
  EXPECT_NEAR(g.mean(0) + g.mean(1), 2.3 * signal / (signal + noise), 1e-8);
}

TEST(SpatialConditional, InterpolatesWithoutNoise) {
  std::mt19937_64 rng(4);
  const Region r = random_region(10, 2, rng);
  const auto g = conditional(r, {std::log(1e8), 0.0, 2.0}, 1000);
  const Eigen::VectorXd fit = g.mean.head(10) + r.Z * g.mean.tail(3);
  EXPECT_LT((fit - r.y).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(SpatialConditional, MatchesDenseOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Region r = random_region(1 + trial % 8, trial % 3, rng);
    const SpatialHyper h = random_hyper(rng);
    const Joint j = joint(r, h, 1000);
    const auto ref = oracle::condition(Eigen::VectorXd::Zero(j.a.cols()), j.prior_cov, j.a, j.noise, r.y);
    const auto g = conditional(r, h, 1000);
    EXPECT_LT(oracle::rel_err(g.mean, ref.mean), 1e-9);
    EXPECT_LT(oracle::rel_err(g.matrix, ref.cov), 1e-9);
  }
}

TEST(SpatialMarginal, IidLimit) {
  std::mt19937_64 rng(6);
  const Region r = random_region(8, 1, rng);
  const SpatialHyper h{1.2, 60.0, 2.0};
  const double expected =
      oracle::mvn_logpdf(r.y, Eigen::VectorXd::Zero(8), std::exp(-1.2) * Eigen::MatrixXd::Identity(8, 8));
  EXPECT_NEAR(marginal_loglik(r, h, 1e-14), expected, 1e-8);
}

TEST(SpatialMarginal, RatioIdentity) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const Region r = random_region(6, 1, rng);
    const SpatialHyper h = random_hyper(rng);
    const double vb = 10.0;
    const Joint j = joint(r, h, vb);
    const int d = static_cast<int>(j.a.cols());
    const auto post = oracle::condition(Eigen::VectorXd::Zero(d), j.prior_cov, j.a, j.noise, r.y);
    for (const Eigen::VectorXd& x : {Eigen::VectorXd(Eigen::VectorXd::Zero(d)), oracle::random_vector(d, rng, 0.3)}) {
      const double ratio = oracle::mvn_logpdf(r.y, j.a * x, j.noise) +
                           oracle::mvn_logpdf(x, Eigen::VectorXd::Zero(d), j.prior_cov) -
                           oracle::mvn_logpdf(x, post.mean, post.cov);
      EXPECT_NEAR(marginal_loglik(r, h, vb), ratio, 1e-8);
    }
  }
}

TEST(SpatialMarginal, PermutationInvariant) {
  std::mt19937_64 rng(8);
  const Region r = random_region(9, 2, rng);
  std::vector<int> perm(9);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Region q = r;
  for (int i = 0; i < 9; ++i) {
    q.y(i) = r.y(perm[i]);
    q.Z.row(i) = r.Z.row(perm[i]);
    q.locations.row(i) = r.locations.row(perm[i]);
  }
  const SpatialHyper h{2.0, 0.5, 2.5};
  EXPECT_NEAR(marginal_loglik(r, h, 1000), marginal_loglik(q, h, 1000), 1e-10);
}

TEST(SpatialLoo, MatchesDeleteOneConditioning) {
  std::mt19937_64 rng(9);
  const Region r = random_region(8, 1, rng);
  const SpatialHyper h = random_hyper(rng);
  const Joint j = joint(r, h, 50.0);
  const Eigen::MatrixXd s = j.a * j.prior_cov * j.a.transpose() + j.noise;
  const auto loo = loo_predictive(r, h, 50.0);
  for (int i = 0; i < 8; ++i) {
    const auto [mean, var] = oracle::delete_one(s, r.y, i);
    EXPECT_LT(oracle::rel_err(loo.mean(i), mean), 1e-9);
    EXPECT_LT(oracle::rel_err(loo.var(i), var), 1e-9);
  }
}

TEST(SpatialHyperPosterior, NormalizedOnGrid) {
  std::mt19937_64 rng(10);
  const Region r = random_region(15, 1, rng);
  SpatialPriors pr;
  pr.pc = default_pc_prior(r);
  GridSpec3 g;
  g.axes = {GridSpec{-2, 8, 9}, GridSpec{-3, 5, 9}, GridSpec{0, 5, 9}};
  const auto post = hyper_posterior(r, pr, g, 1.0);
  EXPECT_NEAR(post.log_weights.array().exp().sum(), 1.0, 1e-12);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(post.marginals[k].weights().sum(), 1.0, 1e-12);
}

TEST(SpatialHyperPosterior, TooFewObservations) {
  std::mt19937_64 rng(11);
  const Region r = random_region(2, 2, rng);
  SpatialPriors pr;
  EXPECT_THROW(hyper_posterior(r, pr, default_grid(r, 5), 1.0), ConfigError);
}

TEST(SpatialHyperPosterior, RecoversSimulatedTruth) {
  // 50 points in a 30 km square, nugget sd 0.1, field sd 0.3, range 10 km.
  const Eigen::Vector3d truth(std::log(100.0), std::log(1 / 0.09), std::log(10.0));
  int covered = 0;
  std::array<int, 3> per_component{0, 0, 0};
  for (int seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    Region r = random_region(50, 1, rng);
    const Joint j = joint(r, SpatialHyper::from_vector(truth), 1.0);
    const Eigen::MatrixXd s = j.a.leftCols(50) * j.prior_cov.topLeftCorner(50, 50) * j.a.leftCols(50).transpose() + j.noise;
    const Eigen::MatrixXd l = s.llt().matrixL();
    r.y = 1.0 + 0.3 * r.Z.col(1).array() + (l * oracle::random_vector(50, rng)).array();
    SpatialPriors pr;
    pr.pc = default_pc_prior(r);
    const auto post = fit_hyper_posterior(r, pr);
    const Eigen::Vector3d z = ((post.refined_modes() - truth).array() / post.sds().array()).abs();
    for (int k = 0; k < 3; ++k) per_component[k] += z(k) <= 2;
    covered += (z.array() <= 2).all();
  }
  RecordProperty("covered_all", covered);
  for (int k = 0; k < 3; ++k) RecordProperty("covered_" + std::to_string(k + 1), per_component[k]);
  EXPECT_GE(covered, 45) << "per component: " << per_component[0] << " " << per_component[1] << " "
                         << per_component[2];
}
