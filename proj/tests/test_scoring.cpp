#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "llgm/ar1.hpp"
#include "llgm/errors.hpp"
#include "llgm/refit.hpp"
#include "llgm/scoring.hpp"
#include "llgm/spatial.hpp"
#include "oracles.hpp"

using namespace llgm;
using namespace llgm::scoring;

namespace {

std::vector<int> without(int n, int i) {
  std::vector<int> keep;
  for (int j = 0; j < n; ++j)
    if (j != i) keep.push_back(j);
  return keep;
}

// Brute-force CPO under a grid posterior: for every t, rebuild the grid
// posterior from y_{-t} and average the predictive density of y_t.
//   cov(theta) is the marginal covariance of y at grid point theta.
template <typename CovFn>
Eigen::VectorXd delete_one_grid_cpo(const Eigen::VectorXd& y, const std::vector<double>& log_prior,
                                    const CovFn& cov) {
  const int n = static_cast<int>(y.size());
  const std::size_t g = log_prior.size();
  std::vector<Eigen::MatrixXd> s(g);
  for (std::size_t k = 0; k < g; ++k) s[k] = cov(k);
  Eigen::VectorXd out(n);
  for (int t = 0; t < n; ++t) {
    const auto keep = without(n, t);
    Eigen::VectorXd lw(g), pred(g);
    for (std::size_t k = 0; k < g; ++k) {
      const Eigen::MatrixXd sk = s[k](keep, keep);
      const auto [mean, var] = oracle::delete_one(s[k], y, t);
      lw(k) = log_prior[k] + oracle::mvn_logpdf(y(keep), Eigen::VectorXd::Zero(n - 1), sk);
      pred(k) = oracle::normal_pdf(y(t), mean, var);
    }
    const Eigen::VectorXd w = (lw.array() - lw.maxCoeff()).exp();
    out(t) = w.dot(pred) / w.sum();
  }
  return out;
}

Region random_region(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 20);
  Region r;
  r.locations.resize(n, 2);
  for (int i = 0; i < n; ++i) r.locations.row(i) << u(rng), u(rng);
  r.Z.resize(n, 2);
  r.Z.col(0).setOnes();
  r.Z.col(1) = oracle::random_vector(n, rng);
  r.y = 1.0 + oracle::random_vector(n, rng, 0.6).array();
  for (int i = 0; i < n; ++i) r.rows.push_back(i);
  return r;
}

Eigen::MatrixXd spatial_cov(const Region& r, const spatial::SpatialHyper& h, double vb) {
  Eigen::MatrixXd s = h.field_var() * oracle::matern_matrix(r.locations, r.locations, h.range()) +
                      vb * r.Z * r.Z.transpose();
  s.diagonal().array() += h.noise_var();
  return s;
}

}  // namespace

TEST(KlRegion, ZeroOnIdentical) {
  std::mt19937_64 rng(1);
  const Gaussian g = Gaussian::moment(oracle::random_vector(5, rng), oracle::random_spd(5, rng));
  EXPECT_LT(kl_region(g, g), 1e-12);
}

TEST(KlRegion, ApproximationIsFirstSlot) {
  // KL(approx || exact) for N(0, 1) exact and N(0, 4) approx.
  const Gaussian exact = Gaussian::moment(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
  const Gaussian approx = Gaussian::moment(Eigen::VectorXd::Zero(1), 4 * Eigen::MatrixXd::Identity(1, 1));
  EXPECT_NEAR(kl_region(exact, approx), 0.5 * (4 - 1 - std::log(4.0)), 1e-14);
}

TEST(KlRegion, MatchesMonteCarloT6) {
  const auto s = ar1::simulate({0.8, 2.0, 6}, 3);
  const Gaussian exact = to_moment(ar1::latent_conditional(s.y, 0.8, 2.0));
  const Gaussian approx = to_moment(ar1::latent_conditional(s.y, 0.3, 2.0));
  const double kl = kl_region(exact, approx);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z;
  const Eigen::MatrixXd l = approx.matrix.llt().matrixL();
  const int n = 1000000;
  double sum = 0, sumsq = 0;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd e(6);
    for (auto& v : e) v = z(rng);
    const Eigen::VectorXd x = approx.mean + l * e;
    const double d =
        oracle::mvn_logpdf(x, approx.mean, approx.matrix) - oracle::mvn_logpdf(x, exact.mean, exact.matrix);
    sum += d;
    sumsq += d * d;
  }
  const double mean = sum / n, se = std::sqrt((sumsq / n - mean * mean) / n);
  EXPECT_NEAR(kl, mean, 3 * se);
}

TEST(KlRegion, TrueThetaGivesZero) {
  const double phi = 0.88;
  const auto s = ar1::simulate({phi, 2.0, 50}, 5);
  const Gaussian exact = to_moment(ar1::latent_conditional(s.y, phi, 2.0));
  const Gaussian approx = refit::refit_point_mass(refit::Ar1Context{s.y, 2.0}, ar1::theta_from_phi(phi));
  EXPECT_LE(kl_region(exact, approx), 1e-12);
}

TEST(KlRegion, MixtureIsMomentMatched) {
  const auto s = ar1::simulate({0.5, 2.0, 8}, 6);
  const refit::Ar1Context ctx{s.y, 2.0};
  const auto mix = refit::refit_gh_mixture(ctx, 1.0, 0.5, 5);
  const Gaussian exact = to_moment(ar1::latent_conditional(s.y, 0.5, 2.0));
  EXPECT_DOUBLE_EQ(kl_region(exact, mix), kl_region(exact, refit::moment_match(mix)));
}

TEST(Emlkl, GeometricMean) {
  EXPECT_NEAR(emlkl(Eigen::VectorXd::Constant(7, std::exp(1.0))), std::exp(1.0), 1e-14);
  EXPECT_NEAR(emlkl(Eigen::Vector2d(1, 4)), 2.0, 1e-14);
  std::mt19937_64 rng(7);
  const Eigen::VectorXd v = oracle::random_vector(30, rng).cwiseAbs().array() + 0.01;
  EXPECT_NEAR(emlkl(3.7 * v), 3.7 * emlkl(v), 1e-12);
  EXPECT_THROW(emlkl(Eigen::Vector2d(1, 0)), std::invalid_argument);
  EXPECT_THROW(emlkl(Eigen::VectorXd(0)), std::invalid_argument);
}

TEST(Emlcpo, GeometricMeanProperties) {
  EXPECT_NEAR(emlcpo(Eigen::VectorXd::Ones(9)), 1.0, 1e-15);
  EXPECT_NEAR(emlcpo(Eigen::Vector2d(0.5, 2)), 1.0, 1e-15);
  std::mt19937_64 rng(8);
  Eigen::VectorXd v = oracle::random_vector(40, rng).cwiseAbs().array() + 0.01;
  const double e = emlcpo(v);
  EXPECT_GE(e, v.minCoeff());
  EXPECT_LE(e, v.maxCoeff());
  std::shuffle(v.begin(), v.end(), rng);
  EXPECT_NEAR(emlcpo(v), e, 1e-14);
  const std::vector<Eigen::VectorXd> ragged{v.head(10), v.segment(10, 25), v.tail(5)};
  EXPECT_NEAR(emlcpo(ragged), e, 1e-14);
}

TEST(Cpo, IidClosedForm) {
  std::mt19937_64 rng(9);
  const Eigen::VectorXd y = oracle::random_vector(10, rng, 1.5);
  const double tau = 2.0;
  const std::vector<LooPredictive> loo{ar1::loo_predictive(y, 0.0, tau)};
  const Eigen::VectorXd a = cpo_fixed({1.0}, loo, y);
  const Eigen::VectorXd b = cpo_reweighted(Eigen::VectorXd::Zero(1), loo, y);
  for (int t = 0; t < 10; ++t) {
    const double expected = oracle::normal_pdf(y(t), 0.0, 1.0 + 1.0 / tau);
    EXPECT_NEAR(a(t), expected, 1e-10);
    EXPECT_NEAR(b(t), expected, 1e-10);
  }
}

TEST(Cpo, Ar1GridMatchesDeleteOneRefit) {
  const GridSpec grid{-6, 8, 57};
  const ar1::ThetaPrior prior;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = ar1::simulate({0.7, 2.0, 12}, seed);
    const auto post = ar1::hyper_posterior(s.y, 2.0, prior, grid, 1.0);
    std::vector<LooPredictive> loo;
    std::vector<double> lp;
    for (Eigen::Index k = 0; k < post.grid.size(); ++k) {
      loo.push_back(ar1::loo_predictive(s.y, ar1::phi_from_theta(post.grid(k)), 2.0));
      lp.push_back(prior.logpdf(post.grid(k)));
    }
    const Eigen::VectorXd fast = cpo_reweighted(post.log_weights, loo, s.y);
    const Eigen::VectorXd brute = delete_one_grid_cpo(s.y, lp, [&](std::size_t k) {
      return Eigen::MatrixXd(oracle::ar1_covariance(std::tanh(post.grid(k) / 2), 12) +
                             Eigen::MatrixXd::Identity(12, 12) / 2.0);
    });
    for (int t = 0; t < 12; ++t) EXPECT_LT(oracle::rel_err(fast(t), brute(t)), 1e-6) << "t=" << t;
  }
}

TEST(Cpo, SpatialGridMatchesDeleteOneRefit) {
  std::mt19937_64 rng(10);
  const double vb = 1000.0;
  for (int trial = 0; trial < 3; ++trial) {
    const Region r = random_region(10, rng);
    spatial::SpatialPriors pr;
    pr.pc = spatial::default_pc_prior(r);
    spatial::GridSpec3 g;
    g.axes = {GridSpec{0, 6, 5}, GridSpec{-1, 4, 5}, GridSpec{1, 4, 5}};
    const auto post = spatial::hyper_posterior(r, pr, g, 1.0);
    std::vector<LooPredictive> loo;
    std::vector<double> lp;
    for (Eigen::Index k = 0; k < post.size(); ++k) {
      const auto h = post.point(k);
      loo.push_back(spatial::loo_predictive(r, h, vb));
      lp.push_back(spatial::log_prior(h, pr));
    }
    const Eigen::VectorXd fast = cpo_reweighted(post.log_weights, loo, r.y);
    const Eigen::VectorXd brute =
        delete_one_grid_cpo(r.y, lp, [&](std::size_t k) { return spatial_cov(r, post.point(k), vb); });
    for (int t = 0; t < 10; ++t) EXPECT_LT(oracle::rel_err(fast(t), brute(t)), 1e-6) << "t=" << t;
  }
}

TEST(Cpo, FixedWeightsMatchDeleteOneRefit) {
  // With theta weights held fixed, deleting y_t changes only the latent
  // conditional at each theta.
  std::mt19937_64 rng(11);
  const Region r = random_region(9, rng);
  const auto design = refit::gh_design(Eigen::Vector3d(2.0, 0.5, 2.5), Eigen::Vector3d(0.4, 0.3, 0.2), 3);
  std::vector<LooPredictive> loo;
  for (const auto& th : design.thetas)
    loo.push_back(spatial::loo_predictive(r, spatial::SpatialHyper::from_vector(Eigen::Vector3d(th)), 1000.0));
  const Eigen::VectorXd fast = cpo_fixed(design.weights, loo, r.y);
  for (int t = 0; t < 9; ++t) {
    double cpo = 0;
    for (std::size_t k = 0; k < design.thetas.size(); ++k) {
      const auto h = spatial::SpatialHyper::from_vector(Eigen::Vector3d(design.thetas[k]));
      const Eigen::MatrixXd s = spatial_cov(r, h, 1000.0);
      const auto [mean, var] = oracle::delete_one(s, r.y, t);
      cpo += design.weights[k] * oracle::normal_pdf(r.y(t), mean, var);
    }
    EXPECT_LT(oracle::rel_err(fast(t), cpo), 1e-6);
  }
}

TEST(Cpo, PermutationEquivariant) {
  std::mt19937_64 rng(12);
  const Region r = random_region(8, rng);
  std::vector<int> perm(8);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Region q = r;
  for (int i = 0; i < 8; ++i) {
    q.y(i) = r.y(perm[i]);
    q.Z.row(i) = r.Z.row(perm[i]);
    q.locations.row(i) = r.locations.row(perm[i]);
  }
  const spatial::SpatialHyper h{2.0, 0.5, 2.0};
  const Eigen::VectorXd a = cpo_fixed({1.0}, {spatial::loo_predictive(r, h, 1000.0)}, r.y);
  const Eigen::VectorXd b = cpo_fixed({1.0}, {spatial::loo_predictive(q, h, 1000.0)}, q.y);
  for (int i = 0; i < 8; ++i) EXPECT_NEAR(b(i), a(perm[i]), 1e-12);
}

TEST(Cpo, UnderflowNamesRegionAndObservation) {
  LooPredictive p{Eigen::VectorXd::Zero(3), Eigen::VectorXd::Constant(3, 1e-4)};
  const Eigen::Vector3d y(0.0, 1e3, 0.0);
  try {
    cpo_fixed({1.0}, {p}, y, 4);
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("region 5, observation 2"), std::string::npos);
  }
}

TEST(ScoreReport, Finalize) {
  ScoreReport rep;
  rep.cpo = {Eigen::Vector2d(0.5, 2), Eigen::VectorXd::Ones(1)};
  rep.kl_per_region = Eigen::Vector2d(1, 4);
  rep.finalize();
  EXPECT_NEAR(rep.emlcpo_value, 1.0, 1e-15);
  ASSERT_TRUE(rep.emlkl_value.has_value());
  EXPECT_NEAR(*rep.emlkl_value, 2.0, 1e-15);
}
