#pragma once

// Brute-force reference computations for the tests. Everything here uses
// explicit inverses and determinants so it shares no code path with the
// library's Cholesky-based routines. Inverses are taken in long double: the
// covariance-form identities cancel badly when a diffuse prior is involved.

#include <cmath>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using MatrixL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VectorL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

inline Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng, double ridge = 0.5) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd a(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) a(i, j) = z(rng);
  return a * a.transpose() / n + ridge * Eigen::MatrixXd::Identity(n, n);
}

inline Eigen::VectorXd random_vector(int n, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> z(0.0, sd);
  Eigen::VectorXd v(n);
  for (auto& x : v) x = z(rng);
  return v;
}

inline double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

/// log N(x; m, S) through an explicit inverse and LU determinant.
inline double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& m, const Eigen::MatrixXd& s) {
  const Eigen::FullPivLU<MatrixL> lu(s.cast<long double>());
  const VectorL r = (x - m).cast<long double>();
  const long double quad = r.dot(lu.inverse() * r);
  return static_cast<double>(-0.5L * (x.size() * std::log(2 * std::numbers::pi_v<long double>) +
                                      std::log(lu.determinant()) + quad));
}

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Joint Gaussian conditioning: x ~ N(m, S), y = A x + e, e ~ N(0, N).
/// Returns x | y by the covariance (kriging) identities.
inline Moments condition(const Eigen::VectorXd& m, const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                         const Eigen::MatrixXd& noise, const Eigen::VectorXd& y) {
  const MatrixL sl = s.cast<long double>(), al = a.cast<long double>();
  const MatrixL syy = al * sl * al.transpose() + noise.cast<long double>();
  const MatrixL sxy = sl * al.transpose();
  const MatrixL gain = sxy * syy.inverse();
  const VectorL mean = m.cast<long double>() + gain * (y - a * m).cast<long double>();
  const MatrixL cov = sl - gain * sxy.transpose();
  return {mean.cast<double>(), cov.cast<double>()};
}

/// Mean and variance of y_t given the other entries, y ~ N(0, S).
inline std::pair<double, double> delete_one(const Eigen::MatrixXd& s, const Eigen::VectorXd& y, int t) {
  const int n = static_cast<int>(y.size());
  std::vector<int> keep;
  for (int j = 0; j < n; ++j)
    if (j != t) keep.push_back(j);
  const MatrixL sl = s.cast<long double>();
  const MatrixL inv = MatrixL(sl(keep, keep)).inverse();
  const VectorL c = sl(keep, std::vector<int>{t});
  const VectorL yk = y(keep).cast<long double>();
  return {static_cast<double>(c.dot(inv * yk)), static_cast<double>(sl(t, t) - c.dot(inv * c))};
}

/// Stationary AR(1) covariance phi^|i-j| / (1 - phi^2).
inline Eigen::MatrixXd ar1_covariance(double phi, int t) {
  Eigen::MatrixXd s(t, t);
  for (int i = 0; i < t; ++i)
    for (int j = 0; j < t; ++j) s(i, j) = std::pow(phi, std::abs(i - j)) / (1 - phi * phi);
  return s;
}

/// Matern nu = 1 correlation written out from the modified Bessel function.
inline double matern(double h, double rho) {
  if (h == 0) return 1.0;
  const double k = std::sqrt(8.0) / rho;
  return k * h * std::cyl_bessel_k(1.0, k * h);
}

inline Eigen::MatrixXd matern_matrix(const Eigen::MatrixX2d& a, const Eigen::MatrixX2d& b, double rho) {
  Eigen::MatrixXd c(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.rows(); ++j) c(i, j) = matern((a.row(i) - b.row(j)).norm(), rho);
  return c;
}

inline double normal_pdf(double x, double m, double v) {
  return std::exp(-0.5 * (x - m) * (x - m) / v) / std::sqrt(2 * std::numbers::pi * v);
}

}  // namespace oracle
