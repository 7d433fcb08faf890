#pragma once

// Multivariate Gaussians in moment (mean, covariance) or canonical
// (b, P ~ exp(-x'Px/2 + b'x)) form, plus the closed-form algebra the rest of
// the library is written against.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "llgm/errors.hpp"

namespace llgm {

enum class GaussianForm { moment, canonical };

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
struct GaussianDist {
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;

  // Canonical form stores b here.
  Vector mean;
  // Covariance (moment) or precision (canonical).
  Matrix matrix;
  GaussianForm form = GaussianForm::moment;

  static GaussianDist moment(Vector mu, Matrix cov) {
    return {std::move(mu), std::move(cov), GaussianForm::moment};
  }
  static GaussianDist canonical(Vector b, Matrix prec) {
    return {std::move(b), std::move(prec), GaussianForm::canonical};
  }

  Eigen::Index dim() const { return mean.size(); }
  bool is_moment() const { return form == GaussianForm::moment; }
};

using Gaussian = GaussianDist<double>;

/// Cholesky factor of a symmetric positive-definite matrix. When the plain
/// factorization fails, 1e-10 * trace/n is added to the diagonal once; a
/// second failure throws NumericalError.
template <typename Derived>
Eigen::LLT<MatrixX<typename Derived::Scalar>> robust_llt(const Eigen::MatrixBase<Derived>& m,
                                                         const char* context = "cholesky") {
  using Scalar = typename Derived::Scalar;
  if (m.rows() != m.cols()) throw NumericalError(std::string(context) + ": matrix is not square");
  Eigen::LLT<MatrixX<Scalar>> llt(m);
  auto ok = [&llt] {
    if (llt.info() != Eigen::Success) return false;
    const auto d = llt.matrixLLT().diagonal();
    return (d.array() > Scalar(0)).all() && d.allFinite();
  };
  if (ok()) return llt;
  const Eigen::Index n = m.rows();
  const Scalar jitter = Scalar(1e-10) * m.trace() / Scalar(n);
  if (!(jitter > Scalar(0)))
    throw NumericalError(std::string(context) + ": matrix is not positive definite");
  MatrixX<Scalar> shifted = m;
  shifted.diagonal().array() += jitter;
  llt.compute(shifted);
  if (!ok()) throw NumericalError(std::string(context) + ": matrix is not positive definite after jitter");
  return llt;
}

template <typename Scalar>
Scalar log_det(const Eigen::LLT<MatrixX<Scalar>>& llt) {
  return Scalar(2) * llt.matrixLLT().diagonal().array().log().sum();
}

template <typename Scalar>
GaussianDist<Scalar> to_moment(const GaussianDist<Scalar>& g) {
  if (g.is_moment()) return g;
  const auto llt = robust_llt(g.matrix, "canonical_to_moment");
  const Eigen::Index n = g.dim();
  MatrixX<Scalar> cov = llt.solve(MatrixX<Scalar>::Identity(n, n));
  cov = Scalar(0.5) * (cov + cov.transpose()).eval();
  VectorX<Scalar> mean = llt.solve(g.mean);
  return GaussianDist<Scalar>::moment(std::move(mean), std::move(cov));
}

template <typename Scalar>
GaussianDist<Scalar> to_canonical(const GaussianDist<Scalar>& g) {
  if (!g.is_moment()) return g;
  const auto llt = robust_llt(g.matrix, "moment_to_canonical");
  const Eigen::Index n = g.dim();
  MatrixX<Scalar> prec = llt.solve(MatrixX<Scalar>::Identity(n, n));
  prec = Scalar(0.5) * (prec + prec.transpose()).eval();
  VectorX<Scalar> b = prec * g.mean;
  return GaussianDist<Scalar>::canonical(std::move(b), std::move(prec));
}

/// KL(target || approx) for moment-form Gaussians:
///   1/2 { log|S1|/|S0| - n + tr(S1^-1 S0) + (m1-m0)' S1^-1 (m1-m0) }
/// with target = (m0, S0), approx = (m1, S1).
template <typename Scalar>
Scalar gaussian_kl(const GaussianDist<Scalar>& target, const GaussianDist<Scalar>& approx) {
  if (!target.is_moment() || !approx.is_moment())
    throw std::invalid_argument("gaussian_kl: both arguments must be in moment form");
  if (target.dim() != approx.dim() || target.matrix.rows() != target.dim() ||
      approx.matrix.rows() != approx.dim())
    throw std::invalid_argument("gaussian_kl: dimension mismatch");
  const auto n = static_cast<Scalar>(target.dim());
  const auto llt0 = robust_llt(target.matrix, "gaussian_kl(target)");
  const auto llt1 = robust_llt(approx.matrix, "gaussian_kl(approx)");
  // tr(S1^-1 S0) = ||L1^-1 L0||_F^2
  const MatrixX<Scalar> l0 = llt0.matrixL();
  const MatrixX<Scalar> w = llt1.matrixL().solve(l0);
  const VectorX<Scalar> z = llt1.matrixL().solve(approx.mean - target.mean);
  return Scalar(0.5) * (log_det(llt1) - log_det(llt0) - n + w.squaredNorm() + z.squaredNorm());
}

template <typename Scalar, typename Derived>
Scalar gaussian_logpdf(const GaussianDist<Scalar>& g, const Eigen::MatrixBase<Derived>& x) {
  if (!g.is_moment()) throw std::invalid_argument("gaussian_logpdf: moment form required");
  if (x.size() != g.dim()) throw std::invalid_argument("gaussian_logpdf: dimension mismatch");
  const auto llt = robust_llt(g.matrix, "gaussian_logpdf");
  const VectorX<Scalar> z = llt.matrixL().solve(x - g.mean);
  const auto n = static_cast<Scalar>(g.dim());
  return Scalar(-0.5) * (n * std::log(Scalar(2) * std::numbers::pi_v<Scalar>) + log_det(llt) + z.squaredNorm());
}

/// Scalar normal log-density, used all over the scoring code.
template <typename Scalar>
Scalar normal_logpdf(Scalar x, Scalar mean, Scalar var) {
  const Scalar r = x - mean;
  return Scalar(-0.5) * (std::log(Scalar(2) * std::numbers::pi_v<Scalar> * var) + r * r / var);
}

}  // namespace llgm
