#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "llgm/gaussian.hpp"

namespace llgm {

/// Nodes and weights for  int e^{-x^2} f(x) dx ~= sum_l f(x_l) w_l.
template <typename Scalar>
struct GaussHermiteRule {
  VectorX<Scalar> nodes;    // strictly increasing, symmetric about 0
  VectorX<Scalar> weights;  // positive, sum to sqrt(pi)

  int order() const { return static_cast<int>(nodes.size()); }
};

inline constexpr int kMaxGaussHermiteOrder = 64;

/// Golub-Welsch: nodes are the eigenvalues of the symmetric Jacobi matrix of
/// the Hermite recurrence (off-diagonal sqrt(k/2)). Each node is polished by
/// Newton steps on the orthonormal Hermite polynomial, and weights come from
/// the Christoffel function 1 / sum_k p_k(x)^2, which is positive by
/// construction even where eigenvector entries would underflow.
template <typename Scalar = double>
GaussHermiteRule<Scalar> gauss_hermite_rule(int order) {
  if (order < 1 || order > kMaxGaussHermiteOrder)
    throw std::out_of_range("gauss_hermite_rule: order must be in [1, 64]");
  const int n = order;
  MatrixX<Scalar> jacobi = MatrixX<Scalar>::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const Scalar off = std::sqrt(Scalar(k) / Scalar(2));
    jacobi(k, k - 1) = off;
    jacobi(k - 1, k) = off;
  }
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(jacobi, Eigen::EigenvaluesOnly);
  VectorX<Scalar> x = eig.eigenvalues();

  const Scalar p0 = std::pow(std::numbers::pi_v<Scalar>, Scalar(-0.25));
  // Orthonormal recurrence; returns p_n(x), p_{n-1}(x) and sum_{k<n} p_k(x)^2.
  auto evaluate = [&](Scalar t, Scalar& pn, Scalar& pn1, Scalar& sumsq) {
    Scalar prev = 0;
    Scalar cur = p0;
    sumsq = 0;
    for (int k = 0; k < n; ++k) {
      sumsq += cur * cur;
      const Scalar next =
          t * std::sqrt(Scalar(2) / Scalar(k + 1)) * cur - std::sqrt(Scalar(k) / Scalar(k + 1)) * prev;
      prev = cur;
      cur = next;
    }
    pn = cur;
    pn1 = prev;
  };

  VectorX<Scalar> w(n);
  for (int i = 0; i < n; ++i) {
    Scalar pn, pn1, sumsq;
    for (int it = 0; it < 3; ++it) {
      evaluate(x(i), pn, pn1, sumsq);
      // p_n' = sqrt(2n) p_{n-1} for the orthonormal family.
      const Scalar dp = std::sqrt(Scalar(2 * n)) * pn1;
      if (dp == Scalar(0)) break;
      x(i) -= pn / dp;
    }
    evaluate(x(i), pn, pn1, sumsq);
    w(i) = Scalar(1) / sumsq;
  }

  // Enforce exact symmetry.
  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    const Scalar xs = Scalar(0.5) * (x(j) - x(i));
    const Scalar ws = Scalar(0.5) * (w(i) + w(j));
    x(i) = -xs;
    x(j) = xs;
    w(i) = ws;
    w(j) = ws;
  }
  if (n % 2 == 1) x(n / 2) = 0;
  return {std::move(x), std::move(w)};
}

}  // namespace llgm
