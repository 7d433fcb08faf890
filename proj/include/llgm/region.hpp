#pragma once

#include <vector>

#include <Eigen/Dense>

namespace llgm {

using Coordinates = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// Point-referenced observations: one row per location.
struct ObservationTable {
  Coordinates locations;       // planar coordinates (km)
  Eigen::VectorXd values;      // response, already on the modelling scale
  Eigen::MatrixXd covariates;  // N x q, may have zero columns

  Eigen::Index size() const { return values.size(); }
};

/// One partition cell: the data a local model sees.
struct Region {
  int id = 0;                // 0-based region index
  Eigen::VectorXd y;         // N_r responses
  Eigen::MatrixXd Z;         // N_r x p design, intercept first
  Coordinates locations;     // N_r x 2
  std::vector<int> rows;     // source row of each observation, increasing

  Eigen::Index size() const { return y.size(); }
  Eigen::Index covariate_count() const { return Z.cols(); }
};

/// Euclidean distance matrix between the rows of two coordinate sets.
inline Eigen::MatrixXd pairwise_distances(const Coordinates& a, const Coordinates& b) {
  Eigen::MatrixXd d(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) d(i, j) = (a.row(i) - b.row(j)).norm();
  return d;
}

}  // namespace llgm
