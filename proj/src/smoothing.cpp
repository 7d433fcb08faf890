#include "llgm/smoothing.hpp"

#include <cmath>

#include "llgm/errors.hpp"
#include "llgm/gaussian.hpp"
#include "llgm/spatial.hpp"

namespace llgm::smoothing {

void SmoothingInput::validate(bool need_coords) const {
  if (modes.size() != obs_prec.size()) throw std::invalid_argument("smoothing: modes and obs_prec lengths differ");
  if (modes.size() < 3) throw std::invalid_argument("smoothing: need at least three regions");
  if (!modes.allFinite()) throw std::invalid_argument("smoothing: non-finite mode");
  if (!(obs_prec.array() > 0).all() || !obs_prec.allFinite())
    throw std::invalid_argument("smoothing: observation precisions must be positive");
  if (need_coords && coords.rows() != modes.size())
    throw std::invalid_argument("smoothing: centroid count does not match modes");
}

Eigen::MatrixXd second_difference(int r) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(r - 2, r);
  for (int i = 0; i + 2 < r; ++i) {
    d(i, i) = 1;
    d(i, i + 1) = -2;
    d(i, i + 2) = 1;
  }
  return d;
}

SmoothedHyperField rw2_smooth(const SmoothingInput& input, double tau_u) {
  input.validate(false);
  if (!(tau_u > 0)) throw std::invalid_argument("rw2_smooth: tau_u must be positive");
  const auto r = static_cast<int>(input.modes.size());

  // Orthonormal basis [B | C]: B spans {1, index}, C its complement.
  Eigen::MatrixXd lines(r, 2);
  lines.col(0).setOnes();
  lines.col(1) = Eigen::VectorXd::LinSpaced(r, -1.0, 1.0);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(lines);
  const Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd b = q.leftCols(2);
  const Eigen::MatrixXd c = q.rightCols(r - 2);

  const Eigen::MatrixXd dc = second_difference(r) * c;
  const Eigen::MatrixXd penalty = dc.transpose() * dc;  // positive definite on the complement
  const Eigen::VectorXd& w = input.obs_prec;
  const Eigen::MatrixXd wb = w.asDiagonal() * b;
  const Eigen::MatrixXd wc = w.asDiagonal() * c;

  const Eigen::Matrix2d a_cc = b.transpose() * wb;
  const Eigen::MatrixXd a_cz = b.transpose() * wc;
  const Eigen::MatrixXd a_zz = c.transpose() * wc + tau_u * penalty;
  const Eigen::Vector2d rhs_c = wb.transpose() * input.modes;
  const Eigen::VectorXd rhs_z = wc.transpose() * input.modes;

  const auto llt_cc = robust_llt(Eigen::MatrixXd(a_cc), "rw2_smooth(null space)");
  const Eigen::MatrixXd g = llt_cc.solve(a_cz);  // A_cc^{-1} A_cz
  Eigen::MatrixXd schur = a_zz - a_cz.transpose() * g;
  schur = 0.5 * (schur + schur.transpose()).eval();
  const auto llt_z = robust_llt(schur, "rw2_smooth");

  const Eigen::VectorXd z = llt_z.solve(rhs_z - g.transpose() * rhs_c);
  const Eigen::VectorXd coef = llt_cc.solve(rhs_c - a_cz * z);

  SmoothedHyperField out;
  out.tau_u = tau_u;
  out.post_mean = b * coef + c * z;

  // Block inverse of [[A_cc, A_cz], [A_cz', A_zz]].
  const Eigen::MatrixXd s_zz = llt_z.solve(Eigen::MatrixXd::Identity(r - 2, r - 2));
  const Eigen::MatrixXd s_cz = -g * s_zz;
  const Eigen::MatrixXd s_cc = llt_cc.solve(Eigen::MatrixXd::Identity(2, 2)) + g * s_zz * g.transpose();
  const Eigen::MatrixXd bs = b * s_cc + c * s_cz.transpose();
  const Eigen::MatrixXd cs = b * s_cz + c * s_zz;
  Eigen::VectorXd var(r);
  for (int i = 0; i < r; ++i) var(i) = bs.row(i).dot(b.row(i)) + cs.row(i).dot(c.row(i));
  out.post_sd = var.cwiseMax(0.0).cwiseSqrt();
  return out;
}

SmoothedHyperField spatial_smooth(const SmoothingInput& input, double tau_u_tilde, double range) {
  input.validate(true);
  if (!(tau_u_tilde > 0) || !(range > 0))
    throw std::invalid_argument("spatial_smooth: tau_u_tilde and range must be positive");
  const Eigen::Index r = input.modes.size();
  const Eigen::MatrixXd prior =
      spatial::matern_correlation(pairwise_distances(input.coords, input.coords), range) / tau_u_tilde;
  const Eigen::VectorXd noise = input.obs_prec.cwiseInverse();
  Eigen::MatrixXd k = prior;
  k.diagonal() += noise;
  const auto llt = robust_llt(k, "spatial_smooth");

  SmoothedHyperField out;
  out.tau_u = tau_u_tilde;
  out.post_mean = prior * llt.solve(input.modes);
  // Subtract from whichever of prior / noise is smaller to avoid cancellation.
  Eigen::VectorXd var(r);
  if (noise.mean() < prior.diagonal().mean()) {
    const Eigen::MatrixXd wn = llt.matrixL().solve(Eigen::MatrixXd(noise.asDiagonal()));
    var = noise - wn.colwise().squaredNorm().transpose();
  } else {
    const Eigen::MatrixXd wp = llt.matrixL().solve(prior);
    var = prior.diagonal() - wp.colwise().squaredNorm().transpose();
  }
  out.post_sd = var.cwiseMax(0.0).cwiseSqrt();
  return out;
}

NormalizedModes normalize_modes(const std::vector<Eigen::VectorXd>& modes_by_component) {
  NormalizedModes out;
  for (const auto& v : modes_by_component) {
    if (v.size() < 2) throw std::invalid_argument("normalize_modes: need at least two regions");
    const double mean = v.mean();
    const double sd = std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
    const bool constant = !(sd > 1e-14 * std::max(1.0, std::abs(mean)));
    const double scale = constant ? 1.0 : sd;
    out.values.push_back((v.array() - mean) / scale);
    out.shift.push_back(mean);
    out.scale.push_back(scale);
    out.constant.push_back(constant);
  }
  return out;
}

Eigen::VectorXd denormalize(const NormalizedModes& norm, int k, const Eigen::VectorXd& values) {
  return (values.array() * norm.scale.at(k) + norm.shift.at(k)).matrix();
}

}  // namespace llgm::smoothing
