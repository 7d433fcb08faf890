#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "llgm/gaussian.hpp"
#include "llgm/hyper_grid.hpp"
#include "llgm/refit.hpp"

namespace llgm::scoring {

/// KL(approx || exact): integrand approx * log(approx / exact).
double kl_region(const Gaussian& exact, const Gaussian& approx);
/// Mixtures are moment-matched to a single Gaussian first.
double kl_region(const Gaussian& exact, const refit::MixturePosterior& approx);

/// Geometric mean exp(mean(log v)). Throws on a nonpositive entry.
double emlkl(const Eigen::Ref<const Eigen::VectorXd>& kls);
double emlcpo(const Eigen::Ref<const Eigen::VectorXd>& cpos);
/// Over every entry of a ragged region-by-observation table.
double emlcpo(const std::vector<Eigen::VectorXd>& cpos);

/// CPO under a grid posterior with normalized log masses `log_weights`,
/// reweighted to pi(theta | y_{-t}):
///   CPO(t) = 1 / sum_theta w(theta) / N(y_t; m_{-t}(theta), v_{-t}(theta)).
/// Points with log weight more than `prune` below the maximum are skipped;
/// the default keeps every point.
/// Throws NumericalError naming (region, t) if a CPO underflows.
Eigen::VectorXd cpo_reweighted(const Eigen::VectorXd& log_weights, const std::vector<LooPredictive>& loo,
                               const Eigen::VectorXd& y, int region = 0,
                               double prune = std::numeric_limits<double>::infinity());

/// CPO with theta-weights held fixed:
///   CPO(t) = sum_theta w(theta) N(y_t; m_{-t}(theta), v_{-t}(theta)).
Eigen::VectorXd cpo_fixed(const std::vector<double>& weights, const std::vector<LooPredictive>& loo,
                          const Eigen::VectorXd& y, int region = 0);

/// One row of a score table.
struct ScoreReport {
  std::string label;                // "no-smooth" or the smoothing level
  std::string variant;              // "point-mass", "gh" or "grid"
  double smoothing_level = 0;       // log tau_u; NaN for no-smooth
  std::optional<Eigen::VectorXd> kl_per_region;
  std::vector<Eigen::VectorXd> cpo;  // per region, one entry per observation
  std::optional<double> emlkl_value;
  double emlcpo_value = 0;

  /// Fills the aggregate fields from kl_per_region and cpo.
  void finalize();
};

}  // namespace llgm::scoring
