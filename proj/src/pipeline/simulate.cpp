#include "llgm/pipeline/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "llgm/ar1.hpp"

namespace llgm::pipeline {
namespace {

constexpr double kPi = std::numbers::pi;

/// Unit-variance stationary Matern(nu = 1) draw by random Fourier features.
/// Spectral density of nu = 1 in 2-D is a bivariate t with 2 degrees of
/// freedom scaled by kappa: omega = kappa z / sqrt(g), g ~ chi^2_2.
Eigen::VectorXd matern_rff(const Coordinates& s, double rho, int features, std::mt19937_64& rng) {
  const double kappa = std::sqrt(8.0) / rho;
  std::normal_distribution<double> normal;
  std::chi_squared_distribution<double> chi2(2.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(s.rows());
  for (int m = 0; m < features; ++m) {
    const double g = chi2(rng);
    const double wx = kappa * normal(rng) / std::sqrt(g);
    const double wy = kappa * normal(rng) / std::sqrt(g);
    const double b = phase(rng);
    f.array() += ((wx * s.col(0).array() + wy * s.col(1).array()) + b).cos();
  }
  return f * std::sqrt(2.0 / features);
}

Eigen::VectorXd standardize(Eigen::VectorXd v) {
  const double m = v.mean();
  const double sd = std::sqrt((v.array() - m).square().sum() / static_cast<double>(v.size() - 1));
  return ((v.array() - m) / (sd > 0 ? sd : 1.0)).matrix();
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over a combined state
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + (stream + 1) * 0xD1B54A32D192ED03ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double phi_schedule(const Ar1Settings& s, int r) {
  const double x = std::sin(kPi * s.phi_periods * static_cast<double>(r + 1) / s.regions);
  return s.phi_offset + s.phi_amplitude * x * x;
}

Ar1Data simulate_ar1(const Ar1Settings& s, std::uint64_t seed) {
  Ar1Data d;
  d.tau = s.tau;
  for (int r = 0; r < s.regions; ++r) {
    const double phi = phi_schedule(s, r);
    d.phi_true.push_back(phi);
    d.series.push_back(ar1::simulate({phi, s.tau, s.length}, derive_seed(seed, static_cast<std::uint64_t>(r))).y);
  }
  return d;
}

SpatialData simulate_spatial(const SpatialSettings& s, std::uint64_t seed) {
  const double aspect = 1.3;
  const int n = s.points;
  const int my = static_cast<int>(std::ceil(std::sqrt(2.0 * n))) + 2;
  const int mx = static_cast<int>(std::ceil(aspect * my));
  const double cx = 0.5 * (mx - 1), cy = 0.5 * (my - 1);

  std::vector<int> order(static_cast<std::size_t>(mx * my));
  std::iota(order.begin(), order.end(), 0);
  auto metric = [&](int k) {
    const double dx = (k % mx - cx) / aspect, dy = k / mx - cy;
    return dx * dx + dy * dy;
  };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return metric(a) < metric(b); });
  order.resize(static_cast<std::size_t>(n));
  std::sort(order.begin(), order.end());

  SpatialData d;
  Coordinates& loc = d.obs.locations;
  loc.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    const int k = order[static_cast<std::size_t>(i)];
    loc(i, 0) = s.spacing * (k % mx);
    loc(i, 1) = s.spacing * (k / mx);
  }
  const Eigen::Vector2d lo = loc.colwise().minCoeff().transpose();
  const Eigen::Vector2d hi = loc.colwise().maxCoeff().transpose();
  const Eigen::Vector2d width = hi - lo;
  const double extent = width.maxCoeff();
  const Eigen::ArrayXd ux = (loc.col(0).array() - lo(0)) / width(0);
  const Eigen::ArrayXd uy = (loc.col(1).array() - lo(1)) / width(1);

  // Smooth truth surfaces over the unit box.
  const double base_range = 0.08 * extent * s.range_scale;
  d.true_range = (std::log(base_range) + 0.6 * (2 * kPi * ux).sin() * (kPi * uy).cos()).exp().matrix();
  d.true_field_sd = (s.field_sd * (0.35 * (kPi * ux + 2 * kPi * uy).cos()).exp()).matrix();

  // Bank of stationary fields blended by local range.
  std::mt19937_64 rng(derive_seed(seed, 0xF1E1D));
  const double lr_min = std::log(d.true_range.minCoeff()), lr_max = std::log(d.true_range.maxCoeff());
  const int bank = 7;
  const double step = std::max((lr_max - lr_min) / (bank - 1), 1e-9);
  std::vector<Eigen::VectorXd> fields;
  for (int j = 0; j < bank; ++j) fields.push_back(matern_rff(loc, std::exp(lr_min + step * j), 400, rng));
  d.field.resize(n);
  for (int i = 0; i < n; ++i) {
    const double pos = std::clamp((std::log(d.true_range(i)) - lr_min) / step, 0.0, bank - 1.0);
    const int j = std::min(static_cast<int>(pos), bank - 2);
    const double frac = pos - j;
    const double f = std::cos(0.5 * kPi * frac) * fields[static_cast<std::size_t>(j)](i) +
                     std::sin(0.5 * kPi * frac) * fields[static_cast<std::size_t>(j + 1)](i);
    d.field(i) = d.true_field_sd(i) * f;
  }

  // Covariates: a terrain-like surface and distance from the southern edge.
  d.obs.covariates.resize(n, 2);
  d.obs.covariates.col(0) =
      standardize(((2.1 * kPi * ux + 0.3).sin() * (1.3 * kPi * uy).cos() + 0.5 * ux).matrix());
  d.obs.covariates.col(1) = standardize((loc.col(1).array() - lo(1)).matrix());

  std::normal_distribution<double> normal;
  std::mt19937_64 noise_rng(derive_seed(seed, 0x0015E));
  d.obs.values.resize(n);
  for (int i = 0; i < n; ++i) {
    const double v = 2.0 + 0.25 * d.obs.covariates(i, 0) - 0.15 * d.obs.covariates(i, 1) + d.field(i) +
                     s.nugget_sd * normal(noise_rng);
    d.obs.values(i) = std::max(v, 0.0) * std::max(v, 0.0);
  }
  return d;
}

ObservationTable modelling_scale(const ObservationTable& obs) {
  ObservationTable out = obs;
  out.values = obs.values.cwiseMax(0.0).cwiseSqrt();
  return out;
}

}  // namespace llgm::pipeline
