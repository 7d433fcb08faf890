#include "llgm/scoring.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "llgm/errors.hpp"

namespace llgm::scoring {
namespace {

double geometric_mean(const Eigen::Ref<const Eigen::VectorXd>& v, const char* what) {
  if (v.size() == 0) throw std::invalid_argument(std::string(what) + ": empty input");
  double acc = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(v(i) > 0) || !std::isfinite(v(i)))
      throw std::invalid_argument(std::string(what) + ": entries must be positive and finite");
    acc += std::log(v(i));
  }
  return std::exp(acc / static_cast<double>(v.size()));
}

void check_loo(const std::vector<LooPredictive>& loo, std::size_t n_weights, const Eigen::VectorXd& y) {
  if (loo.size() != n_weights) throw std::invalid_argument("cpo: one predictive per theta point required");
  for (const auto& p : loo)
    if (p.mean.size() != y.size() || p.var.size() != y.size())
      throw std::invalid_argument("cpo: predictive length does not match observations");
}

double checked_cpo(double log_cpo, int region, Eigen::Index t) {
  const double v = std::exp(log_cpo);
  if (!std::isfinite(log_cpo) || !(v > 0))
    throw NumericalError("CPO underflow at region " + std::to_string(region + 1) + ", observation " +
                         std::to_string(t + 1));
  return v;
}

}  // namespace

double kl_region(const Gaussian& exact, const Gaussian& approx) {
  if (exact.dim() != approx.dim()) throw std::invalid_argument("kl_region: dimension mismatch");
  return gaussian_kl(to_moment(approx), to_moment(exact));
}

double kl_region(const Gaussian& exact, const refit::MixturePosterior& approx) {
  return kl_region(exact, refit::moment_match(approx));
}

double emlkl(const Eigen::Ref<const Eigen::VectorXd>& kls) { return geometric_mean(kls, "emlkl"); }

double emlcpo(const Eigen::Ref<const Eigen::VectorXd>& cpos) { return geometric_mean(cpos, "emlcpo"); }

double emlcpo(const std::vector<Eigen::VectorXd>& cpos) {
  Eigen::Index n = 0;
  for (const auto& v : cpos) n += v.size();
  Eigen::VectorXd flat(n);
  Eigen::Index at = 0;
  for (const auto& v : cpos) {
    flat.segment(at, v.size()) = v;
    at += v.size();
  }
  return emlcpo(flat);
}

Eigen::VectorXd cpo_reweighted(const Eigen::VectorXd& log_weights, const std::vector<LooPredictive>& loo,
                               const Eigen::VectorXd& y, int region, double prune) {
  check_loo(loo, static_cast<std::size_t>(log_weights.size()), y);
  const double cutoff = log_weights.maxCoeff() - prune;
  Eigen::VectorXd out(y.size());
  std::vector<double> terms;
  for (Eigen::Index t = 0; t < y.size(); ++t) {
    terms.clear();
    for (std::size_t g = 0; g < loo.size(); ++g) {
      const auto gi = static_cast<Eigen::Index>(g);
      if (log_weights(gi) < cutoff) continue;
      terms.push_back(log_weights(gi) - normal_logpdf(y(t), loo[g].mean(t), loo[g].var(t)));
    }
    const Eigen::Map<const Eigen::VectorXd> tv(terms.data(), static_cast<Eigen::Index>(terms.size()));
    out(t) = checked_cpo(-log_sum_exp(tv), region, t);
  }
  return out;
}

Eigen::VectorXd cpo_fixed(const std::vector<double>& weights, const std::vector<LooPredictive>& loo,
                          const Eigen::VectorXd& y, int region) {
  check_loo(loo, weights.size(), y);
  Eigen::VectorXd out(y.size());
  Eigen::VectorXd terms(static_cast<Eigen::Index>(weights.size()));
  for (Eigen::Index t = 0; t < y.size(); ++t) {
    for (std::size_t g = 0; g < loo.size(); ++g)
      terms(static_cast<Eigen::Index>(g)) =
          std::log(weights[g]) + normal_logpdf(y(t), loo[g].mean(t), loo[g].var(t));
    out(t) = checked_cpo(log_sum_exp(terms), region, t);
  }
  return out;
}

void ScoreReport::finalize() {
  emlcpo_value = emlcpo(cpo);
  if (kl_per_region) emlkl_value = emlkl(*kl_per_region);
}

}  // namespace llgm::scoring
