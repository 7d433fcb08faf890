#include "llgm/pipeline/stages.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include <json.hpp>

#include "llgm/ar1.hpp"
#include "llgm/errors.hpp"
#include "llgm/parallel.hpp"
#include "llgm/pipeline/csv.hpp"
#include "llgm/refit.hpp"
#include "llgm/smoothing.hpp"
#include "llgm/spatial.hpp"

namespace llgm::pipeline {
namespace {

constexpr const char* kNoSmooth = "no-smooth";

std::string region_context(const char* stage, int r, const std::exception& e) {
  return std::string(stage) + ", region " + std::to_string(r + 1) + ": " + e.what();
}

/// Matern correlations keyed by range, for repeated evaluations within one region.
class CorrelationCache {
 public:
  explicit CorrelationCache(const Region& region) : region_(region) {}

  const Eigen::MatrixXd& get(double rho) {
    auto it = cache_.find(rho);
    if (it == cache_.end()) it = cache_.emplace(rho, spatial::region_correlation(region_, rho)).first;
    return it->second;
  }

 private:
  const Region& region_;
  std::map<double, Eigen::MatrixXd> cache_;
};

/// Per-region evaluation of the local model at arbitrary theta.
class LocalModel {
 public:
  LocalModel(const Study& study, int r) : study_(study), r_(r) {
    if (study.mode == Mode::spatial) cache_.emplace(study.regions.at(static_cast<std::size_t>(r)));
  }

  LooPredictive loo(const Eigen::VectorXd& theta) {
    if (study_.mode == Mode::ar1) return ar1::loo_predictive(study_.y(r_), ar1::phi_from_theta(theta(0)), study_.tau);
    const auto h = spatial::SpatialHyper::from_vector(Eigen::Vector3d(theta));
    return spatial::loo_predictive(region(), h, study_.spatial.beta_prior_var, cache_->get(h.range()));
  }

  Gaussian conditional(const Eigen::VectorXd& theta) {
    if (study_.mode == Mode::ar1)
      return to_moment(ar1::latent_conditional(study_.y(r_), ar1::phi_from_theta(theta(0)), study_.tau));
    const auto h = spatial::SpatialHyper::from_vector(Eigen::Vector3d(theta));
    return spatial::conditional(region(), h, study_.spatial.beta_prior_var, cache_->get(h.range()));
  }

  const Region& region() const { return study_.regions.at(static_cast<std::size_t>(r_)); }

 private:
  const Study& study_;
  int r_;
  std::optional<CorrelationCache> cache_;
};

refit::MixturePosterior build_mixture(LocalModel& model, const std::vector<Eigen::VectorXd>& thetas,
                                      const std::vector<double>& weights) {
  refit::MixturePosterior post;
  for (std::size_t l = 0; l < thetas.size(); ++l)
    post.components.push_back({weights[l], model.conditional(thetas[l]), thetas[l]});
  return post;
}

/// Signal at each observation: x_t for AR(1), u_i + z_i' beta for spatial.
void signal_moments(const Study& study, const LocalModel& model, const Gaussian& g, Eigen::VectorXd& mean,
                    Eigen::VectorXd& sd) {
  if (study.mode == Mode::ar1) {
    mean = g.mean;
    sd = g.matrix.diagonal().cwiseMax(0.0).cwiseSqrt();
    return;
  }
  const Region& reg = model.region();
  const Eigen::Index n = reg.size();
  Eigen::MatrixXd a(n, g.dim());
  a.leftCols(n).setIdentity();
  a.rightCols(reg.covariate_count()) = reg.Z;
  mean = a * g.mean;
  sd = (a * g.matrix).cwiseProduct(a).rowwise().sum().cwiseMax(0.0).cwiseSqrt();
}

struct ScoreSpec {
  std::string label;
  std::string variant;
  double level = std::numeric_limits<double>::quiet_NaN();
  int level_index = -1;  // into SmoothedTable; -1 for no-smooth
};

struct RegionScore {
  Eigen::VectorXd cpo;
  double kl = std::numeric_limits<double>::quiet_NaN();
  double abs_err = std::numeric_limits<double>::quiet_NaN();
};

double level_from_label(const std::string& s) {
  return s == kNoSmooth ? std::numeric_limits<double>::quiet_NaN() : parse_double(s, "level");
}

double domain_extent(const Coordinates& loc) {
  return (loc.colwise().maxCoeff() - loc.colwise().minCoeff()).maxCoeff();
}

}  // namespace

int Study::region_count() const {
  return static_cast<int>(mode == Mode::ar1 ? series.size() : regions.size());
}

const Eigen::VectorXd& Study::y(int r) const {
  return mode == Mode::ar1 ? series.at(static_cast<std::size_t>(r)) : regions.at(static_cast<std::size_t>(r)).y;
}

Study make_ar1_study(const Ar1Data& data, const Ar1Settings& settings) {
  Study s;
  s.mode = Mode::ar1;
  s.series = data.series;
  s.tau = data.tau;
  s.phi_true = data.phi_true;
  s.prior_precision = settings.prior_precision;
  s.grid = settings.grid;
  return s;
}

Study make_spatial_study(const ObservationTable& raw, const SpatialSettings& settings, std::uint64_t seed) {
  KMeansOptions opt;
  opt.regions = settings.regions;
  opt.seed = derive_seed(seed, 0x4B3EA5);
  opt.restarts = settings.kmeans_restarts;
  return make_spatial_study(raw, settings, kmeans_partition(raw.locations, opt));
}

Study make_spatial_study(const ObservationTable& raw, const SpatialSettings& settings, Partition partition) {
  Study s;
  s.mode = Mode::spatial;
  s.spatial = settings;
  s.partition = std::move(partition);
  const ObservationTable obs = modelling_scale(raw);
  for (int r = 0; r < s.partition.regions(); ++r) s.regions.push_back(region_view(s.partition, r, obs));
  s.smoothing_range = settings.smoothing_range > 0 ? settings.smoothing_range : 0.5 * domain_extent(raw.locations);
  return s;
}

FitResult run_fit(const Study& study, int workers) {
  const int rc = study.region_count();
  const int k = study.components();
  struct Out {
    Eigen::VectorXd mode, mean, sd;
    Eigen::MatrixXd theta;
    Eigen::VectorXd logw;
  };
  auto jobs = parallel_map(static_cast<std::size_t>(rc), workers, [&](std::size_t i) {
    const int r = static_cast<int>(i);
    Out o;
    try {
      if (study.mode == Mode::ar1) {
        const ar1::ThetaPrior prior{0.0, study.prior_precision};
        const HyperPosterior hp = ar1::hyper_posterior(study.y(r), study.tau, prior, study.grid);
        o.mode = Eigen::VectorXd::Constant(1, hp.mode);
        o.mean = Eigen::VectorXd::Constant(1, hp.mean);
        o.sd = Eigen::VectorXd::Constant(1, hp.sd);
        o.theta = hp.grid;
        o.logw = hp.log_weights;
      } else {
        const Region& reg = study.regions.at(i);
        spatial::SpatialPriors priors;
        priors.pc = spatial::default_pc_prior(reg, study.spatial.alpha1, study.spatial.alpha2);
        priors.beta_prior_var = study.spatial.beta_prior_var;
        spatial::FitOptions fo;
        fo.coarse_points = study.spatial.coarse_points;
        fo.points = study.spatial.grid_points;
        const auto post = spatial::fit_hyper_posterior(reg, priors, fo);
        o.mode = post.refined_modes();
        o.sd = post.sds();
        o.mean = Eigen::Vector3d(post.marginals[0].mean, post.marginals[1].mean, post.marginals[2].mean);
        o.theta.resize(post.size(), 3);
        for (Eigen::Index g = 0; g < post.size(); ++g) o.theta.row(g) = post.point(g).as_vector().transpose();
        o.logw = post.log_weights;
      }
    } catch (const NumericalError& e) {
      throw NumericalError(region_context("fit", r, e));
    } catch (const ConfigError& e) {
      throw ConfigError(region_context("fit", r, e));
    }
    return o;
  });

  FitResult fit;
  fit.mode.resize(rc, k);
  fit.mean.resize(rc, k);
  fit.sd.resize(rc, k);
  for (int r = 0; r < rc; ++r) {
    auto& o = jobs[static_cast<std::size_t>(r)];
    fit.mode.row(r) = o.mode.transpose();
    fit.mean.row(r) = o.mean.transpose();
    fit.sd.row(r) = o.sd.transpose();
    fit.grid_theta.push_back(std::move(o.theta));
    fit.grid_log_weight.push_back(std::move(o.logw));
  }
  return fit;
}

SmoothedTable run_smooth(const Study& study, const FitResult& fit, const std::vector<double>& levels, int workers) {
  if (levels.empty()) throw ConfigError("smooth: no smoothing levels");
  const int k = study.components();
  const auto rc = fit.mode.rows();
  std::vector<Eigen::VectorXd> modes;
  for (int c = 0; c < k; ++c) modes.push_back(fit.mode.col(c));
  const bool spatial_mode = study.mode == Mode::spatial;
  const smoothing::NormalizedModes norm = smoothing::normalize_modes(modes);

  auto jobs = parallel_map(levels.size() * static_cast<std::size_t>(k), workers, [&](std::size_t j) {
    const double level = levels[j / static_cast<std::size_t>(k)];
    const int c = static_cast<int>(j % static_cast<std::size_t>(k));
    smoothing::SmoothingInput in;
    const Eigen::VectorXd sd = fit.sd.col(c);
    if (spatial_mode) {
      const double scale = norm.scale[static_cast<std::size_t>(c)];
      in.modes = norm.values[static_cast<std::size_t>(c)];
      in.obs_prec = (scale / sd.array()).square().matrix();
      in.coords = study.partition.centroids;
      auto out = smoothing::spatial_smooth(in, std::exp(level), study.smoothing_range);
      out.post_mean = smoothing::denormalize(norm, c, out.post_mean);
      out.post_sd *= scale;
      return out;
    }
    in.modes = modes[static_cast<std::size_t>(c)];
    in.obs_prec = sd.array().square().inverse().matrix();
    return smoothing::rw2_smooth(in, std::exp(level));
  });

  SmoothedTable t;
  t.levels = levels;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    Eigen::MatrixXd m(rc, k), s(rc, k);
    for (int c = 0; c < k; ++c) {
      const auto& f = jobs[l * static_cast<std::size_t>(k) + static_cast<std::size_t>(c)];
      m.col(c) = f.post_mean;
      s.col(c) = f.post_sd;
    }
    t.mean.push_back(std::move(m));
    t.sd.push_back(std::move(s));
  }
  return t;
}

std::vector<RefitRow> run_refit(const Study& study, const SmoothedTable& smoothed,
                                const std::vector<std::string>& variants, int gh_order, int workers) {
  const int rc = study.region_count();
  const std::size_t per_level = static_cast<std::size_t>(rc);
  const std::size_t n_jobs = variants.size() * smoothed.levels.size() * per_level;
  auto jobs = parallel_map(n_jobs, workers, [&](std::size_t j) {
    const std::size_t v = j / (smoothed.levels.size() * per_level);
    const std::size_t l = (j / per_level) % smoothed.levels.size();
    const int r = static_cast<int>(j % per_level);
    LocalModel model(study, r);
    const Eigen::VectorXd mu = smoothed.mean[l].row(r).transpose();
    const Eigen::VectorXd sigma = smoothed.sd[l].row(r).transpose();
    std::vector<RefitRow> rows;
    try {
      Gaussian g;
      if (variants[v] == "gh") {
        const auto design = refit::gh_design(mu, sigma, gh_order);
        g = refit::moment_match(build_mixture(model, design.thetas, design.weights));
      } else {
        g = model.conditional(mu);
      }
      Eigen::VectorXd mean, sd;
      signal_moments(study, model, g, mean, sd);
      for (Eigen::Index i = 0; i < mean.size(); ++i)
        rows.push_back({variants[v], smoothed.levels[l], r, static_cast<int>(i), mean(i), sd(i)});
    } catch (const NumericalError& e) {
      throw NumericalError(region_context("refit", r, e) + " (level " + format_double(smoothed.levels[l]) + ")");
    }
    return rows;
  });
  std::vector<RefitRow> out;
  for (auto& rows : jobs) out.insert(out.end(), rows.begin(), rows.end());
  return out;
}

std::vector<ScoreRow> run_score(const Study& study, const FitResult& fit, const SmoothedTable& smoothed,
                                const std::vector<std::string>& variants, int gh_order, int workers) {
  std::vector<ScoreSpec> specs{{kNoSmooth, "grid"}, {kNoSmooth, "point-mass"}};
  for (std::size_t l = 0; l < smoothed.levels.size(); ++l)
    for (const auto& v : variants)
      specs.push_back({format_double(smoothed.levels[l]), v, smoothed.levels[l], static_cast<int>(l)});

  const bool known_truth = study.mode == Mode::ar1 && !study.phi_true.empty();
  const int rc = study.region_count();
  const auto per_spec = static_cast<std::size_t>(rc);

  auto jobs = parallel_map(specs.size() * per_spec, workers, [&](std::size_t j) {
    const ScoreSpec& spec = specs[j / per_spec];
    const int r = static_cast<int>(j % per_spec);
    LocalModel model(study, r);
    const Eigen::VectorXd& y = study.y(r);
    RegionScore out;
    try {
      std::optional<Gaussian> exact;
      if (known_truth)
        exact = to_moment(ar1::latent_conditional(y, study.phi_true[static_cast<std::size_t>(r)], study.tau));

      Eigen::VectorXd point = fit.mode.row(r).transpose();
      if (spec.level_index >= 0) point = smoothed.mean[static_cast<std::size_t>(spec.level_index)].row(r).transpose();

      if (spec.variant == "grid") {
        const Eigen::MatrixXd& th = fit.grid_theta[static_cast<std::size_t>(r)];
        const Eigen::VectorXd& lw = fit.grid_log_weight[static_cast<std::size_t>(r)];
        std::vector<LooPredictive> loo;
        std::vector<Eigen::VectorXd> thetas;
        std::vector<double> weights;
        for (Eigen::Index g = 0; g < th.rows(); ++g) {
          thetas.emplace_back(th.row(g).transpose());
          loo.push_back(model.loo(thetas.back()));
          weights.push_back(std::exp(lw(g)));
        }
        out.cpo = scoring::cpo_reweighted(lw, loo, y, r);
        if (exact) {
          const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
          for (double& w : weights) w /= total;
          out.kl = scoring::kl_region(*exact, build_mixture(model, thetas, weights));
        }
      } else if (spec.variant == "gh") {
        const Eigen::VectorXd sigma = smoothed.sd[static_cast<std::size_t>(spec.level_index)].row(r).transpose();
        const auto design = refit::gh_design(point, sigma, gh_order);
        std::vector<LooPredictive> loo;
        for (const auto& th : design.thetas) loo.push_back(model.loo(th));
        out.cpo = scoring::cpo_fixed(design.weights, loo, y, r);
        if (exact) out.kl = scoring::kl_region(*exact, build_mixture(model, design.thetas, design.weights));
      } else {
        out.cpo = scoring::cpo_fixed({1.0}, {model.loo(point)}, y, r);
        if (exact) out.kl = scoring::kl_region(*exact, model.conditional(point));
      }
      if (known_truth)
        out.abs_err = std::abs(ar1::phi_from_theta(point(0)) - study.phi_true[static_cast<std::size_t>(r)]);
    } catch (const NumericalError& e) {
      throw NumericalError(region_context("score", r, e) + " (level " + spec.label + ")");
    }
    return out;
  });

  std::vector<ScoreRow> rows;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    ScoreRow row;
    row.report.label = specs[s].label;
    row.report.variant = specs[s].variant;
    row.report.smoothing_level = specs[s].level;
    Eigen::VectorXd kl(rc);
    double mae = 0;
    for (int r = 0; r < rc; ++r) {
      auto& js = jobs[s * per_spec + static_cast<std::size_t>(r)];
      row.report.cpo.push_back(std::move(js.cpo));
      kl(r) = js.kl;
      mae += js.abs_err;
    }
    if (known_truth) {
      // A KL of exactly zero (approximation equal to the truth) is floored so
      // the geometric mean stays defined.
      row.report.kl_per_region = kl.cwiseMax(std::numeric_limits<double>::min());
      row.phi_mae = mae / rc;
    }
    row.report.finalize();
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_fit(const std::filesystem::path& dir, const Study& study, const FitResult& fit) {
  const int k = study.components();
  CsvTable summary{{"region", "component", "mode", "mean", "sd"}, {}};
  for (Eigen::Index r = 0; r < fit.mode.rows(); ++r)
    for (int c = 0; c < k; ++c)
      summary.rows.push_back({std::to_string(r + 1), std::to_string(c + 1), format_double(fit.mode(r, c)),
                              format_double(fit.mean(r, c)), format_double(fit.sd(r, c))});
  write_csv(dir / "fit_summary.csv", summary);

  CsvTable grid{{"region", "log_weight"}, {}};
  for (int c = 0; c < k; ++c) grid.header.push_back("theta" + std::to_string(c + 1));
  for (std::size_t r = 0; r < fit.grid_theta.size(); ++r)
    for (Eigen::Index g = 0; g < fit.grid_theta[r].rows(); ++g) {
      std::vector<std::string> row{std::to_string(r + 1), format_double(fit.grid_log_weight[r](g))};
      for (int c = 0; c < k; ++c) row.push_back(format_double(fit.grid_theta[r](g, c)));
      grid.rows.push_back(std::move(row));
    }
  write_csv(dir / "fit_grid.csv", grid);
}

FitResult read_fit(const std::filesystem::path& dir, const Study& study) {
  const int k = study.components();
  const int rc = study.region_count();
  const CsvTable summary = read_csv(dir / "fit_summary.csv");
  const std::size_t cr = summary.column("region"), cc = summary.column("component"), cm = summary.column("mode"),
                    cmean = summary.column("mean"), csd = summary.column("sd");
  if (summary.rows.size() != static_cast<std::size_t>(rc * k))
    throw ConfigError("fit_summary.csv: expected " + std::to_string(rc * k) + " rows");
  FitResult fit;
  fit.mode.resize(rc, k);
  fit.mean.resize(rc, k);
  fit.sd.resize(rc, k);
  for (std::size_t i = 0; i < summary.rows.size(); ++i) {
    const long long r = summary.integer(i, cr) - 1, c = summary.integer(i, cc) - 1;
    if (r < 0 || r >= rc || c < 0 || c >= k) throw ConfigError("fit_summary.csv: region/component out of range");
    fit.mode(r, c) = summary.number(i, cm);
    fit.mean(r, c) = summary.number(i, cmean);
    fit.sd(r, c) = summary.number(i, csd);
    if (!(fit.sd(r, c) > 0)) throw ConfigError("fit_summary.csv: sd must be positive");
  }

  const CsvTable grid = read_csv(dir / "fit_grid.csv");
  const std::size_t gr = grid.column("region"), gw = grid.column("log_weight");
  std::vector<std::size_t> tc;
  for (int c = 0; c < k; ++c) tc.push_back(grid.column("theta" + std::to_string(c + 1)));
  std::vector<std::vector<std::size_t>> by_region(static_cast<std::size_t>(rc));
  for (std::size_t i = 0; i < grid.rows.size(); ++i) {
    const long long r = grid.integer(i, gr) - 1;
    if (r < 0 || r >= rc) throw ConfigError("fit_grid.csv: region out of range");
    by_region[static_cast<std::size_t>(r)].push_back(i);
  }
  for (int r = 0; r < rc; ++r) {
    const auto& idx = by_region[static_cast<std::size_t>(r)];
    if (idx.empty()) throw ConfigError("fit_grid.csv: no grid points for region " + std::to_string(r + 1));
    Eigen::MatrixXd th(static_cast<Eigen::Index>(idx.size()), k);
    Eigen::VectorXd lw(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) {
      lw(static_cast<Eigen::Index>(j)) = grid.number(idx[j], gw);
      for (int c = 0; c < k; ++c) th(static_cast<Eigen::Index>(j), c) = grid.number(idx[j], tc[static_cast<std::size_t>(c)]);
    }
    fit.grid_theta.push_back(std::move(th));
    fit.grid_log_weight.push_back(std::move(lw));
  }
  return fit;
}

void write_partition(const std::filesystem::path& dir, const Partition& partition) {
  CsvTable rows{{"row", "region"}, {}};
  for (std::size_t i = 0; i < partition.assignments.size(); ++i)
    rows.rows.push_back({std::to_string(i + 1), std::to_string(partition.assignments[i] + 1)});
  write_csv(dir / "partition.csv", rows);
  CsvTable cents{{"region", "x", "y"}, {}};
  for (Eigen::Index r = 0; r < partition.centroids.rows(); ++r)
    cents.rows.push_back(
        {std::to_string(r + 1), format_double(partition.centroids(r, 0)), format_double(partition.centroids(r, 1))});
  write_csv(dir / "centroids.csv", cents);
}

Partition read_partition(const std::filesystem::path& dir, const Coordinates& locations) {
  const CsvTable rows = read_csv(dir / "partition.csv");
  const CsvTable cents = read_csv(dir / "centroids.csv");
  if (rows.rows.size() != static_cast<std::size_t>(locations.rows()))
    throw ConfigError("partition.csv: row count does not match the data");
  Partition p;
  const auto rc = static_cast<Eigen::Index>(cents.rows.size());
  p.centroids.resize(rc, 2);
  const std::size_t cr = cents.column("region"), cx = cents.column("x"), cy = cents.column("y");
  for (std::size_t i = 0; i < cents.rows.size(); ++i) {
    const long long r = cents.integer(i, cr) - 1;
    if (r != static_cast<long long>(i)) throw ConfigError("centroids.csv: regions must be listed in order");
    p.centroids(static_cast<Eigen::Index>(i), 0) = cents.number(i, cx);
    p.centroids(static_cast<Eigen::Index>(i), 1) = cents.number(i, cy);
  }
  p.region_sizes.assign(static_cast<std::size_t>(rc), 0);
  const std::size_t ar = rows.column("region");
  for (std::size_t i = 0; i < rows.rows.size(); ++i) {
    const long long r = rows.integer(i, ar) - 1;
    if (r < 0 || r >= rc) throw ConfigError("partition.csv: region out of range");
    p.assignments.push_back(static_cast<int>(r));
    ++p.region_sizes[static_cast<std::size_t>(r)];
  }
  p.wcss_trace.push_back(within_cluster_ss(locations, p));
  return p;
}

void write_smoothed(const std::filesystem::path& dir, const SmoothedTable& t) {
  CsvTable out{{"level", "region", "component", "mean", "sd"}, {}};
  for (std::size_t l = 0; l < t.levels.size(); ++l)
    for (Eigen::Index r = 0; r < t.mean[l].rows(); ++r)
      for (Eigen::Index c = 0; c < t.mean[l].cols(); ++c)
        out.rows.push_back({format_double(t.levels[l]), std::to_string(r + 1), std::to_string(c + 1),
                            format_double(t.mean[l](r, c)), format_double(t.sd[l](r, c))});
  write_csv(dir / "smoothed.csv", out);
}

SmoothedTable read_smoothed(const std::filesystem::path& dir, int regions, int components) {
  const CsvTable in = read_csv(dir / "smoothed.csv");
  const std::size_t cl = in.column("level"), cr = in.column("region"), cc = in.column("component"),
                    cm = in.column("mean"), cs = in.column("sd");
  SmoothedTable t;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < in.rows.size(); ++i) {
    const std::string& key = in.rows[i][cl];
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, t.levels.size()).first;
      t.levels.push_back(in.number(i, cl));
      t.mean.push_back(Eigen::MatrixXd::Constant(regions, components, std::nan("")));
      t.sd.push_back(Eigen::MatrixXd::Constant(regions, components, std::nan("")));
    }
    const long long r = in.integer(i, cr) - 1, c = in.integer(i, cc) - 1;
    if (r < 0 || r >= regions || c < 0 || c >= components)
      throw ConfigError("smoothed.csv: region/component out of range");
    t.mean[it->second](r, c) = in.number(i, cm);
    t.sd[it->second](r, c) = in.number(i, cs);
  }
  if (t.levels.empty()) throw ConfigError("smoothed.csv: no rows");
  for (std::size_t l = 0; l < t.levels.size(); ++l)
    if (!t.mean[l].allFinite() || !t.sd[l].allFinite())
      throw ConfigError("smoothed.csv: incomplete level " + format_double(t.levels[l]));
  return t;
}

void write_refit(const std::filesystem::path& dir, const std::vector<RefitRow>& rows,
                 const std::vector<std::string>& variants, int gh_order, const std::vector<double>& levels) {
  CsvTable out{{"variant", "level", "region", "index", "mean", "sd"}, {}};
  for (const auto& r : rows)
    out.rows.push_back({r.variant, format_double(r.level), std::to_string(r.region + 1), std::to_string(r.index + 1),
                        format_double(r.mean), format_double(r.sd)});
  write_csv(dir / "refit.csv", out);

  nlohmann::ordered_json m;
  m["stage"] = "refit";
  m["theta_source"] = "smoothed.csv";
  m["reads_fit_outputs"] = false;
  m["uses_hyperparameter_prior"] = false;
  m["variants"] = variants;
  m["gh_order"] = gh_order;
  m["levels"] = levels;
  std::ofstream f(dir / "refit_manifest.json");
  if (!f) throw std::runtime_error("cannot write " + (dir / "refit_manifest.json").string());
  f << m.dump(2) << '\n';
}

void write_scores(const std::filesystem::path& dir, const std::vector<ScoreRow>& rows) {
  CsvTable scores{{"level", "variant", "emlcpo", "emlkl", "phi_mae"}, {}};
  CsvTable kl{{"level", "variant", "region", "kl"}, {}};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& row : rows) {
    const auto& rep = row.report;
    scores.rows.push_back({rep.label, rep.variant, format_double(rep.emlcpo_value),
                           format_double(rep.emlkl_value.value_or(nan)), format_double(row.phi_mae.value_or(nan))});
    if (rep.kl_per_region)
      for (Eigen::Index r = 0; r < rep.kl_per_region->size(); ++r)
        kl.rows.push_back({rep.label, rep.variant, std::to_string(r + 1), format_double((*rep.kl_per_region)(r))});
  }
  write_csv(dir / "scores.csv", scores);
  if (!kl.rows.empty()) write_csv(dir / "kl_per_region.csv", kl);
}

std::vector<ScoreRow> read_scores(const std::filesystem::path& dir) {
  const CsvTable t = read_csv(dir / "scores.csv");
  const std::size_t cl = t.column("level"), cv = t.column("variant"), cc = t.column("emlcpo"),
                    ck = t.column("emlkl"), cm = t.column("phi_mae");
  std::vector<ScoreRow> rows;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    ScoreRow row;
    row.report.label = t.rows[i][cl];
    row.report.variant = t.rows[i][cv];
    row.report.smoothing_level = level_from_label(row.report.label);
    row.report.emlcpo_value = t.number(i, cc);
    if (const double v = t.number(i, ck); !std::isnan(v)) row.report.emlkl_value = v;
    if (const double v = t.number(i, cm); !std::isnan(v)) row.phi_mae = v;
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_ar1_truth(const std::filesystem::path& dir, const Ar1Data& data) {
  CsvTable t{{"region", "phi", "tau"}, {}};
  for (std::size_t r = 0; r < data.phi_true.size(); ++r)
    t.rows.push_back({std::to_string(r + 1), format_double(data.phi_true[r]), format_double(data.tau)});
  write_csv(dir / "truth.csv", t);
}

void read_ar1_truth(const std::filesystem::path& dir, std::vector<double>& phi_true, double& tau) {
  phi_true.clear();
  if (!std::filesystem::exists(dir / "truth.csv")) return;
  const CsvTable t = read_csv(dir / "truth.csv");
  const std::size_t cr = t.column("region"), cp = t.column("phi"), ct = t.column("tau");
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (t.integer(i, cr) != static_cast<long long>(i) + 1) throw ConfigError("truth.csv: regions out of order");
    phi_true.push_back(t.number(i, cp));
    tau = t.number(i, ct);
  }
}

void write_spatial_truth(const std::filesystem::path& dir, const SpatialData& data) {
  CsvTable t{{"x", "y", "range", "field_sd", "field"}, {}};
  for (Eigen::Index i = 0; i < data.obs.size(); ++i)
    t.rows.push_back({format_double(data.obs.locations(i, 0)), format_double(data.obs.locations(i, 1)),
                      format_double(data.true_range(i)), format_double(data.true_field_sd(i)),
                      format_double(data.field(i))});
  write_csv(dir / "truth.csv", t);
}

}  // namespace llgm::pipeline
