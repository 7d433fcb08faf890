#include "llgm/partition.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <set>
#include <utility>

#include "llgm/errors.hpp"

namespace llgm {
namespace {

std::size_t distinct_count(const Coordinates& locations) {
  std::set<std::pair<double, double>> seen;
  for (Eigen::Index i = 0; i < locations.rows(); ++i) seen.emplace(locations(i, 0), locations(i, 1));
  return seen.size();
}

double squared_distance(const Coordinates& locations, Eigen::Index i, const Eigen::MatrixX2d& centroids,
                        Eigen::Index c) {
  const double dx = locations(i, 0) - centroids(c, 0);
  const double dy = locations(i, 1) - centroids(c, 1);
  return dx * dx + dy * dy;
}

Eigen::MatrixX2d kmeanspp_seed(const Coordinates& locations, int k, std::mt19937_64& rng) {
  const Eigen::Index n = locations.rows();
  Eigen::MatrixX2d centers(k, 2);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centers.row(0) = locations.row(pick(rng));
  Eigen::VectorXd d2(n);
  for (Eigen::Index i = 0; i < n; ++i) d2(i) = squared_distance(locations, i, centers, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index chosen = 0;
    if (total > 0) {
      const double target = unif(rng) * total;
      double acc = 0;
      chosen = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (acc > target && d2(i) > 0) {
          chosen = i;
          break;
        }
      }
      if (chosen < 0) {
        // Rounding left target beyond the running sum; take the last candidate.
        for (Eigen::Index i = n - 1; i >= 0; --i)
          if (d2(i) > 0) {
            chosen = i;
            break;
          }
      }
    }
    centers.row(c) = locations.row(chosen);
    for (Eigen::Index i = 0; i < n; ++i) d2(i) = std::min(d2(i), squared_distance(locations, i, centers, c));
  }
  return centers;
}

Partition lloyd(const Coordinates& locations, int k, int max_iter, std::mt19937_64& rng) {
  const Eigen::Index n = locations.rows();
  Partition p;
  p.centroids = kmeanspp_seed(locations, k, rng);
  p.assignments.assign(n, -1);
  std::vector<int> sizes(k, 0);

  auto update_centroids = [&] {
    Eigen::MatrixX2d sum = Eigen::MatrixX2d::Zero(k, 2);
    std::fill(sizes.begin(), sizes.end(), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sum.row(p.assignments[i]) += locations.row(i);
      ++sizes[p.assignments[i]];
    }
    for (int c = 0; c < k; ++c)
      if (sizes[c] > 0) p.centroids.row(c) = sum.row(c) / sizes[c];
  };

  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = squared_distance(locations, i, p.centroids, 0);
      for (int c = 1; c < k; ++c) {
        const double d = squared_distance(locations, i, p.centroids, c);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (p.assignments[i] != best) {
        p.assignments[i] = best;
        changed = true;
      }
    }

    std::fill(sizes.begin(), sizes.end(), 0);
    for (Eigen::Index i = 0; i < n; ++i) ++sizes[p.assignments[i]];
    for (int c = 0; c < k; ++c) {
      if (sizes[c] > 0) continue;
      Eigen::Index far = -1;
      double far_d = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (sizes[p.assignments[i]] < 2) continue;
        const double d = squared_distance(locations, i, p.centroids, p.assignments[i]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      --sizes[p.assignments[far]];
      p.assignments[far] = c;
      sizes[c] = 1;
      p.centroids.row(c) = locations.row(far);
      changed = true;
    }

    update_centroids();
    p.wcss_trace.push_back(within_cluster_ss(locations, p));
    if (!changed) break;
  }
  p.region_sizes = sizes;
  return p;
}

}  // namespace

double within_cluster_ss(const Coordinates& locations, const Partition& partition) {
  double s = 0;
  for (Eigen::Index i = 0; i < locations.rows(); ++i)
    s += squared_distance(locations, i, partition.centroids, partition.assignments[i]);
  return s;
}

Partition kmeans_partition(const Coordinates& locations, const KMeansOptions& options) {
  if (locations.rows() == 0) throw ConfigError("kmeans_partition: no locations");
  if (!locations.allFinite()) throw ConfigError("kmeans_partition: non-finite coordinates");
  if (options.regions < 1) throw ConfigError("kmeans_partition: region count must be positive");
  if (options.max_iter < 1) throw ConfigError("kmeans_partition: max_iter must be positive");
  if (static_cast<std::size_t>(options.regions) > distinct_count(locations))
    throw ConfigError("kmeans_partition: more regions than distinct locations");

  Partition best;
  double best_wcss = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < std::max(1, options.restarts); ++restart) {
    std::seed_seq seq{options.seed, static_cast<std::uint64_t>(restart)};
    std::mt19937_64 rng(seq);
    Partition p = lloyd(locations, options.regions, options.max_iter, rng);
    if (p.wcss() < best_wcss) {
      best_wcss = p.wcss();
      best = std::move(p);
    }
  }
  return best;
}

Region region_view(const Partition& partition, int r, const ObservationTable& data) {
  if (r < 0 || r >= partition.regions()) throw std::out_of_range("region_view: region index out of range");
  if (static_cast<Eigen::Index>(partition.assignments.size()) != data.size())
    throw ConfigError("region_view: partition and data sizes differ");
  Region region;
  region.id = r;
  for (Eigen::Index i = 0; i < data.size(); ++i)
    if (partition.assignments[i] == r) region.rows.push_back(static_cast<int>(i));
  const auto m = static_cast<Eigen::Index>(region.rows.size());
  const Eigen::Index q = data.covariates.cols();
  region.y.resize(m);
  region.Z.resize(m, q + 1);
  region.locations.resize(m, 2);
  for (Eigen::Index j = 0; j < m; ++j) {
    const int i = region.rows[j];
    region.y(j) = data.values(i);
    region.Z(j, 0) = 1.0;
    if (q > 0) region.Z.row(j).tail(q) = data.covariates.row(i);
    region.locations.row(j) = data.locations.row(i);
  }
  return region;
}

}  // namespace llgm
