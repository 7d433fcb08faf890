#pragma once

#include <cstdint>
#include <vector>

#include "llgm/region.hpp"

namespace llgm {

/// Disjoint k-means partition of a set of locations.
struct Partition {
  std::vector<int> assignments;  // 0-based region per location
  Eigen::MatrixX2d centroids;    // R x 2, mean of members
  std::vector<int> region_sizes;
  std::vector<double> wcss_trace;  // within-cluster sum of squares after each Lloyd update

  int regions() const { return static_cast<int>(centroids.rows()); }
  double wcss() const { return wcss_trace.empty() ? 0.0 : wcss_trace.back(); }
};

struct KMeansOptions {
  int regions = 1;
  std::uint64_t seed = 0;
  int max_iter = 300;
  int restarts = 1;
};

/// Lloyd's algorithm with k-means++ seeding. Nearest-centroid ties go to the
/// lowest region index; a cluster that empties is reseeded at the point
/// farthest from its own centroid. With restarts > 1 the run with the
/// smallest final WCSS wins. Throws ConfigError when the input is empty or
/// has fewer distinct locations than requested regions.
Partition kmeans_partition(const Coordinates& locations, const KMeansOptions& options);

inline Partition kmeans_partition(const Coordinates& locations, int regions, std::uint64_t seed,
                                  int max_iter) {
  return kmeans_partition(locations, KMeansOptions{regions, seed, max_iter, 1});
}

double within_cluster_ss(const Coordinates& locations, const Partition& partition);

/// Observations of region r (0-based) in input order, with an intercept
/// column prepended to the covariates.
Region region_view(const Partition& partition, int r, const ObservationTable& data);

}  // namespace llgm
