#pragma once

#include <Eigen/Dense>
#include <vector>

#include "coolish/rng.hpp"

namespace coolish {

struct KMeansResult {
  Eigen::MatrixXd centroids;     // k x dims
  std::vector<int> assignments;  // cluster id per point
  double inertia = 0.0;          // sum of squared distances to assigned centroid
  int iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding over the rows of `points`.
// Stops after max_iter update/assign cycles or when the relative inertia
// change drops below rel_tol. A cluster that empties is re-seeded at the
// point farthest from its previous centroid.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, Rng& rng,
                    int max_iter = 200, double rel_tol = 1e-6);

}  // namespace coolish
