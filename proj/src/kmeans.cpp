#include "coolish/kmeans.hpp"

#include <cmath>
#include <limits>

#include "coolish/errors.hpp"

namespace coolish {

namespace {

// Squared distances of every point to every centroid via the expansion
// ||p - c||^2 = ||p||^2 - 2 p.c + ||c||^2, clamped at zero.
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& points,
                                  const Eigen::VectorXd& point_sq,
                                  const Eigen::MatrixXd& centroids) {
  const Eigen::VectorXd centroid_sq = centroids.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = -2.0 * (points * centroids.transpose());
  d2.colwise() += point_sq;
  d2.rowwise() += centroid_sq.transpose();
  return d2.cwiseMax(0.0);
}

std::vector<int> plus_plus_seed(const Eigen::MatrixXd& points,
                                const Eigen::VectorXd& point_sq, int k,
                                Rng& rng) {
  const Eigen::Index n = points.rows();
  std::vector<int> centers;
  centers.reserve(k);
  std::vector<char> chosen(n, 0);

  const int first = static_cast<int>(rng.uniform_int(n));
  centers.push_back(first);
  chosen[first] = 1;

  Eigen::VectorXd d2 =
      (point_sq.array() - 2.0 * (points * points.row(first).transpose()).array() +
       point_sq[first])
          .max(0.0);

  while (static_cast<int>(centers.size()) < k) {
    const double total = d2.sum();
    int next = -1;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double cum = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        cum += d2[i];
        if (cum >= u && d2[i] > 0.0) {
          next = static_cast<int>(i);
          break;
        }
      }
    }
    if (next < 0) {
      // All remaining mass is on duplicates of existing centers; take the
      // lowest-index unchosen point so we still return k centers.
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!chosen[i]) {
          next = static_cast<int>(i);
          break;
        }
      }
    }
    centers.push_back(next);
    chosen[next] = 1;
    const Eigen::VectorXd cand =
        (point_sq.array() -
         2.0 * (points * points.row(next).transpose()).array() +
         point_sq[next])
            .max(0.0);
    d2 = d2.cwiseMin(cand);
  }
  return centers;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, Rng& rng,
                    int max_iter, double rel_tol) {
  const Eigen::Index n = points.rows();
  if (k < 1 || k > n) {
    throw InvalidConfig("kmeans: k must lie in [1, n_points], got k=" +
                        std::to_string(k) + " with " + std::to_string(n) +
                        " points");
  }

  const Eigen::VectorXd point_sq = points.rowwise().squaredNorm();

  KMeansResult res;
  res.centroids.resize(k, points.cols());
  const std::vector<int> seeds = plus_plus_seed(points, point_sq, k, rng);
  for (int c = 0; c < k; ++c) res.centroids.row(c) = points.row(seeds[c]);

  res.assignments.assign(n, 0);
  std::vector<int> counts(k, 0);

  auto assign = [&]() {
    const Eigen::MatrixXd d2 =
        squared_distances(points, point_sq, res.centroids);
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = d2(i, 0);
      for (int c = 1; c < k; ++c) {
        if (d2(i, c) < best_d) {
          best_d = d2(i, c);
          best = c;
        }
      }
      res.assignments[i] = best;
      inertia += best_d;
    }
    res.inertia = inertia;
  };

  assign();
  double prev_inertia = res.inertia;

  for (int iter = 0; iter < max_iter; ++iter) {
    // Centroid update with empty-cluster repair.
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    std::fill(counts.begin(), counts.end(), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(res.assignments[i]) += points.row(i);
      ++counts[res.assignments[i]];
    }
    std::vector<char> used_repair(n, 0);
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        res.centroids.row(c) = sums.row(c) / double(counts[c]);
      } else {
        // Re-seed at the point farthest from the centroid's previous
        // position, skipping points already taken by another repair.
        const Eigen::VectorXd dist =
            (points.rowwise() - res.centroids.row(c)).rowwise().squaredNorm();
        int far = -1;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (!used_repair[i] && dist[i] > far_d) {
            far_d = dist[i];
            far = static_cast<int>(i);
          }
        }
        res.centroids.row(c) = points.row(far);
        used_repair[far] = 1;
      }
    }

    assign();
    res.iterations = iter + 1;
    if (prev_inertia == 0.0 ||
        std::abs(prev_inertia - res.inertia) < rel_tol * prev_inertia) {
      break;
    }
    prev_inertia = res.inertia;
  }
  return res;
}

}  // namespace coolish
