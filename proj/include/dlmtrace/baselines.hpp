#pragma once

#include <span>
#include <vector>

#include "dlmtrace/core.hpp"
#include "dlmtrace/trajectory.hpp"

namespace dlmtrace {

/// exp of the mean negative log confidence of each position at the step it
/// was decoded. Throws DataError when nothing was decoded or a decode
/// confidence is zero.
double perplexity(const Trajectory& traj);

/// |z| of the target under the negative references minus |z| under the
/// positive ones, with 1-D Gaussian fits (population variance, floored).
/// Higher favours the positive model.
double perplexity_score(std::span<const double> ref_pos, std::span<const double> ref_neg,
                        double target, double variance_floor = 1e-6);

/// d(target, mean_neg) - d(target, mean_pos), Frobenius distances.
template <typename A, typename B, typename C>
double distance_score(const Eigen::MatrixBase<A>& mean_pos, const Eigen::MatrixBase<B>& mean_neg,
                      const Eigen::MatrixBase<C>& target) {
  if (mean_pos.rows() != target.rows() || mean_pos.cols() != target.cols() ||
      mean_neg.rows() != target.rows() || mean_neg.cols() != target.cols()) {
    throw DataError("distance_score: shape mismatch");
  }
  return (target - mean_neg).norm() - (target - mean_pos).norm();
}

struct DbscanParams {
  double epsilon = 0.8;
  int min_points = 20;
};

inline constexpr int kNoise = -1;

/// DBSCAN over the rows of `points` with Euclidean distance. A point is core
/// when at least min_points rows (itself included) lie within distance
/// <= epsilon. Clusters are numbered 0, 1, ... in creation order; border
/// points reachable from several clusters stay with the first one that
/// reached them. Noise is kNoise.
std::vector<int> dbscan(const Matrix& points, const DbscanParams& params = {});

/// Core flags from the same neighbourhood rule dbscan uses.
std::vector<bool> core_points(const Matrix& points, const DbscanParams& params = {});

/// Renumbers clusters by their smallest member index; noise unchanged.
std::vector<int> canonical_labels(std::span<const int> labels);

/// Reference-side state of the clustering baseline: DBSCAN is run once over
/// the stacked references and targets are then scored against it.
class ClusterScorer {
 public:
  /// Rows of ref_pos / ref_neg are flattened feature vectors.
  ClusterScorer(const Matrix& ref_pos, const Matrix& ref_neg, const DbscanParams& params = {});

  /// Distance to the nearest core point of a negative-majority cluster
  /// minus the same for positive-majority clusters; falls back to
  /// distance_score over the reference means when either side has no
  /// cluster.
  double score(const RowVector& target) const;

  bool uses_fallback() const { return pos_cores_.rows() == 0 || neg_cores_.rows() == 0; }
  const std::vector<int>& labels() const { return labels_; }

 private:
  std::vector<int> labels_;
  Matrix pos_cores_;
  Matrix neg_cores_;
  RowVector mean_pos_;
  RowVector mean_neg_;
};

double clustering_score(const Matrix& ref_pos, const Matrix& ref_neg, const RowVector& target,
                        const DbscanParams& params = {});

/// Stacks maps as flattened rows.
Matrix stack_rows(std::span<const Matrix> maps);

}  // namespace dlmtrace
