#include "dlmtrace/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>

namespace dlmtrace {

double perplexity(const Trajectory& traj) {
  require_valid(traj);
  const std::vector<int> step_of = decode_step_of(traj);
  long double nll = 0.0L;
  int count = 0;
  for (int j = 0; j < traj.num_tokens; ++j) {
    if (step_of[j] < 0) continue;
    const double c = *traj.steps[step_of[j]].confidences[j];
    if (!(c > 0.0)) {
      throw DataError("perplexity: zero decode confidence at position " + std::to_string(j));
    }
    nll -= std::log(static_cast<long double>(c));
    ++count;
  }
  if (count == 0) throw DataError("perplexity: no decoded positions");
  return static_cast<double>(std::exp(nll / count));
}

namespace {

struct Gaussian1d {
  double mean;
  double sd;
};

Gaussian1d fit_1d(std::span<const double> xs, double variance_floor) {
  long double mean = 0.0L;
  for (double x : xs) mean += x;
  mean /= static_cast<long double>(xs.size());
  long double var = 0.0L;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<long double>(xs.size());
  return {static_cast<double>(mean),
          std::sqrt(std::max(static_cast<double>(var), variance_floor))};
}

}  // namespace

double perplexity_score(std::span<const double> ref_pos, std::span<const double> ref_neg,
                        double target, double variance_floor) {
  if (ref_pos.empty() || ref_neg.empty()) {
    throw DataError("perplexity_score: empty reference list");
  }
  const Gaussian1d pos = fit_1d(ref_pos, variance_floor);
  const Gaussian1d neg = fit_1d(ref_neg, variance_floor);
  return std::abs(target - neg.mean) / neg.sd - std::abs(target - pos.mean) / pos.sd;
}

namespace {

std::vector<std::vector<int>> neighbourhoods(const Matrix& points, double epsilon) {
  const Eigen::Index n = points.rows();
  const double eps2 = epsilon * epsilon;
  std::vector<std::vector<int>> nb(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    nb[i].push_back(static_cast<int>(i));
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if ((points.row(i) - points.row(j)).squaredNorm() <= eps2) {
        nb[i].push_back(static_cast<int>(j));
        nb[j].push_back(static_cast<int>(i));
      }
    }
  }
  for (auto& v : nb) std::sort(v.begin(), v.end());
  return nb;
}

void check_params(const DbscanParams& params) {
  if (!(params.epsilon > 0.0)) throw UsageError("dbscan: epsilon must be > 0");
  if (params.min_points < 1) throw UsageError("dbscan: min_points must be >= 1");
}

}  // namespace

std::vector<bool> core_points(const Matrix& points, const DbscanParams& params) {
  check_params(params);
  const auto nb = neighbourhoods(points, params.epsilon);
  std::vector<bool> core(nb.size());
  for (std::size_t i = 0; i < nb.size(); ++i) {
    core[i] = static_cast<int>(nb[i].size()) >= params.min_points;
  }
  return core;
}

std::vector<int> dbscan(const Matrix& points, const DbscanParams& params) {
  check_params(params);
  if (points.rows() == 0) throw DataError("dbscan: no points");
  const auto nb = neighbourhoods(points, params.epsilon);
  const auto n = static_cast<int>(points.rows());
  constexpr int kUnvisited = -2;
  std::vector<int> label(n, kUnvisited);
  int cluster = 0;

  for (int i = 0; i < n; ++i) {
    if (label[i] != kUnvisited) continue;
    if (static_cast<int>(nb[i].size()) < params.min_points) {
      label[i] = kNoise;
      continue;
    }
    label[i] = cluster;
    std::deque<int> frontier(nb[i].begin(), nb[i].end());
    while (!frontier.empty()) {
      const int q = frontier.front();
      frontier.pop_front();
      if (label[q] == kNoise) label[q] = cluster;  // border point
      if (label[q] != kUnvisited) continue;
      label[q] = cluster;
      if (static_cast<int>(nb[q].size()) >= params.min_points) {
        frontier.insert(frontier.end(), nb[q].begin(), nb[q].end());
      }
    }
    ++cluster;
  }
  return label;
}

std::vector<int> canonical_labels(std::span<const int> labels) {
  std::map<int, int> remap;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) {
      out[i] = labels[i];
      continue;
    }
    auto [it, inserted] = remap.try_emplace(labels[i], static_cast<int>(remap.size()));
    out[i] = it->second;
  }
  return out;
}

Matrix stack_rows(std::span<const Matrix> maps) {
  if (maps.empty()) return Matrix(0, 0);
  const Eigen::Index d = maps.front().size();
  Matrix out(static_cast<Eigen::Index>(maps.size()), d);
  for (std::size_t k = 0; k < maps.size(); ++k) {
    if (maps[k].size() != d) throw DataError("stack_rows: maps differ in size");
    out.row(static_cast<Eigen::Index>(k)) = flatten(maps[k]);
  }
  return out;
}

ClusterScorer::ClusterScorer(const Matrix& ref_pos, const Matrix& ref_neg,
                             const DbscanParams& params) {
  if (ref_pos.rows() == 0 || ref_neg.rows() == 0) {
    throw DataError("clustering: empty reference set");
  }
  if (ref_pos.cols() != ref_neg.cols()) throw DataError("clustering: dimension mismatch");
  Matrix all(ref_pos.rows() + ref_neg.rows(), ref_pos.cols());
  all << ref_pos, ref_neg;
  labels_ = dbscan(all, params);
  const std::vector<bool> core = core_points(all, params);

  const int n_clusters =
      labels_.empty() ? 0 : *std::max_element(labels_.begin(), labels_.end()) + 1;
  std::vector<int> pos_votes(n_clusters, 0);
  std::vector<int> neg_votes(n_clusters, 0);
  for (Eigen::Index i = 0; i < all.rows(); ++i) {
    const int c = labels_[i];
    if (c < 0) continue;
    (i < ref_pos.rows() ? pos_votes : neg_votes)[c] += 1;
  }

  // Clusters without a majority belong to neither side.
  std::vector<Eigen::Index> pos_rows;
  std::vector<Eigen::Index> neg_rows;
  for (Eigen::Index i = 0; i < all.rows(); ++i) {
    const int c = labels_[i];
    if (c < 0 || !core[i]) continue;
    if (pos_votes[c] > neg_votes[c]) pos_rows.push_back(i);
    if (neg_votes[c] > pos_votes[c]) neg_rows.push_back(i);
  }
  pos_cores_ = all(pos_rows, Eigen::all);
  neg_cores_ = all(neg_rows, Eigen::all);
  mean_pos_ = ref_pos.colwise().mean();
  mean_neg_ = ref_neg.colwise().mean();
}

double ClusterScorer::score(const RowVector& target) const {
  if (target.size() != mean_pos_.size()) throw DataError("clustering: dimension mismatch");
  if (uses_fallback()) return distance_score(mean_pos_, mean_neg_, target);
  const double d_pos = (pos_cores_.rowwise() - target).rowwise().norm().minCoeff();
  const double d_neg = (neg_cores_.rowwise() - target).rowwise().norm().minCoeff();
  return d_neg - d_pos;
}

double clustering_score(const Matrix& ref_pos, const Matrix& ref_neg, const RowVector& target,
                        const DbscanParams& params) {
  return ClusterScorer(ref_pos, ref_neg, params).score(target);
}

}  // namespace dlmtrace
