#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace dlmtrace {

struct ScoredSample {
  double score = 0.0;
  bool positive = false;
};

/// Mann-Whitney AUC, ties counted one half. Throws DataError unless both
/// classes are present.
double auc(std::span<const ScoredSample> samples);

struct RocPoint {
  double fpr;
  double tpr;
  /// Predict positive when score >= threshold; +inf for the (0, 0) corner.
  double threshold;
};

/// Step ROC curve, one point per distinct score in descending order plus
/// the (0, 0) corner.
std::vector<RocPoint> roc_curve(std::span<const ScoredSample> samples);

/// Largest TPR among thresholds whose empirical FPR <= fpr_cap.
double tpr_at_fpr(std::span<const ScoredSample> samples, double fpr_cap);

enum class ThresholdRule { zero, best };

std::string_view to_string(ThresholdRule r);

/// zero: predict positive iff score >= 0. best: highest accuracy of any
/// "score >= t" rule.
double accuracy(std::span<const ScoredSample> samples, ThresholdRule rule);

/// Entry (r, c) counts samples with true model models[r] decided as
/// models[c]. Throws DataError for ids missing from `models`.
Eigen::MatrixXi confusion(std::span<const std::pair<std::string, std::string>> attributions,
                          std::span<const std::string> models);

struct EvalReport {
  double auc = 0.0;
  double tpr_at_5 = 0.0;
  double tpr_at_1 = 0.0;
  double accuracy_zero = 0.0;
  double accuracy_best = 0.0;
  std::vector<RocPoint> roc_points;
  int n_pos = 0;
  int n_neg = 0;
};

EvalReport evaluate(std::span<const ScoredSample> samples);

}  // namespace dlmtrace
