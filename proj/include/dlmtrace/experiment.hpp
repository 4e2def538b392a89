#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "dlmtrace/baselines.hpp"
#include "dlmtrace/features.hpp"
#include "dlmtrace/fingerprint.hpp"
#include "dlmtrace/metrics.hpp"
#include "dlmtrace/simulator.hpp"

namespace dlmtrace {

enum class Method { gta, distance, clustering, perplexity };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

struct MethodConfig {
  Method method = Method::gta;
  FeatureConfig features;
  Granularity granularity = Granularity::cell;
  double variance_floor = kDefaultVarianceFloor;
  DbscanParams dbscan;
};

/// Scores single trajectories against fixed reference batches, higher
/// meaning "generated by the positive model". Feature maps are padded to
/// `rows` rows (the longest reference when 0); longer targets are a
/// DataError.
class BinaryScorer {
 public:
  BinaryScorer(const TrajectoryBatch& ref_pos, const TrajectoryBatch& ref_neg,
               const MethodConfig& config, Eigen::Index rows = 0);

  double operator()(const Trajectory& target) const;

  Eigen::Index rows() const { return rows_; }

 private:
  MethodConfig config_;
  Eigen::Index rows_ = 0;
  std::function<double(const Matrix&)> map_scorer_;
  std::vector<double> ppl_pos_;
  std::vector<double> ppl_neg_;
};

/// Binary attribution scores for every test trajectory, higher meaning
/// "generated by the positive model". Feature maps of all four batches are
/// padded to a common step count. Perplexity ignores the feature config.
std::vector<ScoredSample> score_binary(const TrajectoryBatch& ref_pos,
                                       const TrajectoryBatch& ref_neg,
                                       const TrajectoryBatch& test_pos,
                                       const TrajectoryBatch& test_neg,
                                       const MethodConfig& config);

/// score_binary with model_a as the positive model.
std::vector<ScoredSample> score_binary(const Experiment& ex, const MethodConfig& config);

double experiment_auc(const Experiment& ex, const MethodConfig& config);

/// Standard deviation of the AUC under random label permutations.
double permutation_null_sd(std::span<const ScoredSample> samples, int permutations,
                           std::uint64_t seed);

struct AblationSetting {
  /// "original", "zero:beta+gamma", "alpha=7", ...
  std::string name;
  /// Swept parameter ("alpha", "beta", "gamma"), "zero" for zeroing
  /// variants, empty for the original.
  std::string group;
  EffectValues effect_values;
  double auc = 0.0;
};

struct AblationReport {
  std::vector<AblationSetting> settings;
  double original_auc = 0.0;
  /// Population standard deviation of the AUC across each sweep.
  double std_alpha = 0.0;
  double std_beta = 0.0;
  double std_gamma = 0.0;
};

/// Effect-value sweeps (alpha 5..15 step 1, beta 0.1..1.0 step 0.1,
/// gamma 1.5..2.5 step 0.1, others held at their defaults) and the six
/// zeroing variants, each scored with GTA on DDM features.
AblationReport run_ablation(const Experiment& ex, const MethodConfig& base);

}  // namespace dlmtrace
