#pragma once

#include <string_view>
#include <vector>

#include "dlmtrace/core.hpp"
#include "dlmtrace/ddm.hpp"
#include "dlmtrace/trajectory.hpp"

namespace dlmtrace {

/// Per-trajectory T x L feature maps:
///  - confidence: every recorded confidence, absent entries read as 0;
///  - filtered_confidence: confidence restricted to decoded positions;
///  - ddm: build_ddm;
///  - occupancy: build_occupancy (no confidence information).
enum class FeatureScheme { confidence, filtered_confidence, ddm, occupancy };

std::string_view to_string(FeatureScheme s);
FeatureScheme parse_feature_scheme(std::string_view name);

struct FeatureConfig {
  FeatureScheme scheme = FeatureScheme::ddm;
  EffectValues effect_values;
  TieRule tie = TieRule::plus_beta;

  bool operator==(const FeatureConfig&) const = default;
};

Matrix featurize(const Trajectory& traj, const FeatureConfig& config = {});

/// featurize over each batch, all zero-padded to `rows` rows (or to the
/// longest trajectory across the batches when rows == 0).
std::vector<Matrix> featurize_batch(const TrajectoryBatch& batch, const FeatureConfig& config = {},
                                    Eigen::Index rows = 0);

}  // namespace dlmtrace
