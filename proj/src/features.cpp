#include "dlmtrace/features.hpp"

namespace dlmtrace {

std::string_view to_string(FeatureScheme s) {
  switch (s) {
    case FeatureScheme::confidence:
      return "confidence";
    case FeatureScheme::filtered_confidence:
      return "filtered_confidence";
    case FeatureScheme::ddm:
      return "ddm";
    case FeatureScheme::occupancy:
      return "occupancy";
  }
  return "unknown";
}

FeatureScheme parse_feature_scheme(std::string_view name) {
  if (name == "confidence") return FeatureScheme::confidence;
  if (name == "filtered_confidence") return FeatureScheme::filtered_confidence;
  if (name == "ddm") return FeatureScheme::ddm;
  if (name == "occupancy") return FeatureScheme::occupancy;
  throw UsageError("unknown feature scheme '" + std::string(name) + "'");
}

namespace {

Matrix raw_confidence(const Trajectory& traj) {
  Matrix m = Matrix::Zero(traj.num_steps(), traj.num_tokens);
  for (int i = 0; i < traj.num_steps(); ++i) {
    const auto& c = traj.steps[i].confidences;
    for (int j = 0; j < traj.num_tokens; ++j) {
      if (c[j]) m(i, j) = *c[j];
    }
  }
  return m;
}

}  // namespace

Matrix featurize(const Trajectory& traj, const FeatureConfig& config) {
  switch (config.scheme) {
    case FeatureScheme::confidence:
      require_valid(traj);
      return raw_confidence(traj);
    case FeatureScheme::filtered_confidence:
      return raw_confidence(traj).cwiseProduct(build_occupancy(traj).entries);
    case FeatureScheme::ddm:
      return build_ddm(traj, config.effect_values, config.tie).entries;
    case FeatureScheme::occupancy:
      return build_occupancy(traj).entries;
  }
  throw UsageError("unknown feature scheme");
}

std::vector<Matrix> featurize_batch(const TrajectoryBatch& batch, const FeatureConfig& config,
                                    Eigen::Index rows) {
  if (batch.empty()) throw DataError("featurize_batch: empty batch");
  if (rows == 0) rows = batch.max_steps();
  std::vector<Matrix> out;
  out.reserve(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) {
    try {
      out.push_back(pad_rows(featurize(batch[k], config), rows));
    } catch (const DataError& e) {
      throw DataError("record " + std::to_string(k) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace dlmtrace
