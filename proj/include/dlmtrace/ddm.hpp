#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include "dlmtrace/core.hpp"
#include "dlmtrace/trajectory.hpp"

namespace dlmtrace {

/// The three DDM codes: alpha marks a mixed-sign decode event, beta a
/// one-signed one, gamma the direction of an already decoded position.
struct EffectValues {
  double alpha = 10.0;
  double beta = 0.5;
  double gamma = 2.0;

  bool operator==(const EffectValues&) const = default;
};

enum class EffectComponent { alpha, beta, gamma };

/// Non-zero components must be positive and pairwise distinct. Zero entries
/// are only legal when `allow_zeroed` (ablation variants); at least one
/// component must stay non-zero. Throws UsageError.
void check_effect_values(const EffectValues& ev, bool allow_zeroed = false);

/// Ablation: returns `ev` with the listed components set to zero. At most
/// two components may be zeroed.
EffectValues zero_effects(EffectValues ev, std::initializer_list<EffectComponent> which);
EffectValues zero_effects(EffectValues ev, const std::vector<EffectComponent>& which);

/// Code given to decode events when every previously decoded position kept
/// exactly its confidence (both one-signed branches hold).
enum class TieRule { plus_beta, zero };

std::string_view to_string(TieRule t);
TieRule parse_tie_rule(std::string_view name);

struct DirectedDecodingMap {
  Matrix entries;
  EffectValues effect_values;
  std::string model_id;
  std::string prompt_id;
};

struct OccupancyMap {
  Matrix entries;
};

/// T x L effect map of a valid trajectory. Row 0 is all zeros; row i+1
/// codes the transition from step i to step i+1:
///  - a position decoded at or before step i gets +gamma / -gamma / 0 by
///    the sign of its confidence change;
///  - positions decoded at step i+1 get alpha when the changes over
///    earlier positions are mixed, +beta when none is negative, -beta when
///    none is positive, and the tie rule when all are zero. With no
///    earlier decoded position they get 0;
///  - masked positions get 0.
/// Throws DataError for invalid trajectories.
DirectedDecodingMap build_ddm(const Trajectory& traj, const EffectValues& ev = {},
                              TieRule tie = TieRule::plus_beta);

/// Entry (i, j) is 1 iff position j was decoded at or before step i.
OccupancyMap build_occupancy(const Trajectory& traj);

/// build_ddm over a batch, zero-padded to the batch's longest trajectory.
std::vector<DirectedDecodingMap> batch_ddms(const TrajectoryBatch& batch,
                                            const EffectValues& ev = {},
                                            TieRule tie = TieRule::plus_beta);

}  // namespace dlmtrace
