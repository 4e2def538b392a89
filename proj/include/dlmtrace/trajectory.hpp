#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dlmtrace {

enum class Strategy { low_confidence, semi_autoregressive };

std::string_view to_string(Strategy s);
/// Throws UsageError on unknown names.
Strategy parse_strategy(std::string_view name);

/// One decoding step. `confidences[j]` is empty while position j carries no
/// confidence; once present it stays present for every later step.
struct DecodeStep {
  std::vector<int> newly_decoded;
  std::vector<std::optional<double>> confidences;

  bool operator==(const DecodeStep&) const = default;
};

struct Trajectory {
  std::string model_id;
  std::string prompt_id;
  Strategy strategy = Strategy::low_confidence;
  int num_tokens = 0;
  int block_size = 0;
  std::vector<DecodeStep> steps;

  int num_steps() const { return static_cast<int>(steps.size()); }

  bool operator==(const Trajectory&) const = default;
};

/// Trajectories sharing (strategy, num_tokens, block_size). Different T is
/// allowed; derived maps are zero-padded to the longest trajectory.
struct TrajectoryBatch {
  std::vector<Trajectory> trajectories;

  std::size_t size() const { return trajectories.size(); }
  bool empty() const { return trajectories.empty(); }
  const Trajectory& operator[](std::size_t i) const { return trajectories[i]; }
  int max_steps() const;

  bool operator==(const TrajectoryBatch&) const = default;
};

/// Every invariant violation, with 1-based step numbers and 0-based
/// positions, e.g. "non-monotone unmasking at (3,2)". Empty when valid.
std::vector<std::string> validate(const Trajectory& traj);

/// Throws DataError carrying the first violation, if any.
void require_valid(const Trajectory& traj);

/// Step index (0-based) at which each position was decoded, -1 if never.
std::vector<int> decode_step_of(const Trajectory& traj);

/// Line-delimited JSON trajectory log. Throws DataError naming the line on
/// malformed or invalid records, and on records whose (strategy,
/// num_tokens, block_size) differ from the first record.
TrajectoryBatch read_log(std::istream& in);
TrajectoryBatch read_log_file(const std::string& path);

void write_log(const TrajectoryBatch& batch, std::ostream& out);

}  // namespace dlmtrace
