#include "dlmtrace/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "dlmtrace/core.hpp"
#include "json.hpp"

namespace dlmtrace {

using json = nlohmann::ordered_json;

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::low_confidence:
      return "low_confidence";
    case Strategy::semi_autoregressive:
      return "semi_autoregressive";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "low_confidence") return Strategy::low_confidence;
  if (name == "semi_autoregressive") return Strategy::semi_autoregressive;
  throw UsageError("unknown strategy '" + std::string(name) + "'");
}

int TrajectoryBatch::max_steps() const {
  int t = 0;
  for (const auto& tr : trajectories) t = std::max(t, tr.num_steps());
  return t;
}

namespace {

std::string at(int step, int pos) {
  return "(" + std::to_string(step + 1) + "," + std::to_string(pos) + ")";
}

}  // namespace

std::vector<std::string> validate(const Trajectory& traj) {
  std::vector<std::string> out;
  const int L = traj.num_tokens;
  if (L <= 0) {
    out.push_back("num_tokens must be positive, got " + std::to_string(L));
    return out;
  }
  if (traj.block_size <= 0 || traj.block_size > L || L % traj.block_size != 0) {
    out.push_back("block_size " + std::to_string(traj.block_size) + " must divide num_tokens " +
                  std::to_string(L));
  }
  if (traj.steps.empty()) {
    out.push_back("trajectory has no steps");
    return out;
  }

  std::vector<int> decoded_at(L, -1);
  std::vector<char> present(L, 0);
  for (int i = 0; i < traj.num_steps(); ++i) {
    const DecodeStep& step = traj.steps[i];
    if (static_cast<int>(step.confidences.size()) != L) {
      out.push_back("step " + std::to_string(i + 1) + " has " +
                    std::to_string(step.confidences.size()) + " confidences, expected " +
                    std::to_string(L));
      continue;
    }
    for (int j = 0; j < L; ++j) {
      const auto& c = step.confidences[j];
      if (c) {
        if (!std::isfinite(*c) || *c < 0.0 || *c > 1.0) {
          out.push_back("confidence out of [0,1] at " + at(i, j));
        }
      } else if (present[j]) {
        out.push_back("non-monotone unmasking at " + at(i, j));
      }
    }
    for (int n : step.newly_decoded) {
      if (n < 0 || n >= L) {
        out.push_back("decoded position out of range at " + at(i, n));
        continue;
      }
      if (decoded_at[n] == i) {
        out.push_back("position decoded twice in one step at " + at(i, n));
        continue;
      }
      if (decoded_at[n] >= 0) {
        out.push_back("position already decoded at step " + std::to_string(decoded_at[n] + 1) +
                      ", decoded again at " + at(i, n));
        continue;
      }
      decoded_at[n] = i;
      if (!step.confidences[n]) {
        out.push_back("decoded position without confidence at " + at(i, n));
      }
    }
    for (int j = 0; j < L; ++j) present[j] = step.confidences[j].has_value() ? 1 : present[j];
  }

  if (traj.strategy == Strategy::semi_autoregressive && traj.block_size > 0 &&
      L % traj.block_size == 0) {
    // A block is complete at the step where its last position was decoded.
    const int blocks = L / traj.block_size;
    std::vector<int> complete_at(blocks, -1);
    for (int b = 0; b < blocks; ++b) {
      int last = -1;
      for (int j = b * traj.block_size; j < (b + 1) * traj.block_size; ++j) {
        if (decoded_at[j] < 0) {
          last = -1;
          break;
        }
        last = std::max(last, decoded_at[j]);
      }
      complete_at[b] = last;
    }
    for (int i = 0; i < traj.num_steps(); ++i) {
      for (int n : traj.steps[i].newly_decoded) {
        if (n < 0 || n >= L || decoded_at[n] != i) continue;
        const int b = n / traj.block_size;
        for (int prev = 0; prev < b; ++prev) {
          if (complete_at[prev] < 0 || complete_at[prev] > i) {
            out.push_back("block order violated at step " + std::to_string(i + 1) + ": position " +
                          std::to_string(n) + " of block " + std::to_string(b) +
                          " decoded before block " + std::to_string(prev) + " completed");
            break;
          }
        }
      }
    }
  }
  return out;
}

void require_valid(const Trajectory& traj) {
  const auto violations = validate(traj);
  if (!violations.empty()) {
    throw DataError("invalid trajectory " + traj.model_id + "/" + traj.prompt_id + ": " +
                    violations.front());
  }
}

std::vector<int> decode_step_of(const Trajectory& traj) {
  std::vector<int> out(traj.num_tokens, -1);
  for (int i = 0; i < traj.num_steps(); ++i) {
    for (int n : traj.steps[i].newly_decoded) {
      if (n >= 0 && n < traj.num_tokens && out[n] < 0) out[n] = i;
    }
  }
  return out;
}

namespace {

Trajectory from_json(const json& j) {
  Trajectory t;
  t.model_id = j.at("model_id").get<std::string>();
  t.prompt_id = j.at("prompt_id").get<std::string>();
  t.strategy = parse_strategy(j.at("strategy").get<std::string>());
  t.num_tokens = j.at("num_tokens").get<int>();
  t.block_size = j.at("block_size").get<int>();
  const auto& steps = j.at("steps");
  if (!steps.is_array()) throw DataError("'steps' must be an array");
  t.steps.reserve(steps.size());
  for (const auto& s : steps) {
    DecodeStep step;
    for (const auto& n : s.at("new")) {
      if (!n.is_number_integer()) throw DataError("'new' entries must be integers");
      step.newly_decoded.push_back(n.get<int>());
    }
    const auto& conf = s.at("conf");
    if (!conf.is_array()) throw DataError("'conf' must be an array");
    step.confidences.reserve(conf.size());
    for (const auto& c : conf) {
      if (c.is_null()) {
        step.confidences.emplace_back();
      } else if (c.is_number()) {
        step.confidences.emplace_back(c.get<double>());
      } else {
        throw DataError("'conf' entries must be numbers or null");
      }
    }
    t.steps.push_back(std::move(step));
  }
  return t;
}

json to_json(const Trajectory& t) {
  json j;
  j["model_id"] = t.model_id;
  j["prompt_id"] = t.prompt_id;
  j["strategy"] = std::string(to_string(t.strategy));
  j["num_tokens"] = t.num_tokens;
  j["block_size"] = t.block_size;
  json steps = json::array();
  for (const auto& s : t.steps) {
    json conf = json::array();
    for (const auto& c : s.confidences) {
      conf.push_back(c ? json(*c) : json(nullptr));
    }
    json step;
    step["new"] = s.newly_decoded;
    step["conf"] = std::move(conf);
    steps.push_back(std::move(step));
  }
  j["steps"] = std::move(steps);
  return j;
}

}  // namespace

TrajectoryBatch read_log(std::istream& in) {
  TrajectoryBatch batch;
  std::string line;
  int line_no = 0;
  int first_line = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Trajectory t;
    try {
      t = from_json(json::parse(line));
    } catch (const std::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": malformed record: " + e.what());
    }
    const auto violations = validate(t);
    if (!violations.empty()) {
      throw DataError("line " + std::to_string(line_no) + ": invalid trajectory: " +
                      violations.front());
    }
    if (!batch.empty()) {
      const Trajectory& f = batch.trajectories.front();
      if (f.strategy != t.strategy || f.num_tokens != t.num_tokens ||
          f.block_size != t.block_size) {
        throw DataError("line " + std::to_string(line_no) + ": shape mismatch: record has (" +
                        std::string(to_string(t.strategy)) + ", " + std::to_string(t.num_tokens) +
                        ", " + std::to_string(t.block_size) + "), line " +
                        std::to_string(first_line) + " has (" +
                        std::string(to_string(f.strategy)) + ", " + std::to_string(f.num_tokens) +
                        ", " + std::to_string(f.block_size) + ")");
      }
    } else {
      first_line = line_no;
    }
    batch.trajectories.push_back(std::move(t));
  }
  if (in.bad()) throw DataError("read error after line " + std::to_string(line_no));
  return batch;
}

TrajectoryBatch read_log_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return read_log(in);
}

void write_log(const TrajectoryBatch& batch, std::ostream& out) {
  for (const auto& t : batch.trajectories) {
    out << to_json(t).dump() << '\n';
    if (!out) throw DataError("write failure while writing trajectory log");
  }
  out.flush();
  if (!out) throw DataError("write failure while writing trajectory log");
}

}  // namespace dlmtrace
