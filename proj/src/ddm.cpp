#include "dlmtrace/ddm.hpp"

#include <array>
#include <cmath>

namespace dlmtrace {

void check_effect_values(const EffectValues& ev, bool allow_zeroed) {
  const std::array<double, 3> v{ev.alpha, ev.beta, ev.gamma};
  int zeros = 0;
  for (double x : v) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw UsageError("effect values must be finite and >= 0");
    if (x == 0.0) ++zeros;
  }
  if (zeros > 0 && !allow_zeroed) throw UsageError("effect values must be positive");
  if (zeros == 3) throw UsageError("at most two effect values may be zeroed");
  for (int a = 0; a < 3; ++a) {
    for (int b = a + 1; b < 3; ++b) {
      if (v[a] != 0.0 && v[a] == v[b]) throw UsageError("effect values must be pairwise distinct");
    }
  }
}

EffectValues zero_effects(EffectValues ev, const std::vector<EffectComponent>& which) {
  if (which.size() > 2) throw UsageError("at most two effect values may be zeroed");
  for (auto c : which) {
    switch (c) {
      case EffectComponent::alpha:
        ev.alpha = 0.0;
        break;
      case EffectComponent::beta:
        ev.beta = 0.0;
        break;
      case EffectComponent::gamma:
        ev.gamma = 0.0;
        break;
    }
  }
  check_effect_values(ev, true);
  return ev;
}

EffectValues zero_effects(EffectValues ev, std::initializer_list<EffectComponent> which) {
  return zero_effects(ev, std::vector<EffectComponent>(which));
}

std::string_view to_string(TieRule t) {
  return t == TieRule::plus_beta ? "plus_beta" : "zero";
}

TieRule parse_tie_rule(std::string_view name) {
  if (name == "plus_beta") return TieRule::plus_beta;
  if (name == "zero") return TieRule::zero;
  throw UsageError("unknown tie rule '" + std::string(name) + "'");
}

DirectedDecodingMap build_ddm(const Trajectory& traj, const EffectValues& ev, TieRule tie) {
  check_effect_values(ev, true);
  require_valid(traj);
  const int T = traj.num_steps();
  const int L = traj.num_tokens;

  DirectedDecodingMap ddm;
  ddm.entries = Matrix::Zero(T, L);
  ddm.effect_values = ev;
  ddm.model_id = traj.model_id;
  ddm.prompt_id = traj.prompt_id;

  std::vector<int> decoded;  // U_i, in decode order
  for (int n : traj.steps[0].newly_decoded) decoded.push_back(n);

  for (int i = 0; i + 1 < T; ++i) {
    const auto& prev = traj.steps[i].confidences;
    const auto& next = traj.steps[i + 1].confidences;
    bool any_up = false;
    bool any_down = false;
    for (int p : decoded) {
      const long double delta =
          static_cast<long double>(*next[p]) - static_cast<long double>(*prev[p]);
      if (delta > 0) {
        any_up = true;
        ddm.entries(i + 1, p) = ev.gamma;
      } else if (delta < 0) {
        any_down = true;
        ddm.entries(i + 1, p) = -ev.gamma;
      }
    }

    double code = 0.0;
    if (!decoded.empty()) {
      if (any_up && any_down) {
        code = ev.alpha;
      } else if (any_up) {
        code = ev.beta;
      } else if (any_down) {
        code = -ev.beta;
      } else {
        code = tie == TieRule::plus_beta ? ev.beta : 0.0;
      }
    }
    for (int n : traj.steps[i + 1].newly_decoded) {
      ddm.entries(i + 1, n) = code;
    }
    for (int n : traj.steps[i + 1].newly_decoded) decoded.push_back(n);
  }
  return ddm;
}

OccupancyMap build_occupancy(const Trajectory& traj) {
  require_valid(traj);
  const int T = traj.num_steps();
  OccupancyMap occ;
  occ.entries = Matrix::Zero(T, traj.num_tokens);
  for (int i = 0; i < T; ++i) {
    if (i > 0) occ.entries.row(i) = occ.entries.row(i - 1);
    for (int n : traj.steps[i].newly_decoded) occ.entries(i, n) = 1.0;
  }
  return occ;
}

std::vector<DirectedDecodingMap> batch_ddms(const TrajectoryBatch& batch, const EffectValues& ev,
                                            TieRule tie) {
  if (batch.empty()) throw DataError("batch_ddms: empty batch");
  const int T = batch.max_steps();
  std::vector<DirectedDecodingMap> out;
  out.reserve(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) {
    try {
      auto ddm = build_ddm(batch[k], ev, tie);
      ddm.entries = pad_rows(ddm.entries, T);
      out.push_back(std::move(ddm));
    } catch (const DataError& e) {
      throw DataError("record " + std::to_string(k) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace dlmtrace
