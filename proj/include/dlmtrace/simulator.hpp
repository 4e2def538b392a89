#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dlmtrace/trajectory.hpp"

namespace dlmtrace {

/// Identity of a synthetic masked-diffusion decoder.
struct ModelParams {
  std::string model_id = "model";
  std::uint64_t seed = 0;
  /// Initial confidence tendency per position, in (0, 1).
  std::vector<double> base_curve;
  /// Logit increment a decode event at n applies to position n + k, stored
  /// at index k + coupling.size() / 2. Odd length, at most 2L - 1.
  std::vector<double> coupling;
  /// Per-step logit drift of each position once it is decoded.
  std::vector<double> drift;
  /// Chance that a decode event perturbs its neighbours with random signs.
  double mix_prob = 0.2;
  /// Per-step logit noise applied to every position.
  double noise_scale = 0.06;
  int tokens_per_step = 1;

  bool operator==(const ModelParams&) const = default;
};

enum class Scenario { CMA, IRA, CCA };

std::string_view to_string(Scenario s);
Scenario parse_scenario(std::string_view name);

struct ScenarioSpec {
  Scenario kind = Scenario::CMA;
  double perturbation_scale = 1.0;
};

/// CMA 1.0, IRA 0.1, CCA 0.03.
ScenarioSpec default_scenario(Scenario kind);

/// Seeded default decoder for sequences of `num_tokens` positions.
ModelParams default_params(int num_tokens, std::uint64_t seed);

/// Throws UsageError when `p` cannot drive sequences of `num_tokens`.
void check_params(const ModelParams& p, int num_tokens);

/// Two decoders perturbed from `base`: base-curve logits, drift, coupling
/// taps and mix probability each receive independent noise proportional to the
/// perturbation scale. Under CMA the second decoder's coupling kernel is
/// additionally blended toward its mirror image, changing its shape.
std::pair<ModelParams, ModelParams> derive_pair(const ModelParams& base, const ScenarioSpec& spec,
                                                std::uint64_t seed);

/// Euclidean distance over (base-curve logits, drift, coupling, mix_prob).
double parameter_distance(const ModelParams& a, const ModelParams& b);

/// Runs the decoder once. Step 1 records the initial confidence field with
/// nothing decoded; each later step unmasks the tokens_per_step most
/// confident masked positions (within the current block for
/// semi_autoregressive), then pushes every neighbour's logit by the
/// coupling kernel plus noise. Decoded positions also move by their drift. All positions carry a confidence at every
/// step; masked ones hold the decoder's current prediction.
Trajectory decode(const ModelParams& params, Strategy strategy, int num_tokens, int block_size,
                  const std::string& prompt_id, std::uint64_t seed);

struct ExperimentConfig {
  ScenarioSpec scenario = default_scenario(Scenario::CMA);
  int n_ref = 200;
  int n_test = 200;
  Strategy strategy = Strategy::semi_autoregressive;
  int num_tokens = 32;
  int block_size = 16;
  std::uint64_t seed = 0;
  int tokens_per_step = 1;
  int threads = 1;
};

/// Labelled reference and test trajectories of two decoders, "model_a" and
/// "model_b". Both decoders answer the same prompts; reference and test
/// prompts are disjoint and every trajectory has its own seed.
struct Experiment {
  ModelParams model_a;
  ModelParams model_b;
  TrajectoryBatch ref_a;
  TrajectoryBatch ref_b;
  TrajectoryBatch test_a;
  TrajectoryBatch test_b;
};

Experiment generate_experiment(const ExperimentConfig& config);

}  // namespace dlmtrace
