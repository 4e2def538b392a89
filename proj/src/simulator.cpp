#include "dlmtrace/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dlmtrace/core.hpp"
#include "dlmtrace/parallel.hpp"
#include "dlmtrace/rng.hpp"

namespace dlmtrace {

namespace {

constexpr double kConfidenceMin = 1e-6;
constexpr double kConfidenceMax = 1.0 - 1e-6;

// Stream tags keep the substreams of different purposes apart.
constexpr std::uint64_t kStreamBaseCurve = 0xB45E;
constexpr std::uint64_t kStreamDerive = 0xDE21;
constexpr std::uint64_t kStreamPrompt = 0x9807;
constexpr std::uint64_t kStreamTrajectory = 0x7EA1;

// Initial-field spread (logit units) from the prompt and from sampling.
constexpr double kPromptNoise = 0.2;
constexpr double kSampleNoise = 0.1;

// Logit gain of every position per step as context accumulates.
// Spread of the default drift and its noise per unit perturbation scale.
constexpr double kDriftSpread = 0.05;
constexpr double kDriftScale = 0.2;
constexpr double kKernelScale = 0.4;
constexpr double kBaseCurveScale = 0.2;

double logit(double p) { return std::log(p / (1.0 - p)); }

double to_confidence(double z) {
  return std::clamp(1.0 / (1.0 + std::exp(-z)), kConfidenceMin, kConfidenceMax);
}

// Near taps of the default kernel (offsets -3..3): asymmetric, mixed sign.
constexpr double kNearTaps[] = {0.25, -0.45, 0.7, 0.0, 0.55, 0.35, -0.3};
constexpr int kNearHalf = 3;

// derive_pair noise per unit perturbation scale.
constexpr double kNearTapScale = 1.0;
constexpr double kTailGainScale = 3.0;

// Full-length kernel for L positions: near taps plus a weak positive tail
// reaching every other position.
std::vector<double> default_kernel(int num_tokens) {
  const int half = num_tokens - 1;
  std::vector<double> k(2 * half + 1);
  for (int off = -half; off <= half; ++off) {
    const int a = std::abs(off);
    k[off + half] = kKernelScale * (a <= kNearHalf ? kNearTaps[off + kNearHalf]
                                                   : 0.08 * std::exp(-static_cast<double>(a - kNearHalf) / 8.0));
  }
  return k;
}

}  // namespace

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::CMA:
      return "CMA";
    case Scenario::IRA:
      return "IRA";
    case Scenario::CCA:
      return "CCA";
  }
  return "unknown";
}

Scenario parse_scenario(std::string_view name) {
  if (name == "CMA" || name == "cma") return Scenario::CMA;
  if (name == "IRA" || name == "ira") return Scenario::IRA;
  if (name == "CCA" || name == "cca") return Scenario::CCA;
  throw UsageError("unknown scenario '" + std::string(name) + "'");
}

ScenarioSpec default_scenario(Scenario kind) {
  switch (kind) {
    case Scenario::CMA:
      return {kind, 1.0};
    case Scenario::IRA:
      return {kind, 0.1};
    case Scenario::CCA:
      return {kind, 0.03};
  }
  return {kind, 1.0};
}

ModelParams default_params(int num_tokens, std::uint64_t seed) {
  if (num_tokens <= 0) throw UsageError("num_tokens must be positive");
  ModelParams p;
  p.seed = seed;
  CounterRng rng(seed, kStreamBaseCurve);
  p.base_curve.resize(num_tokens);
  for (int j = 0; j < num_tokens; ++j) {
    // Mild left-to-right trend plus position-specific offsets.
    const double trend = 0.5 - static_cast<double>(j) / num_tokens;
    p.base_curve[j] = to_confidence(trend + rng.normal());
  }
  p.drift.resize(num_tokens);
  for (double& d : p.drift) d = kDriftSpread * rng.normal();
  p.coupling = default_kernel(num_tokens);
  return p;
}

void check_params(const ModelParams& p, int num_tokens) {
  if (num_tokens <= 0) throw UsageError("num_tokens must be positive");
  if (static_cast<int>(p.base_curve.size()) != num_tokens) {
    throw UsageError("base_curve has " + std::to_string(p.base_curve.size()) +
                     " entries, expected " + std::to_string(num_tokens));
  }
  for (double b : p.base_curve) {
    if (!(b > 0.0 && b < 1.0)) throw UsageError("base_curve entries must lie in (0, 1)");
  }
  if (static_cast<int>(p.drift.size()) != num_tokens) {
    throw UsageError("drift has " + std::to_string(p.drift.size()) + " entries, expected " +
                     std::to_string(num_tokens));
  }
  if (p.coupling.size() % 2 == 0) throw UsageError("coupling kernel must have odd length");
  if (static_cast<int>(p.coupling.size()) > 2 * num_tokens - 1) {
    throw UsageError("coupling kernel longer than 2L - 1");
  }
  if (!(p.mix_prob >= 0.0 && p.mix_prob <= 1.0)) throw UsageError("mix_prob must lie in [0, 1]");
  if (!(p.noise_scale >= 0.0)) throw UsageError("noise_scale must be >= 0");
  if (p.tokens_per_step < 1) throw UsageError("tokens_per_step must be >= 1");
}

std::pair<ModelParams, ModelParams> derive_pair(const ModelParams& base, const ScenarioSpec& spec,
                                                std::uint64_t seed) {
  const double s = spec.perturbation_scale;
  if (!(s >= 0.0)) throw UsageError("perturbation_scale must be >= 0");

  auto perturb = [&](std::uint64_t which) {
    ModelParams m = base;
    CounterRng rng(mix_seed(seed, kStreamDerive), which);
    for (double& b : m.base_curve) b = to_confidence(logit(b) + kBaseCurveScale * s * rng.normal());
    // Zero-mean across positions, so the drift reshapes rather than shifts.
    std::vector<double> dz(m.drift.size());
    for (double& z : dz) z = rng.normal();
    const double mean = std::accumulate(dz.begin(), dz.end(), 0.0) / static_cast<double>(dz.size());
    for (std::size_t j = 0; j < dz.size(); ++j) m.drift[j] += kDriftScale * s * (dz[j] - mean);
    // Near taps move independently; the long-range tail is rescaled as a
    // whole so its shape is kept.
    const int half = static_cast<int>(m.coupling.size()) / 2;
    const double tail_gain = std::exp(kTailGainScale * s * rng.normal());
    for (int k = -half; k <= half; ++k) {
      const double z = rng.normal();
      double& w = m.coupling[k + half];
      if (k == 0) continue;
      if (std::abs(k) <= kNearHalf) {
        w += kKernelScale * kNearTapScale * s * z;
      } else {
        w *= tail_gain;
      }
    }
    m.mix_prob = std::clamp(m.mix_prob + 0.1 * s * rng.normal(), 0.0, 1.0);
    return m;
  };

  std::pair<ModelParams, ModelParams> out{perturb(0), perturb(1)};
  if (spec.kind == Scenario::CMA) {
    auto& k = out.second.coupling;
    const std::vector<double> mirror(k.rbegin(), k.rend());
    const double w = std::min(s, 1.0);
    for (std::size_t i = 0; i < k.size(); ++i) k[i] = (1.0 - w) * k[i] + w * mirror[i];
  }
  return out;
}

double parameter_distance(const ModelParams& a, const ModelParams& b) {
  if (a.base_curve.size() != b.base_curve.size() || a.drift.size() != b.drift.size() ||
      a.coupling.size() != b.coupling.size()) {
    throw UsageError("parameter_distance: shape mismatch");
  }
  double s = 0.0;
  for (std::size_t j = 0; j < a.base_curve.size(); ++j) {
    const double d = logit(a.base_curve[j]) - logit(b.base_curve[j]);
    s += d * d;
  }
  for (std::size_t j = 0; j < a.drift.size(); ++j) {
    const double d = a.drift[j] - b.drift[j];
    s += d * d;
  }
  for (std::size_t k = 0; k < a.coupling.size(); ++k) {
    const double d = a.coupling[k] - b.coupling[k];
    s += d * d;
  }
  s += (a.mix_prob - b.mix_prob) * (a.mix_prob - b.mix_prob);
  return std::sqrt(s);
}

Trajectory decode(const ModelParams& params, Strategy strategy, int num_tokens, int block_size,
                  const std::string& prompt_id, std::uint64_t seed) {
  check_params(params, num_tokens);
  const int L = num_tokens;
  if (block_size <= 0 || block_size > L || L % block_size != 0) {
    throw UsageError("block_size " + std::to_string(block_size) + " does not divide " +
                     std::to_string(L));
  }

  Trajectory traj;
  traj.model_id = params.model_id;
  traj.prompt_id = prompt_id;
  traj.strategy = strategy;
  traj.num_tokens = L;
  traj.block_size = block_size;

  const std::uint64_t key = mix_seed(params.seed, mix_seed(seed, kStreamTrajectory));
  const int half = static_cast<int>(params.coupling.size()) / 2;

  // Prompt noise is shared by every decoder answering the same prompt.
  CounterRng prompt_rng(hash_string(prompt_id), kStreamPrompt);
  CounterRng init_rng(key, 0);
  std::vector<double> z(L);
  for (int j = 0; j < L; ++j) {
    z[j] = logit(params.base_curve[j]) + kPromptNoise * prompt_rng.normal() +
           kSampleNoise * init_rng.normal();
  }

  auto snapshot = [&](std::vector<int> newly) {
    DecodeStep step;
    step.newly_decoded = std::move(newly);
    step.confidences.resize(L);
    for (int j = 0; j < L; ++j) step.confidences[j] = to_confidence(z[j]);
    return step;
  };
  traj.steps.push_back(snapshot({}));

  std::vector<char> decoded(L, 0);
  int remaining = L;
  const int span = strategy == Strategy::semi_autoregressive ? block_size : L;
  for (std::uint64_t s = 1; remaining > 0; ++s) {
    CounterRng rng(key, s);

    // Candidates: masked positions of the leftmost incomplete block.
    int first_masked = 0;
    while (decoded[first_masked]) ++first_masked;
    const int block_begin = (first_masked / span) * span;
    std::vector<int> candidates;
    for (int j = block_begin; j < block_begin + span; ++j) {
      if (!decoded[j]) candidates.push_back(j);
    }
    const int take = std::min<int>(params.tokens_per_step, static_cast<int>(candidates.size()));
    std::partial_sort(candidates.begin(), candidates.begin() + take, candidates.end(),
                      [&](int a, int b) { return z[a] > z[b] || (z[a] == z[b] && a < b); });
    std::vector<int> chosen(candidates.begin(), candidates.begin() + take);

    for (int n : chosen) {
      decoded[n] = 1;
      --remaining;
    }
    std::vector<double> delta(L, 0.0);
    for (int n : chosen) {
      const bool mixed = rng.uniform() < params.mix_prob;
      for (int k = -half; k <= half; ++k) {
        const int q = n + k;
        const double coin = rng.uniform();
        if (q < 0 || q >= L) continue;
        const double w = params.coupling[k + half];
        delta[q] += (mixed && coin < 0.5) ? -w : w;
      }
    }
    for (int q = 0; q < L; ++q) {
      z[q] += delta[q] + params.noise_scale * rng.normal();
      if (decoded[q]) z[q] += params.drift[q];
    }
    std::sort(chosen.begin(), chosen.end());
    traj.steps.push_back(snapshot(std::move(chosen)));
  }
  return traj;
}

Experiment generate_experiment(const ExperimentConfig& cfg) {
  if (cfg.n_ref < 1 || cfg.n_test < 1) throw UsageError("n_ref and n_test must be >= 1");
  if (cfg.num_tokens <= 0) throw UsageError("num_tokens must be positive");
  if (cfg.block_size <= 0 || cfg.block_size > cfg.num_tokens ||
      cfg.num_tokens % cfg.block_size != 0) {
    throw UsageError("block_size " + std::to_string(cfg.block_size) + " does not divide " +
                     std::to_string(cfg.num_tokens));
  }

  ModelParams base = default_params(cfg.num_tokens, mix_seed(cfg.seed, kStreamBaseCurve));
  base.tokens_per_step = cfg.tokens_per_step;
  auto [a, b] = derive_pair(base, cfg.scenario, mix_seed(cfg.seed, kStreamDerive));
  a.model_id = "model_a";
  b.model_id = "model_b";

  Experiment ex;
  ex.model_a = a;
  ex.model_b = b;

  struct Job {
    const ModelParams* model;
    TrajectoryBatch* out;
    std::uint64_t tag;
    const char* prefix;
    int count;
  };
  const Job jobs[] = {{&ex.model_a, &ex.ref_a, 0, "ref-", cfg.n_ref},
                      {&ex.model_b, &ex.ref_b, 1, "ref-", cfg.n_ref},
                      {&ex.model_a, &ex.test_a, 2, "test-", cfg.n_test},
                      {&ex.model_b, &ex.test_b, 3, "test-", cfg.n_test}};
  for (const Job& job : jobs) {
    job.out->trajectories.resize(job.count);
    parallel_for(static_cast<std::size_t>(job.count), cfg.threads, [&](std::size_t k) {
      const std::uint64_t traj_seed = mix_seed(cfg.seed, (job.tag << 32) | k);
      job.out->trajectories[k] = decode(*job.model, cfg.strategy, cfg.num_tokens, cfg.block_size,
                                        job.prefix + std::to_string(k), traj_seed);
    });
  }
  return ex;
}

}  // namespace dlmtrace
