#include "dlmtrace/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <numeric>

#include "dlmtrace/rng.hpp"

namespace dlmtrace {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::gta:
      return "gta";
    case Method::distance:
      return "distance";
    case Method::clustering:
      return "clustering";
    case Method::perplexity:
      return "perplexity";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "gta") return Method::gta;
  if (name == "distance") return Method::distance;
  if (name == "clustering") return Method::clustering;
  if (name == "perplexity") return Method::perplexity;
  throw UsageError("unknown method '" + std::string(name) + "'");
}

namespace {

std::vector<double> perplexities(const TrajectoryBatch& batch) {
  std::vector<double> out;
  out.reserve(batch.size());
  for (const auto& t : batch.trajectories) out.push_back(perplexity(t));
  return out;
}

}  // namespace

BinaryScorer::BinaryScorer(const TrajectoryBatch& ref_pos, const TrajectoryBatch& ref_neg,
                           const MethodConfig& config, Eigen::Index rows)
    : config_(config) {
  if (ref_pos.empty() || ref_neg.empty()) throw DataError("scorer: empty reference batch");
  if (config.method == Method::perplexity) {
    ppl_pos_ = perplexities(ref_pos);
    ppl_neg_ = perplexities(ref_neg);
    return;
  }

  rows_ = std::max<Eigen::Index>({rows, ref_pos.max_steps(), ref_neg.max_steps()});
  const auto f_pos = featurize_batch(ref_pos, config.features, rows_);
  const auto f_neg = featurize_batch(ref_neg, config.features, rows_);
  switch (config.method) {
    case Method::gta: {
      auto pos = std::make_shared<Fingerprint>(
          fit(f_pos, "pos", config.variance_floor, config.granularity));
      auto neg = std::make_shared<Fingerprint>(
          fit(f_neg, "neg", config.variance_floor, config.granularity));
      map_scorer_ = [pos, neg](const Matrix& t) { return binary_score(*pos, *neg, t); };
      break;
    }
    case Method::distance: {
      const RowVector mean_pos = stack_rows(f_pos).colwise().mean();
      const RowVector mean_neg = stack_rows(f_neg).colwise().mean();
      map_scorer_ = [mean_pos, mean_neg](const Matrix& t) {
        return distance_score(mean_pos, mean_neg, flatten(t));
      };
      break;
    }
    case Method::clustering: {
      auto c = std::make_shared<ClusterScorer>(stack_rows(f_pos), stack_rows(f_neg), config.dbscan);
      map_scorer_ = [c](const Matrix& t) { return c->score(flatten(t)); };
      break;
    }
    case Method::perplexity:
      break;
  }
}

double BinaryScorer::operator()(const Trajectory& target) const {
  if (config_.method == Method::perplexity) {
    return perplexity_score(ppl_pos_, ppl_neg_, perplexity(target), config_.variance_floor);
  }
  if (target.num_steps() > rows_) {
    throw DataError("target has " + std::to_string(target.num_steps()) +
                    " steps, references cover " + std::to_string(rows_));
  }
  return map_scorer_(pad_rows(featurize(target, config_.features), rows_));
}

std::vector<ScoredSample> score_binary(const TrajectoryBatch& ref_pos,
                                       const TrajectoryBatch& ref_neg,
                                       const TrajectoryBatch& test_pos,
                                       const TrajectoryBatch& test_neg,
                                       const MethodConfig& config) {
  const BinaryScorer scorer(ref_pos, ref_neg, config,
                            std::max(test_pos.max_steps(), test_neg.max_steps()));
  std::vector<ScoredSample> out;
  out.reserve(test_pos.size() + test_neg.size());
  for (const auto& t : test_pos.trajectories) out.push_back({scorer(t), true});
  for (const auto& t : test_neg.trajectories) out.push_back({scorer(t), false});
  return out;
}

std::vector<ScoredSample> score_binary(const Experiment& ex, const MethodConfig& config) {
  return score_binary(ex.ref_a, ex.ref_b, ex.test_a, ex.test_b, config);
}

double experiment_auc(const Experiment& ex, const MethodConfig& config) {
  return auc(score_binary(ex, config));
}

double permutation_null_sd(std::span<const ScoredSample> samples, int permutations,
                           std::uint64_t seed) {
  if (permutations < 2) throw UsageError("permutation_null_sd: need >= 2 permutations");
  std::vector<ScoredSample> v(samples.begin(), samples.end());
  CounterRng rng(seed, 0x9E11);
  std::vector<double> aucs;
  aucs.reserve(permutations);
  for (int p = 0; p < permutations; ++p) {
    // Fisher-Yates over the labels only.
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
      std::swap(v[i - 1].positive, v[j].positive);
    }
    aucs.push_back(auc(v));
  }
  const double mean = std::accumulate(aucs.begin(), aucs.end(), 0.0) / permutations;
  double ss = 0.0;
  for (double a : aucs) ss += (a - mean) * (a - mean);
  return std::sqrt(ss / permutations);
}

namespace {

double population_sd(const std::vector<double>& xs) {
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

AblationReport run_ablation(const Experiment& ex, const MethodConfig& base) {
  MethodConfig cfg = base;
  cfg.method = Method::gta;
  cfg.features.scheme = FeatureScheme::ddm;
  const EffectValues defaults = base.features.effect_values;

  AblationReport report;
  auto run = [&](std::string name, std::string group, const EffectValues& ev) {
    cfg.features.effect_values = ev;
    AblationSetting s{std::move(name), std::move(group), ev, experiment_auc(ex, cfg)};
    report.settings.push_back(s);
    return s.auc;
  };

  report.original_auc = run("original", "", defaults);

  using C = EffectComponent;
  const std::vector<std::pair<std::string, std::vector<C>>> variants{
      {"alpha", {C::alpha}},           {"beta", {C::beta}},
      {"gamma", {C::gamma}},           {"alpha+beta", {C::alpha, C::beta}},
      {"alpha+gamma", {C::alpha, C::gamma}}, {"beta+gamma", {C::beta, C::gamma}}};
  for (const auto& [name, which] : variants) {
    run("zero:" + name, "zero", zero_effects(defaults, which));
  }

  std::vector<double> sweep;
  for (int a = 5; a <= 15; ++a) {
    EffectValues ev = defaults;
    ev.alpha = a;
    sweep.push_back(run("alpha=" + format_value(ev.alpha), "alpha", ev));
  }
  report.std_alpha = population_sd(sweep);

  sweep.clear();
  for (int b = 1; b <= 10; ++b) {
    EffectValues ev = defaults;
    ev.beta = b / 10.0;
    sweep.push_back(run("beta=" + format_value(ev.beta), "beta", ev));
  }
  report.std_beta = population_sd(sweep);

  sweep.clear();
  for (int g = 15; g <= 25; ++g) {
    EffectValues ev = defaults;
    ev.gamma = g / 10.0;
    sweep.push_back(run("gamma=" + format_value(ev.gamma), "gamma", ev));
  }
  report.std_gamma = population_sd(sweep);
  return report;
}

}  // namespace dlmtrace
