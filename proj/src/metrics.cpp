#include "dlmtrace/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>

#include "dlmtrace/core.hpp"

namespace dlmtrace {

namespace {

struct ClassCounts {
  std::int64_t pos = 0;
  std::int64_t neg = 0;
};

ClassCounts count_classes(std::span<const ScoredSample> samples) {
  ClassCounts c;
  for (const auto& s : samples) {
    if (std::isnan(s.score)) throw DataError("NaN score");
    (s.positive ? c.pos : c.neg) += 1;
  }
  return c;
}

ClassCounts require_both(std::span<const ScoredSample> samples) {
  const ClassCounts c = count_classes(samples);
  if (c.pos == 0 || c.neg == 0) {
    throw DataError("metrics need at least one positive and one negative sample");
  }
  return c;
}

// Samples sorted by descending score.
std::vector<ScoredSample> sorted_desc(std::span<const ScoredSample> samples) {
  std::vector<ScoredSample> v(samples.begin(), samples.end());
  std::sort(v.begin(), v.end(),
            [](const ScoredSample& a, const ScoredSample& b) { return a.score > b.score; });
  return v;
}

}  // namespace

double auc(std::span<const ScoredSample> samples) {
  const ClassCounts c = require_both(samples);
  std::vector<ScoredSample> v(samples.begin(), samples.end());
  std::sort(v.begin(), v.end(),
            [](const ScoredSample& a, const ScoredSample& b) { return a.score < b.score; });
  // Twice the Mann-Whitney count, so ties stay integral.
  std::int64_t twice = 0;
  std::int64_t neg_below = 0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    std::int64_t pos_here = 0;
    std::int64_t neg_here = 0;
    for (; j < v.size() && v[j].score == v[i].score; ++j) {
      (v[j].positive ? pos_here : neg_here) += 1;
    }
    twice += pos_here * (2 * neg_below + neg_here);
    neg_below += neg_here;
    i = j;
  }
  return static_cast<double>(twice) / (2.0 * static_cast<double>(c.pos) * static_cast<double>(c.neg));
}

std::vector<RocPoint> roc_curve(std::span<const ScoredSample> samples) {
  const ClassCounts c = require_both(samples);
  const auto v = sorted_desc(samples);
  std::vector<RocPoint> out;
  out.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    for (; j < v.size() && v[j].score == v[i].score; ++j) {
      (v[j].positive ? tp : fp) += 1;
    }
    out.push_back({static_cast<double>(fp) / static_cast<double>(c.neg),
                   static_cast<double>(tp) / static_cast<double>(c.pos), v[i].score});
    i = j;
  }
  return out;
}

double tpr_at_fpr(std::span<const ScoredSample> samples, double fpr_cap) {
  if (!(fpr_cap > 0.0 && fpr_cap < 1.0)) throw UsageError("fpr_cap must lie in (0, 1)");
  double best = 0.0;
  for (const RocPoint& p : roc_curve(samples)) {
    if (p.fpr <= fpr_cap) best = std::max(best, p.tpr);
  }
  return best;
}

std::string_view to_string(ThresholdRule r) {
  return r == ThresholdRule::zero ? "zero" : "best";
}

double accuracy(std::span<const ScoredSample> samples, ThresholdRule rule) {
  if (samples.empty()) throw DataError("accuracy: no samples");
  const ClassCounts c = count_classes(samples);
  const double n = static_cast<double>(samples.size());
  if (rule == ThresholdRule::zero) {
    std::int64_t correct = 0;
    for (const auto& s : samples) correct += ((s.score >= 0.0) == s.positive) ? 1 : 0;
    return static_cast<double>(correct) / n;
  }
  // Threshold above every score: everything negative.
  std::int64_t best = c.neg;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  const auto v = sorted_desc(samples);
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    for (; j < v.size() && v[j].score == v[i].score; ++j) {
      (v[j].positive ? tp : fp) += 1;
    }
    best = std::max(best, tp + (c.neg - fp));
    i = j;
  }
  return static_cast<double>(best) / n;
}

Eigen::MatrixXi confusion(std::span<const std::pair<std::string, std::string>> attributions,
                          std::span<const std::string> models) {
  std::map<std::string, int> index;
  for (std::size_t k = 0; k < models.size(); ++k) {
    if (!index.try_emplace(models[k], static_cast<int>(k)).second) {
      throw DataError("confusion: duplicate model id '" + models[k] + "'");
    }
  }
  const auto K = static_cast<Eigen::Index>(models.size());
  Eigen::MatrixXi m = Eigen::MatrixXi::Zero(K, K);
  for (const auto& [truth, decided] : attributions) {
    const auto r = index.find(truth);
    const auto c = index.find(decided);
    if (r == index.end()) throw DataError("confusion: unknown model id '" + truth + "'");
    if (c == index.end()) throw DataError("confusion: unknown model id '" + decided + "'");
    m(r->second, c->second) += 1;
  }
  return m;
}

EvalReport evaluate(std::span<const ScoredSample> samples) {
  const ClassCounts c = require_both(samples);
  EvalReport r;
  r.auc = auc(samples);
  r.tpr_at_5 = tpr_at_fpr(samples, 0.05);
  r.tpr_at_1 = tpr_at_fpr(samples, 0.01);
  r.accuracy_zero = accuracy(samples, ThresholdRule::zero);
  r.accuracy_best = accuracy(samples, ThresholdRule::best);
  r.roc_points = roc_curve(samples);
  r.n_pos = static_cast<int>(c.pos);
  r.n_neg = static_cast<int>(c.neg);
  return r;
}

}  // namespace dlmtrace
