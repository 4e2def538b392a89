#pragma once

// Reference implementations used only by the tests. They are written
// straight from the definitions, favour plain loops over speed, and share
// no code with the library beyond its data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dlmtrace/ddm.hpp"
#include "dlmtrace/metrics.hpp"
#include "dlmtrace/trajectory.hpp"

namespace oracle {

using Grid = std::vector<std::vector<double>>;

inline Grid to_grid(const dlmtrace::Matrix& m) {
  Grid g(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) g[r][c] = m(r, c);
  return g;
}

// Effect map of one trajectory, one transition at a time.
inline Grid ddm(const dlmtrace::Trajectory& t, const dlmtrace::EffectValues& ev,
                bool tie_plus_beta = true) {
  const int T = static_cast<int>(t.steps.size());
  const int L = t.num_tokens;
  Grid E(T, std::vector<double>(L, 0.0));
  std::vector<bool> decoded(L, false);  // U_i
  for (int p : t.steps[0].newly_decoded) decoded[p] = true;

  for (int i = 0; i + 1 < T; ++i) {
    const auto& now = t.steps[i].confidences;
    const auto& next = t.steps[i + 1].confidences;

    bool any_prior = false;
    bool some_up = false;
    bool some_down = false;
    for (int p = 0; p < L; ++p) {
      if (!decoded[p]) continue;
      any_prior = true;
      const long double d = static_cast<long double>(*next[p]) - static_cast<long double>(*now[p]);
      if (d > 0) {
        E[i + 1][p] = ev.gamma;
        some_up = true;
      } else if (d < 0) {
        E[i + 1][p] = -ev.gamma;
        some_down = true;
      } else {
        E[i + 1][p] = 0.0;
      }
    }

    double code;
    if (!any_prior) {
      code = 0.0;
    } else if (some_up && some_down) {
      code = ev.alpha;
    } else if (some_up) {
      code = ev.beta;
    } else if (some_down) {
      code = -ev.beta;
    } else {
      code = tie_plus_beta ? ev.beta : 0.0;
    }
    for (int n : t.steps[i + 1].newly_decoded) E[i + 1][n] = code;
    for (int n : t.steps[i + 1].newly_decoded) decoded[n] = true;
  }
  return E;
}

// Population mean and variance per cell, two passes.
struct Moments {
  Grid mean;
  Grid var;
};

inline Moments moments(const std::vector<dlmtrace::Matrix>& maps) {
  const auto rows = maps.front().rows();
  const auto cols = maps.front().cols();
  const long double n = static_cast<long double>(maps.size());
  Moments m{Grid(rows, std::vector<double>(cols)), Grid(rows, std::vector<double>(cols))};
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      long double s = 0;
      for (const auto& x : maps) s += x(r, c);
      const long double mu = s / n;
      long double ss = 0;
      for (const auto& x : maps) ss += (x(r, c) - mu) * (x(r, c) - mu);
      m.mean[r][c] = static_cast<double>(mu);
      m.var[r][c] = static_cast<double>(ss / n);
    }
  }
  return m;
}

inline double loglik(const Grid& mu, const Grid& var, const dlmtrace::Matrix& x) {
  const long double pi = 3.141592653589793238462643383279502884L;
  long double s = 0;
  for (std::size_t r = 0; r < mu.size(); ++r) {
    for (std::size_t c = 0; c < mu[r].size(); ++c) {
      const long double d = x(r, c) - static_cast<long double>(mu[r][c]);
      s += d * d / var[r][c] + std::log(2 * pi * var[r][c]);
    }
  }
  return static_cast<double>(-s / 2);
}

inline double auc(const std::vector<dlmtrace::ScoredSample>& v) {
  double num = 0;
  double pairs = 0;
  for (const auto& a : v) {
    if (!a.positive) continue;
    for (const auto& b : v) {
      if (b.positive) continue;
      pairs += 1;
      if (a.score > b.score) num += 1;
      if (a.score == b.score) num += 0.5;
    }
  }
  return num / pairs;
}

// Every "score >= t" rule, t over the distinct scores and +inf.
struct SweepPoint {
  int tp = 0;
  int fp = 0;
};

inline std::vector<SweepPoint> sweep(const std::vector<dlmtrace::ScoredSample>& v) {
  std::vector<double> ts;
  for (const auto& s : v) ts.push_back(s.score);
  ts.push_back(std::numeric_limits<double>::infinity());
  std::vector<SweepPoint> out;
  for (double t : ts) {
    SweepPoint p;
    for (const auto& s : v) {
      if (s.score >= t) (s.positive ? p.tp : p.fp) += 1;
    }
    out.push_back(p);
  }
  return out;
}

inline double tpr_at_fpr(const std::vector<dlmtrace::ScoredSample>& v, double cap) {
  int P = 0;
  int N = 0;
  for (const auto& s : v) (s.positive ? P : N) += 1;
  double best = 0;
  for (const auto& p : sweep(v)) {
    if (static_cast<double>(p.fp) / N <= cap) best = std::max(best, static_cast<double>(p.tp) / P);
  }
  return best;
}

inline double accuracy_best(const std::vector<dlmtrace::ScoredSample>& v) {
  int N = 0;
  for (const auto& s : v) N += s.positive ? 0 : 1;
  int best = 0;
  for (const auto& p : sweep(v)) best = std::max(best, p.tp + (N - p.fp));
  return static_cast<double>(best) / v.size();
}

inline double accuracy_zero(const std::vector<dlmtrace::ScoredSample>& v) {
  int ok = 0;
  for (const auto& s : v) ok += ((s.score >= 0) == s.positive) ? 1 : 0;
  return static_cast<double>(ok) / v.size();
}

// DBSCAN from its definition: clusters are connected components of the
// core graph, numbered by their smallest core index; a border point joins
// the lowest-numbered cluster with a core inside its radius.
inline std::vector<int> dbscan(const std::vector<std::vector<double>>& pts, double eps, int min_pts) {
  const std::size_t n = pts.size();
  auto near = [&](std::size_t a, std::size_t b) {
    double s = 0;
    for (std::size_t k = 0; k < pts[a].size(); ++k) s += (pts[a][k] - pts[b][k]) * (pts[a][k] - pts[b][k]);
    return std::sqrt(s) <= eps;
  };
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) {
    int count = 0;
    for (std::size_t j = 0; j < n; ++j) count += near(i, j) ? 1 : 0;
    core[i] = count >= min_pts;
  }
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (core[i] && core[j] && near(i, j)) parent[find(i)] = find(j);

  std::vector<int> label(n, -1);
  std::vector<int> root_label(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    const std::size_t r = find(i);
    if (root_label[r] < 0) root_label[r] = next++;
    label[i] = root_label[r];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    int best = -1;
    for (std::size_t j = 0; j < n; ++j) {
      if (core[j] && near(i, j) && (best < 0 || label[j] < best)) best = label[j];
    }
    label[i] = best;
  }
  return label;
}

inline double perplexity(const dlmtrace::Trajectory& t) {
  double nll = 0;
  int count = 0;
  for (const auto& step : t.steps) {
    for (int p : step.newly_decoded) {
      nll -= std::log(*step.confidences[p]);
      ++count;
    }
  }
  return std::exp(nll / count);
}

inline double distance(const dlmtrace::Matrix& a, const dlmtrace::Matrix& b) {
  double s = 0;
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c) s += (a(r, c) - b(r, c)) * (a(r, c) - b(r, c));
  return std::sqrt(s);
}

// Random valid trajectory. Confidences come from a coarse grid so that
// unchanged values (zero deltas) are common.
inline dlmtrace::Trajectory random_trajectory(std::mt19937_64& rng, int max_steps, int max_tokens,
                                              bool semi = false) {
  std::uniform_int_distribution<int> len(1, max_tokens);
  dlmtrace::Trajectory t;
  t.model_id = "m";
  t.prompt_id = "p" + std::to_string(rng() % 1000);
  t.num_tokens = len(rng);
  t.strategy = dlmtrace::Strategy::low_confidence;
  t.block_size = t.num_tokens;
  if (semi) {
    std::vector<int> divisors;
    for (int b = 1; b <= t.num_tokens; ++b)
      if (t.num_tokens % b == 0) divisors.push_back(b);
    t.strategy = dlmtrace::Strategy::semi_autoregressive;
    t.block_size = divisors[rng() % divisors.size()];
  }
  const int L = t.num_tokens;

  std::vector<int> order(L);
  std::iota(order.begin(), order.end(), 0);
  if (semi) {
    for (int b = 0; b < L; b += t.block_size)
      std::shuffle(order.begin() + b, order.begin() + b + t.block_size, rng);
  } else {
    std::shuffle(order.begin(), order.end(), rng);
  }

  std::uniform_int_distribution<int> steps(1, max_steps);
  const int T = steps(rng);
  std::uniform_int_distribution<int> level(1, 10);
  std::size_t next = 0;
  std::vector<bool> decoded(L, false);
  for (int i = 0; i < T; ++i) {
    dlmtrace::DecodeStep s;
    const int remaining = static_cast<int>(order.size() - next);
    const int take = i + 1 == T ? remaining : std::uniform_int_distribution<int>(0, std::min(2, remaining))(rng);
    for (int k = 0; k < take; ++k) {
      s.newly_decoded.push_back(order[next]);
      decoded[order[next]] = true;
      ++next;
    }
    std::sort(s.newly_decoded.begin(), s.newly_decoded.end());
    s.confidences.resize(L);
    for (int p = 0; p < L; ++p) {
      if (decoded[p]) s.confidences[p] = level(rng) / 10.0;
    }
    t.steps.push_back(std::move(s));
  }
  return t;
}

// Gaussian blobs around a few random centres plus uniform background, so
// that core, border and noise points all occur for eps near 1.
inline std::vector<std::vector<double>> random_blobs(std::mt19937_64& rng, int n, int dim) {
  std::uniform_int_distribution<int> nc(1, 4);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> spread(0.05, 0.5);
  const int k = nc(rng);
  std::vector<std::vector<double>> centres(k, std::vector<double>(dim));
  for (auto& c : centres)
    for (auto& x : c) x = u(rng);
  const double sd = spread(rng) / std::sqrt(static_cast<double>(dim));
  std::normal_distribution<double> g(0.0, sd);
  std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
  for (auto& p : pts) {
    if (rng() % 5 == 0) {
      for (auto& x : p) x = u(rng);
    } else {
      const auto& c = centres[rng() % k];
      for (int d = 0; d < dim; ++d) p[d] = c[d] + g(rng);
    }
  }
  return pts;
}

// Scores on a coarse grid so that ties are frequent; both classes present.
inline std::vector<dlmtrace::ScoredSample> random_scores(std::mt19937_64& rng, int max_n) {
  const int n = std::uniform_int_distribution<int>(2, max_n)(rng);
  const int levels = std::uniform_int_distribution<int>(2, 40)(rng);
  std::uniform_int_distribution<int> lvl(-levels / 2, levels / 2);
  std::vector<dlmtrace::ScoredSample> v(n);
  for (int i = 0; i < n; ++i) {
    v[i].positive = rng() % 2 == 0;
    v[i].score = lvl(rng) * 0.25 + (v[i].positive ? 0.5 : 0.0);
  }
  v[0].positive = true;
  v[1].positive = false;
  return v;
}

}  // namespace oracle
