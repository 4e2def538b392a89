#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dlmtrace/core.hpp"
#include "dlmtrace/features.hpp"

namespace dlmtrace {

/// How cells share Gaussian parameters: one per cell, one per step (row)
/// or one per position (col).
enum class Granularity { cell, row, col };

std::string_view to_string(Granularity g);
Granularity parse_granularity(std::string_view name);

inline constexpr double kDefaultVarianceFloor = 1e-6;

/// Per-cell Gaussian description of one model's feature maps. `mu` and
/// `var` are always T x L; row/col fits are broadcast.
struct Fingerprint {
  std::string model_id;
  Matrix mu;
  Matrix var;
  int n_samples = 0;
  double variance_floor = kDefaultVarianceFloor;
  Granularity granularity = Granularity::cell;
  /// Feature configuration the maps were built with; scoring refuses
  /// targets built differently.
  FeatureConfig features;

  Eigen::Index rows() const { return mu.rows(); }
  Eigen::Index cols() const { return mu.cols(); }
};

/// Population mean and variance (divide by N) across `maps`, two-pass in
/// extended precision, then var = max(var, variance_floor).
Fingerprint fit(std::span<const Matrix> maps, std::string model_id,
                double variance_floor = kDefaultVarianceFloor,
                Granularity granularity = Granularity::cell);

namespace detail {

void check_shape(const Fingerprint& fp, Eigen::Index rows, Eigen::Index cols);

template <typename F>
long double pairwise_sum(Eigen::Index begin, Eigen::Index end, const F& term) {
  if (end - begin <= 64) {
    long double s = 0.0L;
    for (Eigen::Index k = begin; k < end; ++k) s += term(k);
    return s;
  }
  const Eigen::Index mid = begin + (end - begin) / 2;
  return pairwise_sum(begin, mid, term) + pairwise_sum(mid, end, term);
}

}  // namespace detail

/// Quadratic part of the log-likelihood: -1/2 sum (x - mu)^2 / var.
template <typename Derived>
double loglik_quadratic(const Fingerprint& fp, const Eigen::MatrixBase<Derived>& target) {
  detail::check_shape(fp, target.rows(), target.cols());
  const MatrixX<double> x = target;
  const Eigen::Index cols = fp.cols();
  const long double s = detail::pairwise_sum(0, x.size(), [&](Eigen::Index k) {
    const Eigen::Index r = k / cols;
    const Eigen::Index c = k % cols;
    const long double d = static_cast<long double>(x(r, c)) - fp.mu(r, c);
    return d * d / static_cast<long double>(fp.var(r, c));
  });
  return static_cast<double>(-0.5L * s);
}

/// Normalisation part: -1/2 sum log(2 pi var). Independent of the target.
double loglik_constant(const Fingerprint& fp);

/// Independent-Gaussian log-likelihood of `target` under `fp`.
template <typename Derived>
double loglik(const Fingerprint& fp, const Eigen::MatrixBase<Derived>& target) {
  detail::check_shape(fp, target.rows(), target.cols());
  const MatrixX<double> x = target;
  const Eigen::Index cols = fp.cols();
  const long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  const long double s = detail::pairwise_sum(0, x.size(), [&](Eigen::Index k) {
    const Eigen::Index r = k / cols;
    const Eigen::Index c = k % cols;
    const long double v = fp.var(r, c);
    const long double d = static_cast<long double>(x(r, c)) - fp.mu(r, c);
    return d * d / v + std::log(two_pi * v);
  });
  return static_cast<double>(-0.5L * s);
}

struct AttributionScore {
  std::map<std::string, double> loglik;
  std::string decision;
  /// Best minus second-best log-likelihood.
  double margin = 0.0;
  /// The best log-likelihood was shared; decision fell to the smallest id.
  bool tie_broken = false;
};

/// Argmax attribution over >= 2 fingerprints with distinct ids.
AttributionScore attribute(std::span<const Fingerprint> fps, const Matrix& target);

/// loglik(pos) - loglik(neg); positive favours `pos`.
template <typename Derived>
double binary_score(const Fingerprint& pos, const Fingerprint& neg,
                    const Eigen::MatrixBase<Derived>& target) {
  return loglik(pos, target) - loglik(neg, target);
}

}  // namespace dlmtrace
