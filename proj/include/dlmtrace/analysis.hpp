#pragma once

#include <span>

#include "dlmtrace/core.hpp"

namespace dlmtrace {

/// Singular values (descending) of the N x (T*L) stack of row-major
/// flattened maps, optionally column-centred first. Returns min(N, T*L)
/// values. A single map with `center` yields an all-zero spectrum.
Eigen::VectorXd svd_spectrum(std::span<const Matrix> maps, bool center);

/// Same, for an already stacked matrix (one sample per row).
template <typename Derived>
Eigen::VectorXd svd_spectrum(const Eigen::MatrixBase<Derived>& stack, bool center) {
  Eigen::MatrixXd x = stack;
  if (center && x.rows() > 0) {
    // Corrected two-pass mean: constant columns centre to exact zeros.
    Eigen::RowVectorXd mean = x.colwise().mean();
    mean += (x.rowwise() - mean).colwise().sum() / static_cast<double>(x.rows());
    x.rowwise() -= mean;
  }
  if (x.size() == 0) return Eigen::VectorXd();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(x);
  return svd.singularValues();
}

struct SpectrumComparison {
  /// Cosine similarity of the leading head_k values.
  double head_similarity;
  /// ||a_tail - b_tail|| / (||a_tail|| + ||b_tail||), 0 when both are zero.
  double tail_divergence;
};

SpectrumComparison spectrum_compare(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                    Eigen::Index head_k);

/// Cosine similarity; 1 when both vectors are zero, 0 when exactly one is.
double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace dlmtrace
