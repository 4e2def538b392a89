#include "dlmtrace/analysis.hpp"

#include "dlmtrace/baselines.hpp"

namespace dlmtrace {

Eigen::VectorXd svd_spectrum(std::span<const Matrix> maps, bool center) {
  if (maps.empty()) throw DataError("svd_spectrum: no maps");
  for (const auto& m : maps) {
    if (m.rows() != maps.front().rows() || m.cols() != maps.front().cols()) {
      throw DataError("svd_spectrum: shape mismatch");
    }
  }
  return svd_spectrum(stack_rows(maps), center);
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw DataError("cosine_similarity: length mismatch");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 && nb == 0.0) return 1.0;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

SpectrumComparison spectrum_compare(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                    Eigen::Index head_k) {
  if (a.size() != b.size()) throw DataError("spectrum_compare: length mismatch");
  if (head_k < 1 || head_k >= a.size()) {
    throw UsageError("spectrum_compare: head_k must lie in [1, length)");
  }
  SpectrumComparison out;
  out.head_similarity = cosine_similarity(a.head(head_k), b.head(head_k));
  const Eigen::Index tail = a.size() - head_k;
  const double denom = a.tail(tail).norm() + b.tail(tail).norm();
  out.tail_divergence = denom == 0.0 ? 0.0 : (a.tail(tail) - b.tail(tail)).norm() / denom;
  return out;
}

}  // namespace dlmtrace
