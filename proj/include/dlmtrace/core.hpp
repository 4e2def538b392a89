#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dlmtrace {

/// Dense row-major matrix. Row-major storage makes the flattening used by
/// the clustering, distance and SVD code a zero-copy view.
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Matrix = MatrixX<double>;
using RowVector = RowVectorX<double>;

/// Input data violates a documented contract (bad record, shape mismatch...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller supplied an invalid argument or configuration.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Row-major flattening of any dense expression into a row vector.
template <typename Derived>
RowVectorX<typename Derived::Scalar> flatten(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const MatrixX<Scalar> rm = m;
  return Eigen::Map<const RowVectorX<Scalar>>(rm.data(), rm.size());
}

/// Appends zero rows until `m` has `rows` rows.
template <typename Derived>
MatrixX<typename Derived::Scalar> pad_rows(const Eigen::MatrixBase<Derived>& m, Eigen::Index rows) {
  using Scalar = typename Derived::Scalar;
  if (rows < m.rows()) {
    throw UsageError("pad_rows: target row count smaller than input");
  }
  MatrixX<Scalar> out = MatrixX<Scalar>::Zero(rows, m.cols());
  out.topRows(m.rows()) = m;
  return out;
}

inline std::string shape_string(Eigen::Index rows, Eigen::Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

}  // namespace dlmtrace
