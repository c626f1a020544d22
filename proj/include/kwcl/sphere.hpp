#pragma once

#include <cmath>
#include <string>

#include "kwcl/errors.hpp"
#include "kwcl/types.hpp"

namespace kwcl {

/// Row-wise embeddings on the unit hypersphere. Only constructible through
/// normalize_rows() or from_unit_rows(), which enforce the unit-norm rows.
template <typename Scalar>
class EmbeddingBatch {
 public:
  static constexpr double kNormTolerance = 1e-9;

  EmbeddingBatch() = default;

  static EmbeddingBatch from_unit_rows(Matrix<Scalar> rows) {
    for (Index i = 0; i < rows.rows(); ++i) {
      const Scalar norm = rows.row(i).norm();
      if (!(std::abs(norm - Scalar(1)) <= Scalar(kNormTolerance))) {
        throw InvalidArgument("embedding row " + std::to_string(i) +
                              " is not unit norm");
      }
    }
    return EmbeddingBatch(std::move(rows));
  }

  const Matrix<Scalar>& vectors() const { return vectors_; }
  Index size() const { return vectors_.rows(); }
  Index dim() const { return vectors_.cols(); }

 private:
  explicit EmbeddingBatch(Matrix<Scalar> v) : vectors_(std::move(v)) {}

  template <typename Derived>
  friend EmbeddingBatch<typename Derived::Scalar> normalize_rows(
      const Eigen::MatrixBase<Derived>& m);

  Matrix<Scalar> vectors_;
};

template <typename Derived>
EmbeddingBatch<typename Derived::Scalar> normalize_rows(
    const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> out(m.rows(), m.cols());
  for (Index i = 0; i < m.rows(); ++i) {
    const Scalar norm = m.row(i).norm();
    if (!(norm > Scalar(0)) || !std::isfinite(norm)) {
      throw DegenerateInput(
          "cannot normalize row " + std::to_string(i) + ": zero or non-finite norm", i);
    }
    out.row(i) = m.row(i) / norm;
  }
  return EmbeddingBatch<Scalar>(std::move(out));
}

/// Vector-Jacobian product of row normalization: for e = x / |x|,
/// dL/dx = (g - e (e . g)) / |x|.
template <typename DerivedX, typename DerivedG>
Matrix<typename DerivedX::Scalar> normalize_rows_backward(
    const Eigen::MatrixBase<DerivedX>& raw,
    const Eigen::MatrixBase<DerivedG>& grad_normalized) {
  using Scalar = typename DerivedX::Scalar;
  Matrix<Scalar> out(raw.rows(), raw.cols());
  for (Index i = 0; i < raw.rows(); ++i) {
    const Scalar norm = raw.row(i).norm();
    const RowVector<Scalar> e = raw.row(i) / norm;
    const Scalar proj = e.dot(grad_normalized.row(i));
    out.row(i) = (grad_normalized.row(i) - proj * e) / norm;
  }
  return out;
}

struct SimilarityConfig {
  double temperature = 0.1;
};

inline void validate(const SimilarityConfig& cfg) {
  if (!(cfg.temperature > 0.0) || !std::isfinite(cfg.temperature)) {
    throw InvalidArgument("temperature must be positive and finite");
  }
}

/// Cosine similarity divided by the temperature. Entries lie in
/// [-1/tau, 1/tau]; the diagonal holds self-similarity and is ignored by
/// every anchor view.
template <typename Scalar>
Matrix<Scalar> similarity_matrix(const EmbeddingBatch<Scalar>& batch,
                                 const SimilarityConfig& cfg) {
  validate(cfg);
  const auto& e = batch.vectors();
  Matrix<Scalar> s = e * e.transpose();
  s /= static_cast<Scalar>(cfg.temperature);
  // Make the result exactly symmetric regardless of GEMM blocking.
  s = (Scalar(0.5) * (s + s.transpose())).eval();
  return s;
}

}  // namespace kwcl
