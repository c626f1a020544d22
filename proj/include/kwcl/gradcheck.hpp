#pragma once

#include <algorithm>
#include <cmath>

#include "kwcl/types.hpp"

namespace kwcl {

/// Central finite differences of a scalar function over every coordinate
/// of `x`. `f` takes `const Matrix<Scalar>&`.
template <typename Scalar, typename Fn>
Matrix<Scalar> central_difference(Fn&& f, Matrix<Scalar> x, Scalar h) {
  Matrix<Scalar> grad(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) {
      const Scalar saved = x(i, j);
      x(i, j) = saved + h;
      const Scalar up = f(x);
      x(i, j) = saved - h;
      const Scalar down = f(x);
      x(i, j) = saved;
      grad(i, j) = (up - down) / (Scalar(2) * h);
    }
  }
  return grad;
}

/// max |analytic - numeric| / max(1, |numeric|) over all coordinates.
template <typename DerivedA, typename DerivedN>
typename DerivedA::Scalar max_relative_error(
    const Eigen::MatrixBase<DerivedA>& analytic,
    const Eigen::MatrixBase<DerivedN>& numeric) {
  using Scalar = typename DerivedA::Scalar;
  Scalar worst = 0;
  for (Index j = 0; j < analytic.cols(); ++j) {
    for (Index i = 0; i < analytic.rows(); ++i) {
      const Scalar n = numeric(i, j);
      const Scalar err = std::abs(analytic(i, j) - n) / std::max(Scalar(1), std::abs(n));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace kwcl
