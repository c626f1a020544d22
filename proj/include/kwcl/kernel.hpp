#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "kwcl/errors.hpp"
#include "kwcl/types.hpp"

namespace kwcl {

enum class KernelFamily { Rbf };

/// Similarity kernel on label differences. `sigma` is in label units
/// (years for age).
struct KernelSpec {
  KernelFamily family = KernelFamily::Rbf;
  double sigma = 2.0;
};

inline void validate(const KernelSpec& spec) {
  if (!(spec.sigma > 0.0) || !std::isfinite(spec.sigma)) {
    throw InvalidArgument("kernel sigma must be positive and finite, got " +
                          std::to_string(spec.sigma));
  }
}

/// exp(-delta^2 / (2 sigma^2)). Always in (0, 1] for finite delta, with
/// exactly 1 at delta == 0.
template <typename Scalar>
Scalar kernel_eval(Scalar delta, const KernelSpec& spec) {
  validate(spec);
  if (!std::isfinite(delta)) {
    throw InvalidArgument("kernel_eval: non-finite label difference");
  }
  const Scalar z = delta / static_cast<Scalar>(spec.sigma);
  return std::exp(Scalar(-0.5) * z * z);
}

/// Degree-of-similarity weights of every label against one anchor label.
template <typename Derived>
Vector<typename Derived::Scalar> weights_for_anchor(
    typename Derived::Scalar anchor_label,
    const Eigen::MatrixBase<Derived>& labels, const KernelSpec& spec) {
  using Scalar = typename Derived::Scalar;
  if (labels.size() == 0) {
    throw InvalidArgument("weights_for_anchor: empty label array");
  }
  Vector<Scalar> w(labels.size());
  for (Index k = 0; k < labels.size(); ++k) {
    w(k) = kernel_eval<Scalar>(anchor_label - labels(k), spec);
  }
  return w;
}

/// N x N matrix with entry (i, k) = K(y_i - y_k). The diagonal is 1 and is
/// never read by the losses.
template <typename Derived>
Matrix<typename Derived::Scalar> kernel_weight_matrix(
    const Eigen::MatrixBase<Derived>& labels, const KernelSpec& spec) {
  using Scalar = typename Derived::Scalar;
  const Index n = labels.size();
  Matrix<Scalar> w(n, n);
  for (Index i = 0; i < n; ++i) {
    w.col(i) = weights_for_anchor(labels(i), labels, spec);
  }
  return w;
}

/// Binary class-membership weights: 1 where two labels are equal.
template <typename Derived>
Matrix<typename Derived::Scalar> equality_weight_matrix(
    const Eigen::MatrixBase<Derived>& labels) {
  using Scalar = typename Derived::Scalar;
  const Index n = labels.size();
  Matrix<Scalar> w(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < n; ++k) {
      w(i, k) = labels(i) == labels(k) ? Scalar(1) : Scalar(0);
    }
  }
  return w;
}

inline std::string_view to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::Rbf:
      return "rbf";
  }
  return "rbf";
}

inline KernelFamily parse_kernel_family(std::string_view s) {
  if (s == "rbf" || s == "RBF") return KernelFamily::Rbf;
  throw InvalidArgument("unknown kernel family '" + std::string(s) + "'");
}

}  // namespace kwcl
