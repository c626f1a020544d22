#pragma once

// Kernel-weighted contrastive losses for continuous labels.
//
// Every sample of a batch serves once as anchor i; its view A(i) is the
// other N - 1 samples, with similarities s_k = <e_i, e_k> / tau and kernel
// weights w_k = K(y_i - y_k). Each loss is evaluated per anchor, averaged
// over active anchors, and differentiated through the similarities only:
// kernel weights are constants.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "kwcl/errors.hpp"
#include "kwcl/gradcheck.hpp"
#include "kwcl/kernel.hpp"
#include "kwcl/sphere.hpp"
#include "kwcl/types.hpp"

namespace kwcl {

enum class LossKind { InfoNce, YAware, Threshold, Exp, L1Baseline };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

inline bool is_contrastive(LossKind kind) { return kind != LossKind::L1Baseline; }

struct LossConfig {
  LossKind kind = LossKind::Exp;
  KernelSpec kernel;
  SimilarityConfig similarity;
  // Adds exp(s_k) to the denominators of the threshold and exp losses.
  bool include_positive_in_denominator = false;
};

/// Anchors whose total weight falls below this are skipped.
inline constexpr double kMinWeightMass = 1e-12;
/// Upper bound on the w_k / sum(w_t < w_k) multiplier of the threshold loss.
inline constexpr double kThresholdMultiplierCap = 1e6;

/// One anchor's contribution and its derivative with respect to the
/// similarities of the anchor's view.
template <typename Scalar>
struct AnchorTerm {
  Scalar value = 0;
  Vector<Scalar> grad;
  bool active = false;
  Index capped_terms = 0;
};

template <typename Scalar>
struct LossResult {
  Scalar value = 0;
  Matrix<Scalar> gradient;  // d value / d embeddings, N x d
  Vector<Scalar> per_anchor;
  std::vector<bool> active;
  Index active_anchors = 0;
  Index capped_terms = 0;
};

namespace detail {

// log(sum(exp(v))) with max subtraction.
template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Scalar m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

// log(exp(a) + exp(b))
template <typename Scalar>
Scalar log_add_exp(Scalar a, Scalar b) {
  const Scalar hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

template <typename Derived>
void check_anchor_inputs(const Eigen::MatrixBase<Derived>& w,
                         const Eigen::MatrixBase<Derived>& s) {
  if (w.size() != s.size()) {
    throw InvalidArgument("anchor weights and similarities differ in length");
  }
  if (w.size() == 0) throw InvalidArgument("anchor view is empty");
}

}  // namespace detail

/// InfoNCE with positives w_k = 1 and negatives w_t = 0. Each positive is
/// contrasted against itself plus all negatives; the anchor value is the
/// mean over positives. Inactive when either set is empty.
template <typename Scalar>
AnchorTerm<Scalar> infonce_anchor(const Vector<Scalar>& w, const Vector<Scalar>& s) {
  detail::check_anchor_inputs(w, s);
  const Index m = w.size();
  AnchorTerm<Scalar> out;
  out.grad = Vector<Scalar>::Zero(m);

  std::vector<Index> pos, neg;
  for (Index k = 0; k < m; ++k) (w(k) > Scalar(0.5) ? pos : neg).push_back(k);
  if (pos.empty() || neg.empty()) return out;

  Scalar neg_max = -std::numeric_limits<Scalar>::infinity();
  for (Index t : neg) neg_max = std::max(neg_max, s(t));
  Scalar neg_sum = 0;
  for (Index t : neg) neg_sum += std::exp(s(t) - neg_max);
  const Scalar neg_lse = neg_max + std::log(neg_sum);

  const Scalar inv_p = Scalar(1) / static_cast<Scalar>(pos.size());
  for (Index k : pos) {
    const Scalar lse = detail::log_add_exp(s(k), neg_lse);
    out.value += inv_p * (lse - s(k));
    out.grad(k) += inv_p * (std::exp(s(k) - lse) - Scalar(1));
    for (Index t : neg) out.grad(t) += inv_p * std::exp(s(t) - lse);
  }
  out.active = true;
  return out;
}

/// y-aware: -sum_k (w_k / sum w) log softmax(s)_k over the whole view.
template <typename Scalar>
AnchorTerm<Scalar> yaware_anchor(const Vector<Scalar>& w, const Vector<Scalar>& s) {
  detail::check_anchor_inputs(w, s);
  AnchorTerm<Scalar> out;
  out.grad = Vector<Scalar>::Zero(w.size());
  const Scalar mass = w.sum();
  if (!(mass >= Scalar(kMinWeightMass))) return out;

  const Scalar lse = detail::log_sum_exp(s);
  const Vector<Scalar> p = w / mass;
  out.value = lse - p.dot(s);
  out.grad = (s.array() - lse).exp().matrix() - p;
  out.active = true;
  return out;
}

/// Threshold: each k is contrasted only against samples with strictly
/// smaller weight. Terms with an empty strictly-smaller set contribute
/// nothing; the multiplier w_k / sum(w_t < w_k) is capped.
template <typename Scalar>
AnchorTerm<Scalar> threshold_anchor(const Vector<Scalar>& w, const Vector<Scalar>& s,
                                    bool include_positive) {
  detail::check_anchor_inputs(w, s);
  const Index m = w.size();
  AnchorTerm<Scalar> out;
  out.grad = Vector<Scalar>::Zero(m);
  if (!(w.sum() >= Scalar(kMinWeightMass))) return out;
  out.active = true;

  std::vector<Index> lesser;
  lesser.reserve(static_cast<std::size_t>(m));
  for (Index k = 0; k < m; ++k) {
    lesser.clear();
    Scalar lesser_mass = 0;
    Scalar hi = include_positive ? s(k) : -std::numeric_limits<Scalar>::infinity();
    for (Index t = 0; t < m; ++t) {
      if (w(t) < w(k)) {
        lesser.push_back(t);
        lesser_mass += w(t);
        hi = std::max(hi, s(t));
      }
    }
    if (lesser.empty()) continue;

    Scalar mult = lesser_mass > Scalar(0)
                      ? w(k) / lesser_mass
                      : std::numeric_limits<Scalar>::infinity();
    if (mult > Scalar(kThresholdMultiplierCap)) {
      mult = Scalar(kThresholdMultiplierCap);
      ++out.capped_terms;
    }

    Scalar sum = include_positive ? std::exp(s(k) - hi) : Scalar(0);
    for (Index t : lesser) sum += std::exp(s(t) - hi);
    const Scalar lse = hi + std::log(sum);

    out.value += mult * (lse - s(k));
    out.grad(k) -= mult;
    if (include_positive) out.grad(k) += mult * std::exp(s(k) - lse);
    for (Index t : lesser) out.grad(t) += mult * std::exp(s(t) - lse);
  }
  return out;
}

/// Exponential: repulsion of sample t is scaled by (1 - w_t) inside the
/// exponent, and the alignment terms are weighted by w_k / sum w.
template <typename Scalar>
AnchorTerm<Scalar> exp_anchor(const Vector<Scalar>& w, const Vector<Scalar>& s,
                              bool include_positive) {
  detail::check_anchor_inputs(w, s);
  const Index m = w.size();
  AnchorTerm<Scalar> out;
  out.grad = Vector<Scalar>::Zero(m);
  const Scalar mass = w.sum();
  if (!(mass >= Scalar(kMinWeightMass))) return out;
  out.active = true;

  const Vector<Scalar> a = (Scalar(1) - w.array()).matrix();
  const Vector<Scalar> u = a.cwiseProduct(s);

  for (Index k = 0; k < m; ++k) {
    if (w(k) == Scalar(0)) continue;
    if (m == 1 && !include_positive) continue;  // empty denominator

    Scalar hi = include_positive ? s(k) : -std::numeric_limits<Scalar>::infinity();
    for (Index t = 0; t < m; ++t) {
      if (t != k) hi = std::max(hi, u(t));
    }
    Scalar sum = include_positive ? std::exp(s(k) - hi) : Scalar(0);
    for (Index t = 0; t < m; ++t) {
      if (t != k) sum += std::exp(u(t) - hi);
    }
    const Scalar lse = hi + std::log(sum);
    const Scalar c = w(k) / mass;

    out.value += c * (lse - s(k));
    out.grad(k) -= c;
    if (include_positive) out.grad(k) += c * std::exp(s(k) - lse);
    for (Index t = 0; t < m; ++t) {
      if (t != k) out.grad(t) += c * a(t) * std::exp(u(t) - lse);
    }
  }
  return out;
}

namespace detail {

template <typename Scalar, typename AnchorFn>
LossResult<Scalar> batch_loss(const EmbeddingBatch<Scalar>& batch,
                              const Matrix<Scalar>& weights,
                              const SimilarityConfig& sim_cfg, AnchorFn&& anchor_fn) {
  const Index n = batch.size();
  if (n < 2) throw InvalidArgument("contrastive losses need a batch of at least 2");
  if (weights.rows() != n || weights.cols() != n) {
    throw InvalidArgument("weight matrix must be N x N");
  }
  const Matrix<Scalar> sim = similarity_matrix(batch, sim_cfg);

  LossResult<Scalar> out;
  out.per_anchor = Vector<Scalar>::Zero(n);
  out.active.assign(static_cast<std::size_t>(n), false);
  Matrix<Scalar> dsim = Matrix<Scalar>::Zero(n, n);

  Vector<Scalar> w(n - 1), s(n - 1);
  Scalar total = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0, j = 0; k < n; ++k) {
      if (k == i) continue;
      w(j) = weights(i, k);
      s(j) = sim(i, k);
      ++j;
    }
    const AnchorTerm<Scalar> term = anchor_fn(w, s);
    out.capped_terms += term.capped_terms;
    if (!term.active) continue;
    out.active[static_cast<std::size_t>(i)] = true;
    ++out.active_anchors;
    out.per_anchor(i) = term.value;
    total += term.value;
    for (Index k = 0, j = 0; k < n; ++k) {
      if (k == i) continue;
      dsim(i, k) = term.grad(j++);
    }
  }
  if (out.active_anchors == 0) {
    throw DegenerateBatch("every anchor in the batch was skipped");
  }
  const Scalar inv = Scalar(1) / static_cast<Scalar>(out.active_anchors);
  out.value = total * inv;
  dsim *= inv;
  const auto& e = batch.vectors();
  out.gradient = (dsim + dsim.transpose()) * e / static_cast<Scalar>(sim_cfg.temperature);
  return out;
}

}  // namespace detail

template <typename Scalar>
LossResult<Scalar> infonce_loss_from_weights(const EmbeddingBatch<Scalar>& batch,
                                             const std::type_identity_t<Matrix<Scalar>>& binary_weights,
                                             const LossConfig& cfg) {
  return detail::batch_loss(batch, binary_weights, cfg.similarity,
                            [](const Vector<Scalar>& w, const Vector<Scalar>& s) {
                              return infonce_anchor(w, s);
                            });
}

template <typename Scalar>
LossResult<Scalar> yaware_loss_from_weights(const EmbeddingBatch<Scalar>& batch,
                                            const std::type_identity_t<Matrix<Scalar>>& weights,
                                            const LossConfig& cfg) {
  return detail::batch_loss(batch, weights, cfg.similarity,
                            [](const Vector<Scalar>& w, const Vector<Scalar>& s) {
                              return yaware_anchor(w, s);
                            });
}

template <typename Scalar>
LossResult<Scalar> threshold_loss_from_weights(const EmbeddingBatch<Scalar>& batch,
                                               const std::type_identity_t<Matrix<Scalar>>& weights,
                                               const LossConfig& cfg) {
  const bool flag = cfg.include_positive_in_denominator;
  return detail::batch_loss(batch, weights, cfg.similarity,
                            [flag](const Vector<Scalar>& w, const Vector<Scalar>& s) {
                              return threshold_anchor(w, s, flag);
                            });
}

template <typename Scalar>
LossResult<Scalar> exp_loss_from_weights(const EmbeddingBatch<Scalar>& batch,
                                         const std::type_identity_t<Matrix<Scalar>>& weights,
                                         const LossConfig& cfg) {
  const bool flag = cfg.include_positive_in_denominator;
  return detail::batch_loss(batch, weights, cfg.similarity,
                            [flag](const Vector<Scalar>& w, const Vector<Scalar>& s) {
                              return exp_anchor(w, s, flag);
                            });
}

/// InfoNCE with positives defined by label equality.
template <typename Scalar>
LossResult<Scalar> infonce_loss(const EmbeddingBatch<Scalar>& batch,
                                const Vector<Scalar>& labels, const LossConfig& cfg) {
  return infonce_loss_from_weights(batch, equality_weight_matrix(labels), cfg);
}

template <typename Scalar>
LossResult<Scalar> yaware_loss(const EmbeddingBatch<Scalar>& batch,
                               const Vector<Scalar>& labels, const LossConfig& cfg) {
  return yaware_loss_from_weights(batch, kernel_weight_matrix(labels, cfg.kernel), cfg);
}

template <typename Scalar>
LossResult<Scalar> threshold_loss(const EmbeddingBatch<Scalar>& batch,
                                  const Vector<Scalar>& labels, const LossConfig& cfg) {
  return threshold_loss_from_weights(batch, kernel_weight_matrix(labels, cfg.kernel), cfg);
}

template <typename Scalar>
LossResult<Scalar> exp_loss(const EmbeddingBatch<Scalar>& batch,
                            const Vector<Scalar>& labels, const LossConfig& cfg) {
  return exp_loss_from_weights(batch, kernel_weight_matrix(labels, cfg.kernel), cfg);
}

/// Dispatches on cfg.kind; L1Baseline is not a contrastive loss.
template <typename Scalar>
LossResult<Scalar> contrastive_loss(const EmbeddingBatch<Scalar>& batch,
                                    const Vector<Scalar>& labels, const LossConfig& cfg) {
  if (batch.size() != labels.size()) {
    throw InvalidArgument("embedding and label counts differ");
  }
  switch (cfg.kind) {
    case LossKind::InfoNce:
      return infonce_loss(batch, labels, cfg);
    case LossKind::YAware:
      return yaware_loss(batch, labels, cfg);
    case LossKind::Threshold:
      return threshold_loss(batch, labels, cfg);
    case LossKind::Exp:
      return exp_loss(batch, labels, cfg);
    case LossKind::L1Baseline:
      break;
  }
  throw InvalidArgument("contrastive_loss called with the L1 baseline kind");
}

template <typename Scalar>
struct ScalarLossResult {
  Scalar value = 0;
  Vector<Scalar> gradient;
};

/// Mean absolute error with subgradient sign(pred - label) / N, zero at
/// exact ties.
template <typename Scalar>
ScalarLossResult<Scalar> l1_regression_loss(const Vector<Scalar>& predictions,
                                            const Vector<Scalar>& labels) {
  if (predictions.size() != labels.size()) {
    throw InvalidArgument("l1_regression_loss: length mismatch");
  }
  if (predictions.size() == 0) throw InvalidArgument("l1_regression_loss: empty input");
  const Scalar n = static_cast<Scalar>(predictions.size());
  const Vector<Scalar> r = predictions - labels;
  ScalarLossResult<Scalar> out;
  out.value = r.cwiseAbs().sum() / n;
  out.gradient = r.unaryExpr([n](Scalar v) {
    return v > Scalar(0) ? Scalar(1) / n : (v < Scalar(0) ? Scalar(-1) / n : Scalar(0));
  });
  return out;
}

/// Compares the analytic gradient with central differences of step h taken
/// on the raw (pre-normalization) rows. For L1Baseline, `raw` is an N x 1
/// column of predictions. Returns max |a - n| / max(1, |n|).
template <typename Scalar>
Scalar loss_gradient_check(const LossConfig& cfg, const Matrix<Scalar>& raw,
                           const Vector<Scalar>& labels, Scalar h) {
  if (!(h >= Scalar(1e-7) && h <= Scalar(1e-3))) {
    throw InvalidArgument("finite-difference step must lie in [1e-7, 1e-3]");
  }
  if (cfg.kind == LossKind::L1Baseline) {
    if (raw.cols() != 1) throw InvalidArgument("L1 gradient check expects N x 1 predictions");
    const Vector<Scalar> analytic = l1_regression_loss<Scalar>(raw.col(0), labels).gradient;
    auto f = [&](const Matrix<Scalar>& x) {
      return l1_regression_loss<Scalar>(x.col(0), labels).value;
    };
    return max_relative_error(analytic, central_difference<Scalar>(f, raw, h));
  }
  const auto result = contrastive_loss(normalize_rows(raw), labels, cfg);
  const Matrix<Scalar> analytic = normalize_rows_backward(raw, result.gradient);
  auto f = [&](const Matrix<Scalar>& x) {
    return contrastive_loss(normalize_rows(x), labels, cfg).value;
  };
  return max_relative_error(analytic, central_difference<Scalar>(f, raw, h));
}

}  // namespace kwcl
