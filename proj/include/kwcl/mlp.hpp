#pragma once

// Feed-forward encoder: standardization, rectified hidden layers and a
// linear output layer. A sphere encoder row-normalizes the output; a scalar
// encoder emits one regression value per row and exposes its last hidden
// layer as the representation.

#include <cmath>
#include <cstdint>
#include <type_traits>
#include <vector>

#include "kwcl/errors.hpp"
#include "kwcl/random.hpp"
#include "kwcl/sphere.hpp"
#include "kwcl/types.hpp"

namespace kwcl {

enum class OutputKind { Sphere, Scalar };

template <typename Scalar>
struct DenseLayer {
  Matrix<Scalar> weight;  // out x in
  Vector<Scalar> bias;    // out

  Index in_dim() const { return weight.cols(); }
  Index out_dim() const { return weight.rows(); }
};

template <typename Scalar>
struct EncoderParams {
  OutputKind output_kind = OutputKind::Sphere;
  Vector<Scalar> input_mean;   // subtracted from features
  Vector<Scalar> input_scale;  // features are divided by this
  std::vector<DenseLayer<Scalar>> hidden;
  DenseLayer<Scalar> output;
  // Scalar encoders report label = label_offset + label_scale * raw output.
  Scalar label_offset = 0;
  Scalar label_scale = 1;

  Index input_dim() const { return input_mean.size(); }
  Index output_dim() const { return output.out_dim(); }
  Index representation_dim() const {
    if (output_kind == OutputKind::Sphere) return output.out_dim();
    return hidden.empty() ? input_dim() : hidden.back().out_dim();
  }
  Index parameter_count() const {
    Index n = output.weight.size() + output.bias.size();
    for (const auto& l : hidden) n += l.weight.size() + l.bias.size();
    return n;
  }
};

/// He-initialized encoder with identity standardization.
template <typename Scalar>
EncoderParams<Scalar> init_encoder(Index input_dim, const std::vector<Index>& hidden_dims,
                                   Index output_dim, OutputKind kind, std::uint64_t seed) {
  if (input_dim < 1 || output_dim < 1) throw InvalidArgument("encoder dimensions must be positive");
  if (kind == OutputKind::Sphere && output_dim < 2) {
    throw InvalidArgument("sphere encoders need an output dimension of at least 2");
  }
  Rng rng = make_rng(seed, 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto make_layer = [&](Index in, Index out, double gain) {
    DenseLayer<Scalar> layer;
    layer.weight.resize(out, in);
    const double sd = std::sqrt(gain / static_cast<double>(in));
    for (Index j = 0; j < in; ++j) {
      for (Index i = 0; i < out; ++i) layer.weight(i, j) = static_cast<Scalar>(sd * normal(rng));
    }
    layer.bias = Vector<Scalar>::Zero(out);
    return layer;
  };

  EncoderParams<Scalar> p;
  p.output_kind = kind;
  p.input_mean = Vector<Scalar>::Zero(input_dim);
  p.input_scale = Vector<Scalar>::Ones(input_dim);
  Index prev = input_dim;
  for (Index h : hidden_dims) {
    if (h < 1) throw InvalidArgument("hidden layer widths must be positive");
    p.hidden.push_back(make_layer(prev, h, 2.0));
    prev = h;
  }
  p.output = make_layer(prev, output_dim, 1.0);
  return p;
}

template <typename Scalar>
struct ForwardCache {
  // activations[0] is the standardized input; activations[l + 1] is the
  // rectified output of hidden layer l.
  std::vector<Matrix<Scalar>> activations;
  Matrix<Scalar> output;  // linear output before normalization
};

template <typename Scalar, typename Derived>
ForwardCache<Scalar> mlp_forward(const EncoderParams<Scalar>& p,
                                 const Eigen::MatrixBase<Derived>& features) {
  if (features.cols() != p.input_dim()) {
    throw InvalidArgument("feature width " + std::to_string(features.cols()) +
                          " does not match encoder input " + std::to_string(p.input_dim()));
  }
  ForwardCache<Scalar> c;
  c.activations.reserve(p.hidden.size() + 1);
  c.activations.push_back(
      ((features.rowwise() - p.input_mean.transpose()).array().rowwise() /
       p.input_scale.transpose().array())
          .matrix());
  for (const auto& layer : p.hidden) {
    Matrix<Scalar> z = c.activations.back() * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    c.activations.push_back(z.cwiseMax(Scalar(0)));
  }
  c.output = c.activations.back() * p.output.weight.transpose();
  c.output.rowwise() += p.output.bias.transpose();
  return c;
}

/// Parameter gradients, shaped like the parameters. Either upstream
/// gradient may be null: `d_output` flows through the output layer,
/// `d_last_hidden` enters directly at the last hidden activation.
template <typename Scalar>
EncoderParams<Scalar> mlp_backward(const EncoderParams<Scalar>& p, const ForwardCache<Scalar>& c,
                                   const std::type_identity_t<Matrix<Scalar>>* d_output,
                                   const std::type_identity_t<Matrix<Scalar>>* d_last_hidden) {
  EncoderParams<Scalar> g;
  g.output_kind = p.output_kind;
  g.input_mean = Vector<Scalar>::Zero(p.input_dim());
  g.input_scale = Vector<Scalar>::Zero(p.input_dim());
  g.output.weight = Matrix<Scalar>::Zero(p.output.out_dim(), p.output.in_dim());
  g.output.bias = Vector<Scalar>::Zero(p.output.out_dim());
  g.hidden.resize(p.hidden.size());

  const Matrix<Scalar>& last = c.activations.back();
  Matrix<Scalar> delta = Matrix<Scalar>::Zero(last.rows(), last.cols());
  if (d_output != nullptr) {
    g.output.weight = d_output->transpose() * last;
    g.output.bias = d_output->colwise().sum().transpose();
    delta = *d_output * p.output.weight;
  }
  if (d_last_hidden != nullptr) delta += *d_last_hidden;

  for (std::size_t l = p.hidden.size(); l-- > 0;) {
    const Matrix<Scalar>& out = c.activations[l + 1];
    const Matrix<Scalar>& in = c.activations[l];
    const Matrix<Scalar> dz = (out.array() > Scalar(0)).select(delta, Scalar(0));
    g.hidden[l].weight = dz.transpose() * in;
    g.hidden[l].bias = dz.colwise().sum().transpose();
    if (l > 0) delta = dz * p.hidden[l].weight;
  }
  return g;
}

/// Embeddings on the unit sphere for a sphere encoder.
template <typename Scalar, typename Derived>
EmbeddingBatch<Scalar> encoder_forward(const EncoderParams<Scalar>& p,
                                       const Eigen::MatrixBase<Derived>& features) {
  if (p.output_kind != OutputKind::Sphere) {
    throw InvalidArgument("encoder_forward requires a sphere encoder");
  }
  return normalize_rows(mlp_forward(p, features).output);
}

/// Frozen representations used by probes and readouts: normalized
/// embeddings for sphere encoders, last hidden activations otherwise.
template <typename Scalar, typename Derived>
Matrix<Scalar> encoder_representations(const EncoderParams<Scalar>& p,
                                       const Eigen::MatrixBase<Derived>& features) {
  ForwardCache<Scalar> c = mlp_forward(p, features);
  if (p.output_kind == OutputKind::Sphere) return normalize_rows(c.output).vectors();
  return std::move(c.activations.back());
}

/// Regression output of a scalar encoder in label units.
template <typename Scalar, typename Derived>
Vector<Scalar> encoder_predict(const EncoderParams<Scalar>& p,
                               const Eigen::MatrixBase<Derived>& features) {
  if (p.output_kind != OutputKind::Scalar) {
    throw InvalidArgument("encoder_predict requires a scalar encoder");
  }
  const ForwardCache<Scalar> c = mlp_forward(p, features);
  return (p.label_offset + p.label_scale * c.output.col(0).array()).matrix();
}

/// Trainable parameters in a fixed order: hidden layers then output, each
/// weight (column-major) followed by its bias.
template <typename Scalar>
Vector<Scalar> pack_parameters(const EncoderParams<Scalar>& p) {
  Vector<Scalar> v(p.parameter_count());
  Index at = 0;
  auto put = [&](const auto& m) {
    v.segment(at, m.size()) = Eigen::Map<const Vector<Scalar>>(m.data(), m.size());
    at += m.size();
  };
  for (const auto& l : p.hidden) {
    put(l.weight);
    put(l.bias);
  }
  put(p.output.weight);
  put(p.output.bias);
  return v;
}

template <typename Scalar>
void unpack_parameters(EncoderParams<Scalar>& p, const Vector<Scalar>& v) {
  if (v.size() != p.parameter_count()) throw InvalidArgument("parameter vector has wrong size");
  Index at = 0;
  auto take = [&](auto& m) {
    Eigen::Map<Vector<Scalar>>(m.data(), m.size()) = v.segment(at, m.size());
    at += m.size();
  };
  for (auto& l : p.hidden) {
    take(l.weight);
    take(l.bias);
  }
  take(p.output.weight);
  take(p.output.bias);
}

}  // namespace kwcl
