#pragma once

#include <cmath>
#include <cstdint>
#include <type_traits>
#include <vector>

#include "kwcl/errors.hpp"
#include "kwcl/types.hpp"

namespace kwcl {

/// Optimizer schedule and encoder shape for one training run.
struct TrainConfig {
  double initial_lr = 1e-4;
  double lr_decay = 0.9;
  int decay_every_epochs = 10;
  double weight_decay = 5e-5;
  int batch_size = 32;
  int epochs = 300;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::vector<Index> hidden_dims = {64, 64};
  Index embedding_dim = 32;
};

void validate(const TrainConfig& cfg);

/// Step decay: initial_lr * lr_decay^floor(epoch / decay_every_epochs).
double lr_at_epoch(const TrainConfig& cfg, int epoch);

template <typename Scalar>
struct AdamState {
  Vector<Scalar> first_moment;
  Vector<Scalar> second_moment;
  long step = 0;

  static AdamState zeros(Index n) {
    return {Vector<Scalar>::Zero(n), Vector<Scalar>::Zero(n), 0};
  }
};

/// Decoupled weight decay (param -= lr * wd * param) followed by the
/// bias-corrected Adam update.
template <typename Scalar>
void adam_step(Vector<Scalar>& params, const std::type_identity_t<Vector<Scalar>>& grads,
               AdamState<Scalar>& state, double lr, const TrainConfig& cfg) {
  if (params.size() != grads.size()) throw InvalidArgument("adam_step: gradient size mismatch");
  if (state.first_moment.size() != params.size()) {
    if (state.step != 0) throw InvalidArgument("adam_step: optimizer state size mismatch");
    state = AdamState<Scalar>::zeros(params.size());
  }
  if (!grads.allFinite()) throw TrainingDiverged("non-finite gradient");

  const Scalar b1 = static_cast<Scalar>(cfg.adam_beta1);
  const Scalar b2 = static_cast<Scalar>(cfg.adam_beta2);
  const Scalar eps = static_cast<Scalar>(cfg.adam_eps);
  const Scalar rate = static_cast<Scalar>(lr);

  ++state.step;
  if (cfg.weight_decay != 0.0) {
    params *= Scalar(1) - rate * static_cast<Scalar>(cfg.weight_decay);
  }
  state.first_moment = b1 * state.first_moment + (Scalar(1) - b1) * grads;
  state.second_moment =
      b2 * state.second_moment + (Scalar(1) - b2) * grads.cwiseProduct(grads);
  const Scalar c1 = Scalar(1) - std::pow(b1, static_cast<Scalar>(state.step));
  const Scalar c2 = Scalar(1) - std::pow(b2, static_cast<Scalar>(state.step));
  params.array() -= rate * (state.first_moment.array() / c1) /
                    ((state.second_moment.array() / c2).sqrt() + eps);
}

}  // namespace kwcl
