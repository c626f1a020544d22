#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kwcl/cohort.hpp"
#include "kwcl/losses.hpp"
#include "kwcl/mlp.hpp"
#include "kwcl/optim.hpp"

namespace kwcl {

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;  // mean over the epoch's mini-batches
  double lr = 0.0;
  double wall_seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  EncoderParams<double> params;
  Index skipped_batches = 0;  // batches where every anchor was skipped
  Index capped_terms = 0;     // threshold multipliers that hit the cap
};

/// Initial encoder for a training set: He-initialized weights plus input
/// (and, for the L1 baseline, label) standardization fitted on `rows`.
EncoderParams<double> initial_encoder(const Cohort& cohort, std::span<const Index> rows,
                                      const LossConfig& loss, const TrainConfig& cfg);

/// Trains on the given cohort rows. Deterministic in (seed, data, configs).
TrainHistory train(const Cohort& cohort, std::span<const Index> rows, const LossConfig& loss,
                   const TrainConfig& cfg);

/// Trains on every subject outside `held_out_fold` (-1 keeps all rows).
TrainHistory train(const Cohort& cohort, const LossConfig& loss, const TrainConfig& cfg,
                   const FoldAssignment& folds, int held_out_fold);

/// Loss of a batch and its gradient with respect to every trainable
/// parameter, in pack_parameters() order.
struct BatchGradient {
  double loss = 0.0;
  Vector<double> gradient;
  Index capped_terms = 0;
};
BatchGradient batch_gradient(const EncoderParams<double>& params,
                             const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                             const LossConfig& loss);

// Checkpoints -------------------------------------------------------------

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  EncoderParams<double> params;
  LossConfig loss;
  TrainConfig train;
};

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});
nlohmann::json to_json(const LossConfig& cfg);
LossConfig loss_config_from_json(const nlohmann::json& j, LossConfig base = {});
nlohmann::json to_json(const EncoderParams<double>& params);
EncoderParams<double> encoder_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& j);
void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// History without wall-clock times; those go to `history_timing_json`.
nlohmann::json history_json(const TrainHistory& h);
nlohmann::json history_timing_json(const TrainHistory& h);

}  // namespace kwcl
