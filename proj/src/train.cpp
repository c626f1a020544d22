#include "kwcl/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "kwcl/random.hpp"

namespace kwcl {

void validate(const TrainConfig& cfg) {
  if (!(cfg.initial_lr > 0.0)) throw InvalidArgument("initial_lr must be positive");
  if (!(cfg.lr_decay > 0.0)) throw InvalidArgument("lr_decay must be positive");
  if (cfg.decay_every_epochs < 1) throw InvalidArgument("decay_every_epochs must be >= 1");
  if (!(cfg.weight_decay >= 0.0)) throw InvalidArgument("weight_decay must be >= 0");
  if (cfg.batch_size < 2) throw InvalidArgument("batch_size must be >= 2");
  if (cfg.epochs < 0) throw InvalidArgument("epochs must be >= 0");
  if (!(cfg.adam_beta1 >= 0.0 && cfg.adam_beta1 < 1.0) ||
      !(cfg.adam_beta2 >= 0.0 && cfg.adam_beta2 < 1.0) || !(cfg.adam_eps > 0.0)) {
    throw InvalidArgument("invalid Adam hyperparameters");
  }
  if (cfg.embedding_dim < 2) throw InvalidArgument("embedding_dim must be >= 2");
}

double lr_at_epoch(const TrainConfig& cfg, int epoch) {
  if (epoch < 0) throw InvalidArgument("epoch must be >= 0");
  return cfg.initial_lr * std::pow(cfg.lr_decay, epoch / cfg.decay_every_epochs);
}

EncoderParams<double> initial_encoder(const Cohort& cohort, std::span<const Index> rows,
                                      const LossConfig& loss, const TrainConfig& cfg) {
  validate(cfg);
  if (rows.empty()) throw InvalidArgument("training split is empty");
  const bool sphere = is_contrastive(loss.kind);
  auto params = init_encoder<double>(cohort.feature_dim(), cfg.hidden_dims,
                                     sphere ? cfg.embedding_dim : 1,
                                     sphere ? OutputKind::Sphere : OutputKind::Scalar, cfg.seed);

  const Eigen::MatrixXd x = cohort.feature_rows(rows);
  params.input_mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - params.input_mean.transpose();
  params.input_scale =
      (centered.array().square().colwise().sum() / static_cast<double>(x.rows())).sqrt().transpose();
  for (Index j = 0; j < params.input_scale.size(); ++j) {
    if (!(params.input_scale(j) > 0.0)) params.input_scale(j) = 1.0;
  }
  if (!sphere) {
    const Eigen::VectorXd y = cohort.age_rows(rows);
    params.label_offset = y.mean();
    const double sd = std::sqrt((y.array() - params.label_offset).square().mean());
    params.label_scale = sd > 0.0 ? sd : 1.0;
  }
  return params;
}

BatchGradient batch_gradient(const EncoderParams<double>& params, const Eigen::MatrixXd& features,
                             const Eigen::VectorXd& labels, const LossConfig& loss) {
  const ForwardCache<double> cache = mlp_forward(params, features);
  if (!cache.output.allFinite()) throw TrainingDiverged("non-finite encoder output");
  BatchGradient out;
  Eigen::MatrixXd d_output;
  if (params.output_kind == OutputKind::Sphere) {
    if (!is_contrastive(loss.kind)) throw InvalidArgument("L1 loss needs a scalar encoder");
    const auto result = contrastive_loss(normalize_rows(cache.output), labels, loss);
    out.loss = result.value;
    out.capped_terms = result.capped_terms;
    d_output = normalize_rows_backward(cache.output, result.gradient);
  } else {
    if (is_contrastive(loss.kind)) throw InvalidArgument("contrastive losses need a sphere encoder");
    const Eigen::VectorXd pred =
        (params.label_offset + params.label_scale * cache.output.col(0).array()).matrix();
    const auto result = l1_regression_loss<double>(pred, labels);
    out.loss = result.value;
    d_output = params.label_scale * result.gradient;
  }
  out.gradient = pack_parameters(mlp_backward(params, cache, &d_output, nullptr));
  if (!out.gradient.allFinite()) throw TrainingDiverged("non-finite gradient");
  return out;
}

TrainHistory train(const Cohort& cohort, std::span<const Index> rows, const LossConfig& loss,
                   const TrainConfig& cfg) {
  using Clock = std::chrono::steady_clock;
  TrainHistory history;
  history.params = initial_encoder(cohort, rows, loss, cfg);
  const bool contrastive = is_contrastive(loss.kind);
  const auto n = rows.size();
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  if (contrastive && n < bs) {
    throw InvalidArgument("training split (" + std::to_string(n) +
                          " rows) is smaller than one contrastive batch");
  }
  const std::size_t batches = contrastive ? n / bs : (n + bs - 1) / bs;

  Vector<double> theta = pack_parameters(history.params);
  auto state = AdamState<double>::zeros(theta.size());
  Rng rng = make_rng(cfg.seed, 2);
  std::vector<Index> order(rows.begin(), rows.end());
  std::vector<Index> batch_rows;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = Clock::now();
    const double lr = lr_at_epoch(cfg, epoch);
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t b = 0; b < batches; ++b) {
      const auto first = order.begin() + static_cast<std::ptrdiff_t>(b * bs);
      const auto last = order.begin() + static_cast<std::ptrdiff_t>(std::min(n, (b + 1) * bs));
      batch_rows.assign(first, last);
      unpack_parameters(history.params, theta);
      BatchGradient g;
      try {
        g = batch_gradient(history.params, cohort.feature_rows(batch_rows),
                           cohort.age_rows(batch_rows), loss);
      } catch (const DegenerateBatch&) {
        ++history.skipped_batches;
        continue;
      }
      if (!std::isfinite(g.loss)) {
        throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch));
      }
      history.capped_terms += g.capped_terms;
      adam_step(theta, g.gradient, state, lr, cfg);
      sum += g.loss;
      ++used;
    }
    if (used == 0) throw DegenerateBatch("no usable mini-batch in epoch " + std::to_string(epoch));
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    history.epochs.push_back({epoch, sum / static_cast<double>(used), lr, seconds});
  }
  unpack_parameters(history.params, theta);
  if (!theta.allFinite()) throw TrainingDiverged("non-finite parameters after training");
  if (history.capped_terms > 0) {
    std::cerr << "warning: " << history.capped_terms
              << " threshold-loss multipliers were capped at " << kThresholdMultiplierCap << "\n";
  }
  return history;
}

TrainHistory train(const Cohort& cohort, const LossConfig& loss, const TrainConfig& cfg,
                   const FoldAssignment& folds, int held_out_fold) {
  std::vector<Index> rows;
  if (held_out_fold < 0) {
    rows.resize(static_cast<std::size_t>(cohort.size()));
    for (Index r = 0; r < cohort.size(); ++r) rows[static_cast<std::size_t>(r)] = r;
  } else {
    if (held_out_fold >= folds.k) throw InvalidArgument("held-out fold out of range");
    rows = folds.rows_not_in_fold(cohort, held_out_fold);
  }
  return train(cohort, rows, loss, cfg);
}

// JSON ------------------------------------------------------------------

using nlohmann::json;

namespace {

json vector_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
}

json layer_json(const DenseLayer<double>& l) {
  json rows = json::array();
  for (Index i = 0; i < l.weight.rows(); ++i) {
    rows.push_back(vector_json(l.weight.row(i).transpose()));
  }
  return {{"weight", rows}, {"bias", vector_json(l.bias)}};
}

DenseLayer<double> layer_from_json(const json& j) {
  DenseLayer<double> l;
  const auto& rows = j.at("weight");
  l.bias = vector_from_json(j.at("bias"));
  const auto out = static_cast<Index>(rows.size());
  if (out != l.bias.size()) throw InvalidArgument("layer weight/bias shapes disagree");
  const Index in = out == 0 ? 0 : static_cast<Index>(rows[0].size());
  l.weight.resize(out, in);
  for (Index i = 0; i < out; ++i) {
    const auto r = rows[static_cast<std::size_t>(i)].get<std::vector<double>>();
    if (static_cast<Index>(r.size()) != in) throw InvalidArgument("ragged weight matrix");
    for (Index k = 0; k < in; ++k) l.weight(i, k) = r[static_cast<std::size_t>(k)];
  }
  return l;
}

}  // namespace

json to_json(const TrainConfig& c) {
  return {{"initial_lr", c.initial_lr},
          {"lr_decay", c.lr_decay},
          {"decay_every_epochs", c.decay_every_epochs},
          {"weight_decay", c.weight_decay},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_eps", c.adam_eps},
          {"hidden_dims", c.hidden_dims},
          {"embedding_dim", c.embedding_dim}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("initial_lr", c.initial_lr);
  get("lr_decay", c.lr_decay);
  get("decay_every_epochs", c.decay_every_epochs);
  get("weight_decay", c.weight_decay);
  get("batch_size", c.batch_size);
  get("epochs", c.epochs);
  get("seed", c.seed);
  get("adam_beta1", c.adam_beta1);
  get("adam_beta2", c.adam_beta2);
  get("adam_eps", c.adam_eps);
  get("hidden_dims", c.hidden_dims);
  get("embedding_dim", c.embedding_dim);
  return c;
}

json to_json(const LossConfig& c) {
  return {{"kind", std::string(to_string(c.kind))},
          {"kernel", {{"family", std::string(to_string(c.kernel.family))}, {"sigma", c.kernel.sigma}}},
          {"temperature", c.similarity.temperature},
          {"include_positive_in_denominator", c.include_positive_in_denominator}};
}

LossConfig loss_config_from_json(const json& j, LossConfig c) {
  if (j.contains("kind")) c.kind = parse_loss_kind(j.at("kind").get<std::string>());
  if (j.contains("kernel")) {
    const auto& k = j.at("kernel");
    if (k.contains("family")) c.kernel.family = parse_kernel_family(k.at("family").get<std::string>());
    if (k.contains("sigma")) k.at("sigma").get_to(c.kernel.sigma);
  }
  if (j.contains("sigma")) j.at("sigma").get_to(c.kernel.sigma);
  if (j.contains("temperature")) j.at("temperature").get_to(c.similarity.temperature);
  if (j.contains("include_positive_in_denominator")) {
    j.at("include_positive_in_denominator").get_to(c.include_positive_in_denominator);
  }
  return c;
}

json to_json(const EncoderParams<double>& p) {
  json hidden = json::array();
  for (const auto& l : p.hidden) hidden.push_back(layer_json(l));
  return {{"output_kind", p.output_kind == OutputKind::Sphere ? "sphere" : "scalar"},
          {"input_mean", vector_json(p.input_mean)},
          {"input_scale", vector_json(p.input_scale)},
          {"hidden", hidden},
          {"output", layer_json(p.output)},
          {"label_offset", p.label_offset},
          {"label_scale", p.label_scale}};
}

EncoderParams<double> encoder_from_json(const json& j) {
  EncoderParams<double> p;
  const auto kind = j.at("output_kind").get<std::string>();
  if (kind == "sphere") {
    p.output_kind = OutputKind::Sphere;
  } else if (kind == "scalar") {
    p.output_kind = OutputKind::Scalar;
  } else {
    throw InvalidArgument("unknown output_kind '" + kind + "'");
  }
  p.input_mean = vector_from_json(j.at("input_mean"));
  p.input_scale = vector_from_json(j.at("input_scale"));
  for (const auto& l : j.at("hidden")) p.hidden.push_back(layer_from_json(l));
  p.output = layer_from_json(j.at("output"));
  p.label_offset = j.at("label_offset").get<double>();
  p.label_scale = j.at("label_scale").get<double>();

  Index prev = p.input_mean.size();
  if (p.input_scale.size() != prev) throw InvalidArgument("standardization vectors disagree");
  for (const auto& l : p.hidden) {
    if (l.in_dim() != prev) throw InvalidArgument("hidden layer shapes do not compose");
    prev = l.out_dim();
  }
  if (p.output.in_dim() != prev) throw InvalidArgument("output layer shape does not compose");
  if (!pack_parameters(p).allFinite()) throw InvalidArgument("non-finite encoder parameters");
  return p;
}

json to_json(const Checkpoint& c) {
  return {{"format", "kwcl-checkpoint"},
          {"version", kCheckpointVersion},
          {"seed", c.train.seed},
          {"loss", to_json(c.loss)},
          {"train", to_json(c.train)},
          {"encoder", to_json(c.params)}};
}

Checkpoint checkpoint_from_json(const json& j) {
  if (j.value("format", "") != "kwcl-checkpoint") throw InvalidArgument("not a kwcl checkpoint");
  const int version = j.at("version").get<int>();
  if (version != kCheckpointVersion) {
    throw InvalidArgument("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  c.loss = loss_config_from_json(j.at("loss"));
  c.train = train_config_from_json(j.at("train"));
  c.params = encoder_from_json(j.at("encoder"));
  return c;
}

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write checkpoint " + path.string());
  out << to_json(ckpt).dump(1) << '\n';
  if (!out) throw InvalidArgument("failed writing checkpoint " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open checkpoint " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidArgument("malformed checkpoint " + path.string() + ": " + e.what());
  }
  try {
    return checkpoint_from_json(j);
  } catch (const json::exception& e) {
    throw InvalidArgument("malformed checkpoint " + path.string() + ": " + e.what());
  }
}

json history_json(const TrainHistory& h) {
  json epochs = json::array();
  for (const auto& e : h.epochs) {
    epochs.push_back({{"epoch", e.epoch}, {"loss", e.loss}, {"lr", e.lr}});
  }
  return {{"epochs", epochs},
          {"skipped_batches", h.skipped_batches},
          {"capped_terms", h.capped_terms}};
}

json history_timing_json(const TrainHistory& h) {
  json wall = json::array();
  double total = 0.0;
  for (const auto& e : h.epochs) {
    wall.push_back(e.wall_seconds);
    total += e.wall_seconds;
  }
  return {{"epoch_wall_seconds", wall}, {"total_wall_seconds", total}};
}

}  // namespace kwcl
