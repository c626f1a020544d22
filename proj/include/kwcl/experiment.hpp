#pragma once

// Evaluation protocol and synthetic benchmark runs: split a healthy cohort
// into train / internal test / external-site test, train an encoder, read
// out age, probe for site, and analyse brain-age gaps on a clinical cohort.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "kwcl/cohort.hpp"
#include "kwcl/losses.hpp"
#include "kwcl/metrics.hpp"
#include "kwcl/train.hpp"

namespace kwcl {

struct EvalOptions {
  double ridge_lambda = 1.0;
  int probe_folds = 3;
  ProbeOptions probe;
  int min_visits = 3;
  std::uint64_t seed = 0;
};

/// Rows used by one evaluation. `healthy` rows drive the readout, MAE and
/// site probe; `clinical` rows drive the brain-age-gap analysis and may be
/// empty.
struct EvalData {
  const Cohort* healthy = nullptr;
  std::vector<Index> train;
  std::vector<Index> internal_test;
  std::vector<Index> external_test;
  const Cohort* clinical = nullptr;
  std::vector<Index> clinical_rows;
};

/// Predicted ages: the regression head for scalar encoders, a ridge readout
/// fitted on the training rows otherwise.
class AgePredictor {
 public:
  AgePredictor(const EncoderParams<double>& params, const Cohort& cohort,
               const std::vector<Index>& train_rows, double ridge_lambda);
  Eigen::VectorXd predict(const Cohort& cohort, const std::vector<Index>& rows) const;

 private:
  const EncoderParams<double>* params_;
  std::optional<RidgeReadout> readout_;
};

EvalReport evaluate_encoder(const EncoderParams<double>& params, const EvalData& data,
                            const EvalOptions& opts);

/// Last ceil(20%) of the cohort's sorted site names.
std::vector<std::string> default_external_sites(const Cohort& cohort);

struct SplitPlan {
  std::vector<Index> train_pool;
  std::vector<Index> internal_test;
  std::vector<Index> external_test;
};

/// Healthy-control rows only: external-site rows form the external test;
/// the remaining subjects are split into folds and `test_fold` becomes the
/// internal test.
SplitPlan plan_splits(const Cohort& cohort, const std::vector<std::string>& external_sites,
                      int folds, int test_fold, std::uint64_t seed);

/// Rows of `cohort` outside the external sites.
std::vector<Index> internal_site_rows(const Cohort& cohort,
                                      const std::vector<std::string>& external_sites);

/// Seeded subset of `n` rows (all rows when n == 0 or n >= pool size),
/// returned in ascending order.
std::vector<Index> subsample_rows(const std::vector<Index>& pool, Index n, std::uint64_t seed);

// Synthetic benchmark -----------------------------------------------------

struct BenchmarkSpec {
  SyntheticSpec healthy;          // healthy controls used for pre-training
  Index clinical_subjects = 600;  // companion cohort with all groups
  int clinical_visits = 4;
  // Baseline ages of the clinical cohort, kept inside the healthy range so
  // later visits do not leave the span the encoder was trained on.
  std::array<double, 2> clinical_age_range = {50.0, 75.0};
  int folds = 5;
  int test_fold = 0;
  Index train_size = 0;  // 0 = whole training pool
  EvalOptions eval;
  bool finetune = false;
  FinetuneOptions finetune_options;
};

/// 5000 healthy subjects over 10 sites (2 external), site effect 1.
BenchmarkSpec default_benchmark(std::uint64_t seed);

/// Desk-scale optimizer settings used by the benchmark.
TrainConfig benchmark_train_config(std::uint64_t seed);

/// Kernel bandwidth 3 years, temperature 0.5.
LossConfig benchmark_loss_config(LossKind kind = LossKind::Exp);

/// Clinical companion of a benchmark: same feature model, all groups,
/// longitudinal visits, independent subjects.
SyntheticSpec clinical_spec(const BenchmarkSpec& spec);

struct BenchmarkRun {
  EvalReport report;
  TrainHistory history;
};

BenchmarkRun run_benchmark(const BenchmarkSpec& spec, const LossConfig& loss,
                           const TrainConfig& train_cfg);

// Sweeps ------------------------------------------------------------------

enum class SweepAxis { TrainSize, LossKind, Sigma, SiteStrength };

std::string_view to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(std::string_view s);

struct SweepSpec {
  SweepAxis axis = SweepAxis::TrainSize;
  std::vector<std::string> values;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::vector<LossKind> losses = {LossKind::L1Baseline, LossKind::Exp};
  BenchmarkSpec base = default_benchmark(0);
  LossConfig loss = benchmark_loss_config();
  TrainConfig train = benchmark_train_config(0);
  int jobs = 1;
};

void validate(const SweepSpec& spec);

struct SweepCell {
  std::string method;
  std::string axis_value;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  EvalReport report;
  double seconds = 0.0;
};

/// Runs every (loss, axis value, seed) cell; cells are returned in that
/// nesting order regardless of `jobs`. Failures are recorded per cell.
std::vector<SweepCell> run_sweep(const SweepSpec& spec);

/// method,axis_value,seed,mae_ext,site_bacc,auc,challenge_score
std::string trend_csv(const std::vector<SweepCell>& cells);

/// Per-cell status and reports plus mean/std aggregates per
/// (method, axis value).
nlohmann::json sweep_summary(const SweepSpec& spec, const std::vector<SweepCell>& cells);

nlohmann::json to_json(const SyntheticSpec& spec);
SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j, SyntheticSpec base = {});

}  // namespace kwcl
