#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "kwcl/cohort.hpp"
#include "kwcl/mlp.hpp"
#include "kwcl/optim.hpp"
#include "kwcl/types.hpp"

namespace kwcl {

// Age readout -------------------------------------------------------------

/// Linear age readout on frozen representations.
struct RidgeReadout {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  double lambda = 0.0;
};

/// Minimizes |y - X w - b|^2 + lambda |w|^2 in closed form; the intercept
/// is not penalized.
RidgeReadout fit_ridge_readout(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda);
Eigen::VectorXd predict_age(const RidgeReadout& readout, const Eigen::MatrixXd& x);

double mae(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth);
double r_squared(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth);

// Site probe --------------------------------------------------------------

struct ProbeOptions {
  double l2 = 1e-4;
  int max_iterations = 500;
  double tolerance = 1e-6;
};

/// Multinomial logistic regression fitted by full-batch gradient descent
/// with step 1 / L, L an upper bound on the loss curvature.
class LogisticProbe {
 public:
  static LogisticProbe fit(const Eigen::MatrixXd& x, const std::vector<int>& labels, int classes,
                           const ProbeOptions& opts = {});
  std::vector<int> predict(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd probabilities(const Eigen::MatrixXd& x) const;
  int iterations() const { return iterations_; }

 private:
  Eigen::MatrixXd weights_;  // d x K
  Eigen::RowVectorXd bias_;  // K
  int iterations_ = 0;
};

/// Unweighted mean of per-class recall over the classes present in `truth`.
double balanced_accuracy(const std::vector<int>& truth, const std::vector<int>& pred);

/// Per-label round-robin fold assignment of a seeded shuffle, so every label
/// is spread over all folds.
std::vector<int> stratified_label_folds(const std::vector<std::string>& labels, int k,
                                        std::uint64_t seed);

/// Cross-validated balanced accuracy of a logistic probe predicting site
/// from frozen representations. `folds[i]` is the probe fold of row i.
double site_probe_bacc(const Eigen::MatrixXd& representations, const std::vector<std::string>& sites,
                       const std::vector<int>& folds, const ProbeOptions& opts = {});

// Challenge score ---------------------------------------------------------

struct ChallengeScore {
  double value = 0.0;
  bool degenerate = false;  // bacc == 0
};

/// bacc^0.3 * mae_ext, with bacc as a fraction in [0, 1].
ChallengeScore challenge_score(double bacc, double mae_ext);

// Brain-age gap -----------------------------------------------------------

struct BagRecord {
  std::string subject_id;
  double visit_time = 0.0;
  Group group = Group::HC;
  double predicted_age = 0.0;
  double chronological_age = 0.0;
  double bag = 0.0;
};

std::vector<BagRecord> bag_records(const Eigen::VectorXd& predicted_ages, const Cohort& cohort,
                                   std::span<const Index> rows);
std::vector<BagRecord> bag_records(const RidgeReadout& readout, const Eigen::MatrixXd& embeddings,
                                   const Cohort& cohort, std::span<const Index> rows);

struct GroupSummary {
  Index count = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single record
};

struct GroupBagStats {
  std::map<Group, GroupSummary> groups;
  std::vector<Group> omitted;
};

GroupBagStats group_bag_stats(const std::vector<BagRecord>& records);

/// Rank-based AUC; ties count 1/2. `labels` holds 0/1 class flags.
double roc_auc(const Eigen::VectorXd& scores, const std::vector<int>& labels);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};
std::vector<RocPoint> roc_curve(const Eigen::VectorXd& scores, const std::vector<int>& labels);

struct LongitudinalSlopes {
  std::map<Group, double> slope;       // mean per-subject OLS slope, years/year
  std::map<Group, Index> subjects;     // qualifying subjects per group
  std::vector<Group> omitted;
};

/// Subject-level OLS slope of BAG against visit time for subjects with at
/// least `min_visits` records, averaged per group.
LongitudinalSlopes longitudinal_bag_slopes(const std::vector<BagRecord>& records, int min_visits = 3);

/// OLS slope of y on x.
double ols_slope(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// Downstream classification ----------------------------------------------

struct FinetuneOptions {
  TrainConfig train;
  bool head_only = false;
  int folds = 5;
  int test_fold = 0;
  std::uint64_t split_seed = 0;
};

/// HC (0) vs AD (1) classification: a logistic head on the encoder's
/// representation, fine-tuned with cross-entropy under Adam. Returns the
/// held-out balanced accuracy. Rows of other groups are rejected.
double finetune_classifier(const EncoderParams<double>& encoder, const Cohort& cohort,
                           std::span<const Index> rows, const FinetuneOptions& opts);

struct MaeAccuracyCorrelation {
  double r = 0.0;      // Pearson correlation of accuracy with -MAE
  double slope = 0.0;  // least-squares slope of accuracy on -MAE
};
MaeAccuracyCorrelation mae_accuracy_correlation(const std::vector<std::pair<double, double>>& runs);

double pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// Report ------------------------------------------------------------------

struct EvalReport {
  double mae_internal = 0.0;
  double mae_external = 0.0;
  double r2 = 0.0;
  double site_bacc = 0.0;
  double site_chance = 0.0;
  double challenge_score = 0.0;
  bool challenge_degenerate = false;
  GroupBagStats bag;
  std::optional<double> auc_hc_vs_ad;
  LongitudinalSlopes longitudinal;
  std::optional<double> downstream_accuracy;
  Index n_train = 0;
  Index n_internal = 0;
  Index n_external = 0;
  Index n_clinical = 0;
};

nlohmann::json to_json(const EvalReport& report);

}  // namespace kwcl
