#include "kwcl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "kwcl/errors.hpp"
#include "kwcl/random.hpp"

namespace kwcl {

// Age readout -------------------------------------------------------------

RidgeReadout fit_ridge_readout(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda) {
  if (x.rows() != y.size()) throw InvalidArgument("ridge: row count mismatch");
  if (x.rows() == 0) throw InvalidArgument("ridge: no training rows");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("ridge: lambda must be >= 0");

  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  Eigen::MatrixXd gram = xc.transpose() * xc;
  gram.diagonal().array() += lambda;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const double scale = std::max(1.0, gram.diagonal().cwiseAbs().maxCoeff());
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().cwiseAbs().minCoeff() <= 1e-12 * scale) {
    throw IllConditioned("ridge normal equations are singular; use lambda > 0");
  }
  RidgeReadout out;
  out.lambda = lambda;
  out.weights = ldlt.solve(xc.transpose() * yc);
  out.intercept = y_mean - x_mean.dot(out.weights);
  if (!out.weights.allFinite() || !std::isfinite(out.intercept)) {
    throw IllConditioned("ridge solution is not finite; use lambda > 0");
  }
  return out;
}

Eigen::VectorXd predict_age(const RidgeReadout& readout, const Eigen::MatrixXd& x) {
  if (x.cols() != readout.weights.size()) throw InvalidArgument("ridge: feature width mismatch");
  return (x * readout.weights).array() + readout.intercept;
}

double mae(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
  if (pred.size() != truth.size() || pred.size() == 0) {
    throw InvalidArgument("mae: inputs must have equal non-zero length");
  }
  return (pred - truth).cwiseAbs().mean();
}

double r_squared(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
  if (pred.size() != truth.size() || pred.size() == 0) {
    throw InvalidArgument("r_squared: inputs must have equal non-zero length");
  }
  const double sst = (truth.array() - truth.mean()).square().sum();
  if (!(sst > 0.0)) throw UndefinedMetric("r_squared: targets have zero variance");
  return 1.0 - (pred - truth).array().square().sum() / sst;
}

// Site probe --------------------------------------------------------------

namespace {

Eigen::MatrixXd softmax_rows(Eigen::MatrixXd logits) {
  for (Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    logits.row(i) = (logits.row(i).array() - m).exp();
    logits.row(i) /= logits.row(i).sum();
  }
  return logits;
}

}  // namespace

LogisticProbe LogisticProbe::fit(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                                 int classes, const ProbeOptions& opts) {
  const Index n = x.rows();
  const Index d = x.cols();
  if (static_cast<Index>(labels.size()) != n || n == 0) throw InvalidArgument("probe: bad inputs");
  if (classes < 2) throw InvalidArgument("probe needs at least two classes");

  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, classes);
  for (Index i = 0; i < n; ++i) {
    const int c = labels[static_cast<std::size_t>(i)];
    if (c < 0 || c >= classes) throw InvalidArgument("probe: label out of range");
    onehot(i, c) = 1.0;
  }

  // Curvature bound of mean softmax cross-entropy over [x, 1].
  Eigen::MatrixXd aug(n, d + 1);
  aug << x, Eigen::VectorXd::Ones(n);
  const Eigen::MatrixXd cov = aug.transpose() * aug / static_cast<double>(n);
  const double top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov, Eigen::EigenvaluesOnly)
                         .eigenvalues()
                         .maxCoeff();
  const double step = 1.0 / (0.5 * top + opts.l2);

  LogisticProbe probe;
  probe.weights_ = Eigen::MatrixXd::Zero(d, classes);
  probe.bias_ = Eigen::RowVectorXd::Zero(classes);
  double previous = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.max_iterations; ++it) {
    Eigen::MatrixXd logits = x * probe.weights_;
    logits.rowwise() += probe.bias_;
    const Eigen::MatrixXd p = softmax_rows(logits);
    double loss = 0.0;
    for (Index i = 0; i < n; ++i) {
      loss -= std::log(std::max(p(i, labels[static_cast<std::size_t>(i)]), 1e-300));
    }
    loss = loss / static_cast<double>(n) + 0.5 * opts.l2 * probe.weights_.squaredNorm();
    probe.iterations_ = it + 1;
    if (std::abs(previous - loss) < opts.tolerance) break;
    previous = loss;

    const Eigen::MatrixXd resid = (p - onehot) / static_cast<double>(n);
    probe.weights_ -= step * (x.transpose() * resid + opts.l2 * probe.weights_);
    probe.bias_ -= step * resid.colwise().sum();
  }
  return probe;
}

Eigen::MatrixXd LogisticProbe::probabilities(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd logits = x * weights_;
  logits.rowwise() += bias_;
  return softmax_rows(std::move(logits));
}

std::vector<int> LogisticProbe::predict(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd logits = x * weights_;
  logits.rowwise() += bias_;
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Index i = 0; i < x.rows(); ++i) {
    Index best = 0;
    logits.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

double balanced_accuracy(const std::vector<int>& truth, const std::vector<int>& pred) {
  if (truth.size() != pred.size() || truth.empty()) {
    throw InvalidArgument("balanced_accuracy: inputs must have equal non-zero length");
  }
  std::map<int, std::pair<std::size_t, std::size_t>> per_class;  // hits, total
  for (std::size_t i = 0; i < truth.size(); ++i) {
    auto& [hits, total] = per_class[truth[i]];
    ++total;
    if (pred[i] == truth[i]) ++hits;
  }
  double sum = 0.0;
  for (const auto& [cls, counts] : per_class) {
    sum += static_cast<double>(counts.first) / static_cast<double>(counts.second);
  }
  return sum / static_cast<double>(per_class.size());
}

std::vector<int> stratified_label_folds(const std::vector<std::string>& labels, int k,
                                        std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("need at least 2 folds");
  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < labels.size(); ++i) by_label[labels[i]].push_back(i);
  Rng rng = make_rng(seed, 11);
  std::vector<int> folds(labels.size(), 0);
  for (auto& [label, idx] : by_label) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t j = 0; j < idx.size(); ++j) folds[idx[j]] = static_cast<int>(j % static_cast<std::size_t>(k));
  }
  return folds;
}

double site_probe_bacc(const Eigen::MatrixXd& reps, const std::vector<std::string>& sites,
                       const std::vector<int>& folds, const ProbeOptions& opts) {
  const auto n = sites.size();
  if (static_cast<std::size_t>(reps.rows()) != n || folds.size() != n) {
    throw InvalidArgument("site probe: inputs differ in length");
  }
  std::map<std::string, int> class_of;
  for (const auto& s : sites) class_of.emplace(s, 0);
  if (class_of.size() < 2) throw InvalidArgument("site probe needs at least two sites");
  int next = 0;
  for (auto& [name, id] : class_of) id = next++;
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = class_of[sites[i]];

  std::vector<int> fold_ids(folds.begin(), folds.end());
  std::sort(fold_ids.begin(), fold_ids.end());
  fold_ids.erase(std::unique(fold_ids.begin(), fold_ids.end()), fold_ids.end());
  if (fold_ids.size() < 2) throw InvalidFold("site probe needs at least two folds");

  double total = 0.0;
  int evaluated = 0;
  for (int f : fold_ids) {
    std::vector<Index> train, test;
    for (std::size_t i = 0; i < n; ++i) (folds[i] == f ? test : train).push_back(static_cast<Index>(i));
    std::vector<int> train_labels, test_labels;
    std::vector<bool> seen(class_of.size(), false);
    for (Index i : train) {
      train_labels.push_back(labels[static_cast<std::size_t>(i)]);
      seen[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])] = true;
    }
    for (const auto& [name, id] : class_of) {
      if (!seen[static_cast<std::size_t>(id)]) {
        throw InvalidFold("site " + name + " is absent from the training part of probe fold " +
                          std::to_string(f));
      }
    }
    for (Index i : test) test_labels.push_back(labels[static_cast<std::size_t>(i)]);
    const auto probe = LogisticProbe::fit(reps(train, Eigen::all), train_labels,
                                          static_cast<int>(class_of.size()), opts);
    total += balanced_accuracy(test_labels, probe.predict(reps(test, Eigen::all)));
    ++evaluated;
  }
  return total / evaluated;
}

// Challenge score ---------------------------------------------------------

ChallengeScore challenge_score(double bacc, double mae_ext) {
  if (!(bacc >= 0.0 && bacc <= 1.0)) {
    throw InvalidArgument("challenge_score expects balanced accuracy as a fraction in [0, 1]");
  }
  if (!(mae_ext >= 0.0) || !std::isfinite(mae_ext)) {
    throw InvalidArgument("challenge_score expects a finite non-negative MAE");
  }
  if (bacc == 0.0) return {0.0, true};
  return {std::pow(bacc, 0.3) * mae_ext, false};
}

// Brain-age gap -----------------------------------------------------------

std::vector<BagRecord> bag_records(const Eigen::VectorXd& predicted, const Cohort& cohort,
                                   std::span<const Index> rows) {
  if (static_cast<std::size_t>(predicted.size()) != rows.size()) {
    throw InvalidArgument("bag_records: prediction count differs from row count");
  }
  std::vector<BagRecord> out;
  out.reserve(rows.size());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const Index r = rows[j];
    const auto u = static_cast<std::size_t>(r);
    BagRecord rec;
    rec.subject_id = cohort.subject_id[u];
    rec.visit_time = cohort.visit_time(r);
    rec.group = cohort.group[u];
    rec.predicted_age = predicted(static_cast<Index>(j));
    rec.chronological_age = cohort.age(r);
    rec.bag = rec.predicted_age - rec.chronological_age;
    if (!std::isfinite(rec.bag)) throw InvalidArgument("non-finite brain-age gap");
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<BagRecord> bag_records(const RidgeReadout& readout, const Eigen::MatrixXd& embeddings,
                                   const Cohort& cohort, std::span<const Index> rows) {
  return bag_records(predict_age(readout, embeddings), cohort, rows);
}

GroupBagStats group_bag_stats(const std::vector<BagRecord>& records) {
  std::map<Group, std::vector<double>> values;
  for (const auto& r : records) values[r.group].push_back(r.bag);
  GroupBagStats out;
  for (Group g : kAllGroups) {
    auto it = values.find(g);
    if (it == values.end()) {
      out.omitted.push_back(g);
      continue;
    }
    const auto& v = it->second;
    GroupSummary s;
    s.count = static_cast<Index>(v.size());
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() > 1) {
      double ss = 0.0;
      for (double b : v) ss += (b - s.mean) * (b - s.mean);
      s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    out.groups[g] = s;
  }
  return out;
}

double roc_auc(const Eigen::VectorXd& scores, const std::vector<int>& labels) {
  const auto n = labels.size();
  if (static_cast<std::size_t>(scores.size()) != n) throw InvalidArgument("roc_auc: length mismatch");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores(static_cast<Index>(a)) < scores(static_cast<Index>(b));
  });
  // Average ranks over tie blocks, then Mann-Whitney U.
  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores(static_cast<Index>(order[j])) == scores(static_cast<Index>(order[i]))) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      const int l = labels[order[t]];
      if (l == 1) {
        rank_sum_pos += avg_rank;
        ++n_pos;
      } else if (l == 0) {
        ++n_neg;
      } else {
        throw InvalidArgument("roc_auc: labels must be 0 or 1");
      }
    }
    i = j;
  }
  if (n_pos == 0 || n_neg == 0) throw UndefinedMetric("roc_auc needs both classes");
  const double np = static_cast<double>(n_pos);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

std::vector<RocPoint> roc_curve(const Eigen::VectorXd& scores, const std::vector<int>& labels) {
  const auto n = labels.size();
  if (static_cast<std::size_t>(scores.size()) != n) throw InvalidArgument("roc_curve: length mismatch");
  const auto n_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const auto n_neg = static_cast<double>(std::count(labels.begin(), labels.end(), 0));
  if (n_pos == 0 || n_neg == 0) throw UndefinedMetric("roc_curve needs both classes");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores(static_cast<Index>(a)) > scores(static_cast<Index>(b));
  });
  std::vector<RocPoint> out{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  double tp = 0, fp = 0;
  for (std::size_t i = 0; i < n;) {
    const double thr = scores(static_cast<Index>(order[i]));
    while (i < n && scores(static_cast<Index>(order[i])) == thr) {
      (labels[order[i]] == 1 ? tp : fp) += 1.0;
      ++i;
    }
    out.push_back({thr, fp / n_neg, tp / n_pos});
  }
  return out;
}

double ols_slope(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("ols_slope: need >= 2 points");
  const Eigen::ArrayXd xc = x.array() - x.mean();
  const double sxx = xc.square().sum();
  if (!(sxx > 0.0)) throw UndefinedMetric("ols_slope: x has zero variance");
  return (xc * (y.array() - y.mean())).sum() / sxx;
}

LongitudinalSlopes longitudinal_bag_slopes(const std::vector<BagRecord>& records, int min_visits) {
  std::map<std::string, std::vector<const BagRecord*>> by_subject;
  for (const auto& r : records) by_subject[r.subject_id].push_back(&r);

  std::map<Group, std::vector<double>> slopes;
  for (const auto& [id, recs] : by_subject) {
    if (static_cast<int>(recs.size()) < min_visits) continue;
    Eigen::VectorXd t(static_cast<Index>(recs.size())), b(static_cast<Index>(recs.size()));
    for (std::size_t i = 0; i < recs.size(); ++i) {
      t(static_cast<Index>(i)) = recs[i]->visit_time;
      b(static_cast<Index>(i)) = recs[i]->bag;
    }
    if ((t.array() - t.mean()).square().sum() <= 0.0) continue;
    slopes[recs.front()->group].push_back(ols_slope(t, b));
  }
  LongitudinalSlopes out;
  for (Group g : kAllGroups) {
    auto it = slopes.find(g);
    if (it == slopes.end()) {
      out.omitted.push_back(g);
      continue;
    }
    const auto& v = it->second;
    out.slope[g] = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    out.subjects[g] = static_cast<Index>(v.size());
  }
  return out;
}

// Downstream classification ----------------------------------------------

double finetune_classifier(const EncoderParams<double>& encoder, const Cohort& cohort,
                           std::span<const Index> rows, const FinetuneOptions& opts) {
  validate(opts.train);
  const Cohort data = cohort.select(rows);
  std::vector<double> target(static_cast<std::size_t>(data.size()));
  for (Index r = 0; r < data.size(); ++r) {
    const Group g = data.group[static_cast<std::size_t>(r)];
    if (g != Group::HC && g != Group::AD) {
      throw InvalidArgument("finetune_classifier accepts only HC and AD rows");
    }
    target[static_cast<std::size_t>(r)] = g == Group::AD ? 1.0 : 0.0;
  }
  const FoldAssignment folds = stratified_subject_folds(data, opts.folds, opts.split_seed);
  const auto test = folds.rows_in_fold(data, opts.test_fold);
  const auto train_rows = folds.rows_not_in_fold(data, opts.test_fold);
  auto has_both = [&](const std::vector<Index>& idx) {
    bool pos = false, neg = false;
    for (Index r : idx) (target[static_cast<std::size_t>(r)] > 0.5 ? pos : neg) = true;
    return pos && neg;
  };
  if (!has_both(train_rows) || !has_both(test)) {
    throw InvalidArgument("fine-tuning needs both HC and AD in the train and test splits");
  }

  EncoderParams<double> enc = encoder;
  const bool sphere = enc.output_kind == OutputKind::Sphere;
  const Index rep_dim = enc.representation_dim();
  const Index n_enc = enc.parameter_count();
  // theta = [encoder parameters, head weights, head bias]
  Vector<double> theta(n_enc + rep_dim + 1);
  theta << pack_parameters(enc), Vector<double>::Zero(rep_dim + 1);
  auto state = AdamState<double>::zeros(theta.size());
  Rng rng = make_rng(opts.train.seed, 3);

  auto forward = [&](const Eigen::MatrixXd& x, ForwardCache<double>& cache) {
    cache = mlp_forward(enc, x);
    return sphere ? normalize_rows(cache.output).vectors() : cache.activations.back();
  };

  std::vector<Index> order = train_rows;
  const auto bs = static_cast<std::size_t>(opts.train.batch_size);
  for (int epoch = 0; epoch < opts.train.epochs; ++epoch) {
    const double lr = lr_at_epoch(opts.train, epoch);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::vector<Index> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + bs)));
      unpack_parameters(enc, Vector<double>(theta.head(n_enc)));
      const Eigen::VectorXd w = theta.segment(n_enc, rep_dim);
      const double b = theta(n_enc + rep_dim);
      ForwardCache<double> cache;
      const Eigen::MatrixXd rep = forward(data.feature_rows(batch), cache);
      const Eigen::VectorXd logits = (rep * w).array() + b;
      Eigen::VectorXd dlogit(static_cast<Index>(batch.size()));
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const double p = 1.0 / (1.0 + std::exp(-logits(static_cast<Index>(i))));
        dlogit(static_cast<Index>(i)) =
            (p - target[static_cast<std::size_t>(batch[i])]) / static_cast<double>(batch.size());
      }
      Vector<double> grad = Vector<double>::Zero(theta.size());
      grad.segment(n_enc, rep_dim) = rep.transpose() * dlogit;
      grad(n_enc + rep_dim) = dlogit.sum();
      if (!opts.head_only) {
        const Eigen::MatrixXd d_rep = dlogit * w.transpose();
        if (sphere) {
          const Eigen::MatrixXd d_out = normalize_rows_backward(cache.output, d_rep);
          grad.head(n_enc) = pack_parameters(mlp_backward(enc, cache, &d_out, nullptr));
        } else {
          grad.head(n_enc) = pack_parameters(mlp_backward(enc, cache, nullptr, &d_rep));
        }
      }
      adam_step(theta, grad, state, lr, opts.train);
    }
  }

  unpack_parameters(enc, Vector<double>(theta.head(n_enc)));
  ForwardCache<double> cache;
  const Eigen::MatrixXd rep = forward(data.feature_rows(test), cache);
  const Eigen::VectorXd logits =
      (rep * theta.segment(n_enc, rep_dim)).array() + theta(n_enc + rep_dim);
  std::vector<int> truth, pred;
  for (std::size_t i = 0; i < test.size(); ++i) {
    truth.push_back(target[static_cast<std::size_t>(test[i])] > 0.5 ? 1 : 0);
    pred.push_back(logits(static_cast<Index>(i)) > 0.0 ? 1 : 0);
  }
  return balanced_accuracy(truth, pred);
}

double pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("pearson: need >= 2 paired values");
  const Eigen::ArrayXd xc = x.array() - x.mean();
  const Eigen::ArrayXd yc = y.array() - y.mean();
  const double sxx = xc.square().sum();
  const double syy = yc.square().sum();
  if (!(sxx > 0.0) || !(syy > 0.0)) throw UndefinedMetric("pearson: zero variance");
  return (xc * yc).sum() / std::sqrt(sxx * syy);
}

MaeAccuracyCorrelation mae_accuracy_correlation(const std::vector<std::pair<double, double>>& runs) {
  if (runs.size() < 3) throw InvalidArgument("mae_accuracy_correlation needs at least 3 runs");
  Eigen::VectorXd neg_mae(static_cast<Index>(runs.size())), acc(static_cast<Index>(runs.size()));
  for (std::size_t i = 0; i < runs.size(); ++i) {
    neg_mae(static_cast<Index>(i)) = -runs[i].first;
    acc(static_cast<Index>(i)) = runs[i].second;
  }
  return {pearson(neg_mae, acc), ols_slope(neg_mae, acc)};
}

// Report ------------------------------------------------------------------

nlohmann::json to_json(const EvalReport& r) {
  using nlohmann::json;
  json bag = json::object();
  for (const auto& [g, s] : r.bag.groups) {
    bag[std::string(to_string(g))] = {{"count", s.count}, {"mean", s.mean}, {"std", s.std}};
  }
  json bag_omitted = json::array();
  for (Group g : r.bag.omitted) bag_omitted.push_back(std::string(to_string(g)));
  json slopes = json::object();
  for (const auto& [g, s] : r.longitudinal.slope) {
    slopes[std::string(to_string(g))] = {{"slope", s}, {"subjects", r.longitudinal.subjects.at(g)}};
  }
  json slope_omitted = json::array();
  for (Group g : r.longitudinal.omitted) slope_omitted.push_back(std::string(to_string(g)));

  return {{"mae_internal", r.mae_internal},
          {"mae_external", r.mae_external},
          {"r2", r.r2},
          {"site_bacc", r.site_bacc},
          {"site_chance", r.site_chance},
          {"challenge_score", r.challenge_score},
          {"challenge_degenerate", r.challenge_degenerate},
          {"bag_stats", bag},
          {"bag_omitted_groups", bag_omitted},
          {"auc_hc_vs_ad", r.auc_hc_vs_ad ? json(*r.auc_hc_vs_ad) : json(nullptr)},
          {"longitudinal_slopes", slopes},
          {"longitudinal_omitted_groups", slope_omitted},
          {"downstream_accuracy",
           r.downstream_accuracy ? json(*r.downstream_accuracy) : json(nullptr)},
          {"n_train", r.n_train},
          {"n_internal", r.n_internal},
          {"n_external", r.n_external},
          {"n_clinical", r.n_clinical}};
}

}  // namespace kwcl
