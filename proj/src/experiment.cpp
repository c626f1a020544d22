#include "kwcl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "kwcl/errors.hpp"
#include "kwcl/random.hpp"

namespace kwcl {

AgePredictor::AgePredictor(const EncoderParams<double>& params, const Cohort& cohort,
                           const std::vector<Index>& train_rows, double ridge_lambda)
    : params_(&params) {
  if (params.output_kind == OutputKind::Sphere) {
    readout_ = fit_ridge_readout(encoder_representations(params, cohort.feature_rows(train_rows)),
                                 cohort.age_rows(train_rows), ridge_lambda);
  }
}

Eigen::VectorXd AgePredictor::predict(const Cohort& cohort, const std::vector<Index>& rows) const {
  const Eigen::MatrixXd x = cohort.feature_rows(rows);
  if (readout_) return predict_age(*readout_, encoder_representations(*params_, x));
  return encoder_predict(*params_, x);
}

EvalReport evaluate_encoder(const EncoderParams<double>& params, const EvalData& data,
                            const EvalOptions& opts) {
  if (data.healthy == nullptr) throw InvalidArgument("evaluation needs a healthy cohort");
  if (data.train.empty() || data.internal_test.empty() || data.external_test.empty()) {
    throw InvalidArgument("evaluation needs non-empty train, internal and external rows");
  }
  const Cohort& healthy = *data.healthy;
  EvalReport report;
  report.n_train = static_cast<Index>(data.train.size());
  report.n_internal = static_cast<Index>(data.internal_test.size());
  report.n_external = static_cast<Index>(data.external_test.size());

  const AgePredictor predictor(params, healthy, data.train, opts.ridge_lambda);
  const Eigen::VectorXd internal_truth = healthy.age_rows(data.internal_test);
  const Eigen::VectorXd internal_pred = predictor.predict(healthy, data.internal_test);
  report.mae_internal = mae(internal_pred, internal_truth);
  report.r2 = r_squared(internal_pred, internal_truth);
  report.mae_external = mae(predictor.predict(healthy, data.external_test),
                            healthy.age_rows(data.external_test));

  std::vector<std::string> sites;
  for (Index r : data.internal_test) sites.push_back(healthy.site[static_cast<std::size_t>(r)]);
  const auto probe_folds = stratified_label_folds(sites, opts.probe_folds, opts.seed);
  report.site_bacc =
      site_probe_bacc(encoder_representations(params, healthy.feature_rows(data.internal_test)),
                      sites, probe_folds, opts.probe);
  report.site_chance = 1.0 / static_cast<double>(std::set<std::string>(sites.begin(), sites.end()).size());
  const auto score = challenge_score(report.site_bacc, report.mae_external);
  report.challenge_score = score.value;
  report.challenge_degenerate = score.degenerate;

  if (data.clinical != nullptr && !data.clinical_rows.empty()) {
    const Cohort& clinical = *data.clinical;
    report.n_clinical = static_cast<Index>(data.clinical_rows.size());
    const auto records =
        bag_records(predictor.predict(clinical, data.clinical_rows), clinical, data.clinical_rows);
    report.bag = group_bag_stats(records);
    report.longitudinal = longitudinal_bag_slopes(records, opts.min_visits);

    // HC vs AD discrimination on each subject's first visit.
    std::map<std::string, const BagRecord*> first;
    for (const auto& rec : records) {
      auto [it, fresh] = first.try_emplace(rec.subject_id, &rec);
      if (!fresh && rec.visit_time < it->second->visit_time) it->second = &rec;
    }
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& [id, rec] : first) {
      if (rec->group == Group::HC || rec->group == Group::AD) {
        scores.push_back(rec->bag);
        labels.push_back(rec->group == Group::AD ? 1 : 0);
      }
    }
    const bool both = std::count(labels.begin(), labels.end(), 1) > 0 &&
                      std::count(labels.begin(), labels.end(), 0) > 0;
    if (both) {
      report.auc_hc_vs_ad = roc_auc(
          Eigen::Map<const Eigen::VectorXd>(scores.data(), static_cast<Index>(scores.size())), labels);
    }
  } else {
    report.bag.omitted.assign(kAllGroups.begin(), kAllGroups.end());
    report.longitudinal.omitted.assign(kAllGroups.begin(), kAllGroups.end());
  }
  return report;
}

std::vector<std::string> default_external_sites(const Cohort& cohort) {
  const auto sites = cohort.sites();
  const auto n_ext = static_cast<std::size_t>(external_site_count(static_cast<int>(sites.size())));
  if (n_ext >= sites.size()) throw InvalidArgument("too few sites to reserve external ones");
  return {sites.end() - static_cast<std::ptrdiff_t>(n_ext), sites.end()};
}

std::vector<Index> internal_site_rows(const Cohort& cohort,
                                      const std::vector<std::string>& external_sites) {
  const std::set<std::string> ext(external_sites.begin(), external_sites.end());
  std::vector<Index> rows;
  for (Index r = 0; r < cohort.size(); ++r) {
    if (!ext.count(cohort.site[static_cast<std::size_t>(r)])) rows.push_back(r);
  }
  return rows;
}

SplitPlan plan_splits(const Cohort& cohort, const std::vector<std::string>& external_sites,
                      int folds, int test_fold, std::uint64_t seed) {
  if (test_fold < 0 || test_fold >= folds) throw InvalidArgument("test fold out of range");
  const std::set<std::string> ext(external_sites.begin(), external_sites.end());
  SplitPlan plan;
  std::vector<Index> internal;
  for (Index r = 0; r < cohort.size(); ++r) {
    const auto u = static_cast<std::size_t>(r);
    if (cohort.group[u] != Group::HC) continue;
    (ext.count(cohort.site[u]) ? plan.external_test : internal).push_back(r);
  }
  if (internal.empty()) throw InvalidArgument("no healthy controls at internal sites");
  if (plan.external_test.empty()) throw InvalidArgument("no healthy controls at external sites");
  const Cohort sub = cohort.select(internal);
  const FoldAssignment assignment = stratified_subject_folds(sub, folds, seed);
  for (std::size_t j = 0; j < internal.size(); ++j) {
    const bool test = assignment.fold_of(sub.subject_id[j]) == test_fold;
    (test ? plan.internal_test : plan.train_pool).push_back(internal[j]);
  }
  return plan;
}

std::vector<Index> subsample_rows(const std::vector<Index>& pool, Index n, std::uint64_t seed) {
  if (n <= 0 || n >= static_cast<Index>(pool.size())) return pool;
  std::vector<Index> shuffled = pool;
  Rng rng = make_rng(seed, 5);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  shuffled.resize(static_cast<std::size_t>(n));
  std::sort(shuffled.begin(), shuffled.end());
  return shuffled;
}

BenchmarkSpec default_benchmark(std::uint64_t seed) {
  BenchmarkSpec b;
  b.healthy.n_subjects = 5000;
  b.healthy.n_sites = 10;
  b.healthy.site_effect_strength = 1.0;
  b.healthy.group_fractions = {1.0, 0.0, 0.0, 0.0};
  b.healthy.visits_per_subject = 1;
  b.healthy.seed = seed;
  b.eval.seed = seed;
  b.finetune_options.split_seed = seed;
  return b;
}

TrainConfig benchmark_train_config(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.initial_lr = 2e-3;
  cfg.epochs = 40;
  cfg.seed = seed;
  return cfg;
}

LossConfig benchmark_loss_config(LossKind kind) {
  LossConfig cfg;
  cfg.kind = kind;
  cfg.kernel.sigma = 3.0;
  cfg.similarity.temperature = 0.5;
  return cfg;
}

SyntheticSpec clinical_spec(const BenchmarkSpec& spec) {
  SyntheticSpec c = spec.healthy;
  c.n_subjects = spec.clinical_subjects;
  c.group_fractions = SyntheticSpec{}.group_fractions;
  c.visits_per_subject = spec.clinical_visits;
  c.baseline_age_range = spec.clinical_age_range;
  c.subject_stream = spec.healthy.subject_stream + 1;
  return c;
}

BenchmarkRun run_benchmark(const BenchmarkSpec& spec, const LossConfig& loss,
                           const TrainConfig& train_cfg) {
  const std::uint64_t seed = spec.healthy.seed;
  const Cohort healthy = generate_cohort(spec.healthy);
  const auto external = default_external_sites(healthy);
  const SplitPlan plan = plan_splits(healthy, external, spec.folds, spec.test_fold, seed);

  EvalData data;
  data.healthy = &healthy;
  data.train = subsample_rows(plan.train_pool, spec.train_size, seed);
  data.internal_test = plan.internal_test;
  data.external_test = plan.external_test;

  BenchmarkRun run;
  run.history = train(healthy, data.train, loss, train_cfg);

  Cohort clinical;
  if (spec.clinical_subjects > 0) {
    clinical = generate_cohort(clinical_spec(spec));
    data.clinical = &clinical;
    data.clinical_rows = internal_site_rows(clinical, external);
  }
  run.report = evaluate_encoder(run.history.params, data, spec.eval);

  if (spec.finetune && spec.clinical_subjects > 0) {
    std::vector<Index> rows;
    for (Index r : data.clinical_rows) {
      const auto u = static_cast<std::size_t>(r);
      if (clinical.visit_index[u] == 0 && (clinical.group[u] == Group::HC || clinical.group[u] == Group::AD)) {
        rows.push_back(r);
      }
    }
    run.report.downstream_accuracy =
        finetune_classifier(run.history.params, clinical, rows, spec.finetune_options);
  }
  return run;
}

// Sweeps ------------------------------------------------------------------

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::TrainSize:
      return "train_size";
    case SweepAxis::LossKind:
      return "loss_kind";
    case SweepAxis::Sigma:
      return "sigma";
    case SweepAxis::SiteStrength:
      return "site_strength";
  }
  return "train_size";
}

SweepAxis parse_sweep_axis(std::string_view s) {
  for (SweepAxis a : {SweepAxis::TrainSize, SweepAxis::LossKind, SweepAxis::Sigma, SweepAxis::SiteStrength}) {
    if (s == to_string(a)) return a;
  }
  throw InvalidArgument("unknown sweep axis '" + std::string(s) +
                        "' (expected train_size, loss_kind, sigma or site_strength)");
}

namespace {

double parse_axis_number(const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || !std::isfinite(x)) throw InvalidArgument("sweep value '" + v + "' is not a number");
  return x;
}

struct CellPlan {
  LossKind loss;
  std::string value;
  std::uint64_t seed;
};

std::vector<CellPlan> plan_cells(const SweepSpec& spec) {
  std::vector<CellPlan> cells;
  if (spec.axis == SweepAxis::LossKind) {
    for (const auto& v : spec.values) {
      for (auto s : spec.seeds) cells.push_back({parse_loss_kind(v), v, s});
    }
  } else {
    for (LossKind k : spec.losses) {
      for (const auto& v : spec.values) {
        for (auto s : spec.seeds) cells.push_back({k, v, s});
      }
    }
  }
  return cells;
}

SweepCell run_cell(const SweepSpec& spec, const CellPlan& plan) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  SweepCell cell;
  cell.method = std::string(to_string(plan.loss));
  cell.axis_value = plan.value;
  cell.seed = plan.seed;
  try {
    BenchmarkSpec bench = spec.base;
    bench.healthy.seed = plan.seed;
    bench.eval.seed = plan.seed;
    bench.finetune_options.split_seed = plan.seed;
    LossConfig loss = spec.loss;
    loss.kind = plan.loss;
    TrainConfig train_cfg = spec.train;
    train_cfg.seed = plan.seed;
    switch (spec.axis) {
      case SweepAxis::TrainSize:
        bench.train_size = static_cast<Index>(parse_axis_number(plan.value));
        break;
      case SweepAxis::Sigma:
        loss.kernel.sigma = parse_axis_number(plan.value);
        break;
      case SweepAxis::SiteStrength:
        bench.healthy.site_effect_strength = parse_axis_number(plan.value);
        break;
      case SweepAxis::LossKind:
        break;
    }
    cell.report = run_benchmark(bench, loss, train_cfg).report;
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
  }
  cell.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return cell;
}

std::string format_number(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

void validate(const SweepSpec& spec) {
  if (spec.values.size() < 2) throw InvalidArgument("a sweep needs at least two axis values");
  if (spec.seeds.empty()) throw InvalidArgument("a sweep needs at least one seed");
  if (spec.axis != SweepAxis::LossKind && spec.losses.empty()) {
    throw InvalidArgument("a sweep needs at least one loss kind");
  }
  if (spec.jobs < 1) throw InvalidArgument("jobs must be >= 1");
  for (const auto& v : spec.values) {
    if (spec.axis == SweepAxis::LossKind) {
      parse_loss_kind(v);
    } else {
      const double x = parse_axis_number(v);
      if (spec.axis == SweepAxis::TrainSize && (x < 2 || x != std::floor(x))) {
        throw InvalidArgument("train sizes must be integers >= 2");
      }
    }
  }
}

std::vector<SweepCell> run_sweep(const SweepSpec& spec) {
  validate(spec);
  const auto plans = plan_cells(spec);
  std::vector<SweepCell> cells(plans.size());
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(spec.jobs), plans.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < plans.size(); ++i) cells[i] = run_cell(spec, plans[i]);
    return cells;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < plans.size(); i = next++) cells[i] = run_cell(spec, plans[i]);
    });
  }
  for (auto& t : pool) t.join();
  return cells;
}

std::string trend_csv(const std::vector<SweepCell>& cells) {
  std::string out = "method,axis_value,seed,mae_ext,site_bacc,auc,challenge_score\n";
  for (const auto& c : cells) {
    if (!c.ok) continue;
    out += c.method + "," + c.axis_value + "," + std::to_string(c.seed) + "," +
           format_number(c.report.mae_external) + "," + format_number(c.report.site_bacc) + "," +
           (c.report.auc_hc_vs_ad ? format_number(*c.report.auc_hc_vs_ad) : std::string()) + "," +
           format_number(c.report.challenge_score) + "\n";
  }
  return out;
}

nlohmann::json to_json(const SyntheticSpec& s) {
  return {{"n_subjects", s.n_subjects},
          {"n_sites", s.n_sites},
          {"age_range", {s.age_lo, s.age_hi}},
          {"baseline_age_range", s.baseline_age_range ? nlohmann::json(*s.baseline_age_range) : nlohmann::json(nullptr)},
          {"feature_dim", s.feature_dim},
          {"site_effect_strength", s.site_effect_strength},
          {"noise_std", s.noise_std},
          {"group_fractions", s.group_fractions},
          {"bag_offset", s.bag_offset},
          {"bag_rate", s.bag_rate},
          {"visits_per_subject", s.visits_per_subject},
          {"visit_spacing", s.visit_spacing},
          {"seed", s.seed},
          {"subject_stream", s.subject_stream}};
}

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j, SyntheticSpec s) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("n_subjects", s.n_subjects);
  get("n_sites", s.n_sites);
  if (j.contains("age_range")) {
    const auto r = j.at("age_range").get<std::vector<double>>();
    if (r.size() != 2) throw InvalidArgument("age_range must have two entries");
    s.age_lo = r[0];
    s.age_hi = r[1];
  }
  if (j.contains("baseline_age_range")) {
    const auto& r = j.at("baseline_age_range");
    if (r.is_null()) {
      s.baseline_age_range.reset();
    } else {
      const auto v = r.get<std::vector<double>>();
      if (v.size() != 2) throw InvalidArgument("baseline_age_range must have two entries");
      s.baseline_age_range = std::array<double, 2>{v[0], v[1]};
    }
  }
  get("feature_dim", s.feature_dim);
  get("site_effect_strength", s.site_effect_strength);
  get("noise_std", s.noise_std);
  get("group_fractions", s.group_fractions);
  get("bag_offset", s.bag_offset);
  get("bag_rate", s.bag_rate);
  get("visits_per_subject", s.visits_per_subject);
  get("visit_spacing", s.visit_spacing);
  get("seed", s.seed);
  get("subject_stream", s.subject_stream);
  return s;
}

nlohmann::json sweep_summary(const SweepSpec& spec, const std::vector<SweepCell>& cells) {
  using nlohmann::json;
  json runs = json::array();
  std::map<std::pair<std::string, std::string>, std::vector<const SweepCell*>> groups;
  std::vector<std::pair<std::string, std::string>> group_order;
  std::size_t succeeded = 0;
  for (const auto& c : cells) {
    json r = {{"method", c.method},
              {"axis_value", c.axis_value},
              {"seed", c.seed},
              {"status", c.ok ? "ok" : "failed"}};
    if (c.ok) {
      r["report"] = to_json(c.report);
      ++succeeded;
      const auto key = std::make_pair(c.method, c.axis_value);
      if (!groups.count(key)) group_order.push_back(key);
      groups[key].push_back(&c);
    } else {
      r["error"] = c.error;
    }
    runs.push_back(r);
  }

  auto stats = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    return json{{"mean", mean}, {"std", sd}, {"n", v.size()}};
  };
  json aggregates = json::array();
  for (const auto& key : group_order) {
    std::vector<double> mae_ext, bacc, score, auc;
    for (const SweepCell* c : groups[key]) {
      mae_ext.push_back(c->report.mae_external);
      bacc.push_back(c->report.site_bacc);
      score.push_back(c->report.challenge_score);
      if (c->report.auc_hc_vs_ad) auc.push_back(*c->report.auc_hc_vs_ad);
    }
    json a = {{"method", key.first},
              {"axis_value", key.second},
              {"mae_ext", stats(mae_ext)},
              {"site_bacc", stats(bacc)},
              {"challenge_score", stats(score)}};
    a["auc"] = auc.empty() ? json(nullptr) : stats(auc);
    aggregates.push_back(a);
  }

  json losses = json::array();
  for (LossKind k : spec.losses) losses.push_back(std::string(to_string(k)));
  std::vector<std::uint64_t> seeds(spec.seeds.begin(), spec.seeds.end());
  return {{"config",
           {{"axis", std::string(to_string(spec.axis))},
            {"values", spec.values},
            {"seeds", seeds},
            {"losses", losses},
            {"loss", to_json(spec.loss)},
            {"train", to_json(spec.train)},
            {"healthy", to_json(spec.base.healthy)},
            {"clinical_subjects", spec.base.clinical_subjects},
            {"clinical_visits", spec.base.clinical_visits},
            {"clinical_age_range", spec.base.clinical_age_range},
            {"folds", spec.base.folds},
            {"test_fold", spec.base.test_fold},
            {"train_size", spec.base.train_size},
            {"ridge_lambda", spec.base.eval.ridge_lambda}}},
          {"cells_total", cells.size()},
          {"cells_succeeded", succeeded},
          {"runs", runs},
          {"aggregates", aggregates}};
}

}  // namespace kwcl
