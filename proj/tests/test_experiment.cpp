#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "kwcl/errors.hpp"
#include "kwcl/experiment.hpp"

using namespace kwcl;

namespace {

// A benchmark small enough for a unit test.
SweepSpec tiny_sweep() {
  SweepSpec s;
  s.base = default_benchmark(0);
  s.base.healthy.n_subjects = 300;
  s.base.healthy.feature_dim = 16;
  s.base.clinical_subjects = 60;
  s.train.epochs = 2;
  s.train.hidden_dims = {16};
  s.train.embedding_dim = 4;
  s.values = {"64", "128", "256", "512"};
  s.seeds = {1, 2, 3};
  return s;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Splits, ExternalSitesAndPartition) {
  SyntheticSpec s;
  s.n_subjects = 500;
  s.group_fractions = {0.5, 0.5, 0, 0};
  const auto c = generate_cohort(s);
  const auto ext = default_external_sites(c);
  EXPECT_EQ(ext, (std::vector<std::string>{site_name(8), site_name(9)}));
  const auto plan = plan_splits(c, ext, 5, 1, 3);
  std::set<Index> seen;
  for (const auto* part : {&plan.train_pool, &plan.internal_test, &plan.external_test}) {
    for (Index r : *part) {
      EXPECT_TRUE(seen.insert(r).second);
      EXPECT_EQ(c.group[static_cast<std::size_t>(r)], Group::HC);
    }
  }
  for (Index r : plan.external_test) {
    EXPECT_TRUE(std::find(ext.begin(), ext.end(), c.site[static_cast<std::size_t>(r)]) != ext.end());
  }
  std::set<std::string> train_subjects, test_subjects;
  for (Index r : plan.train_pool) train_subjects.insert(c.subject_id[static_cast<std::size_t>(r)]);
  for (Index r : plan.internal_test) test_subjects.insert(c.subject_id[static_cast<std::size_t>(r)]);
  for (const auto& id : test_subjects) EXPECT_FALSE(train_subjects.count(id));
  EXPECT_THROW(plan_splits(c, ext, 5, 5, 3), InvalidArgument);
}

TEST(Splits, SubsampleIsSeededSortedSubset) {
  std::vector<Index> pool(100);
  for (Index i = 0; i < 100; ++i) pool[static_cast<std::size_t>(i)] = 3 * i;
  const auto a = subsample_rows(pool, 10, 4);
  EXPECT_EQ(a.size(), 10u);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_EQ(a, subsample_rows(pool, 10, 4));
  EXPECT_NE(a, subsample_rows(pool, 10, 5));
  for (Index r : a) EXPECT_EQ(r % 3, 0);
  EXPECT_EQ(subsample_rows(pool, 0, 1), pool);
  EXPECT_EQ(subsample_rows(pool, 500, 1), pool);
}

TEST(Benchmark, ClinicalCohortSharesFeatureModel) {
  const auto b = default_benchmark(3);
  const auto c = clinical_spec(b);
  EXPECT_EQ(c.seed, b.healthy.seed);
  EXPECT_NE(c.subject_stream, b.healthy.subject_stream);
  EXPECT_EQ(c.visits_per_subject, b.clinical_visits);
  EXPECT_EQ(c.n_subjects, b.clinical_subjects);
  ASSERT_TRUE(c.baseline_age_range.has_value());
  EXPECT_EQ(*c.baseline_age_range, b.clinical_age_range);
  EXPECT_EQ(c.group_fractions, SyntheticSpec{}.group_fractions);
}

TEST(Benchmark, RawFeaturesCarrySite) {
  const auto b = default_benchmark(1);
  const auto c = generate_cohort(b.healthy);
  const auto ext = default_external_sites(c);
  const auto plan = plan_splits(c, ext, b.folds, b.test_fold, 1);
  std::vector<std::string> sites;
  for (Index r : plan.internal_test) sites.push_back(c.site[static_cast<std::size_t>(r)]);
  const double bacc = site_probe_bacc(c.feature_rows(plan.internal_test), sites,
                                      stratified_label_folds(sites, 3, 1));
  EXPECT_GE(bacc, 1.0 / 8.0 + 0.2);
}

// The direct regressor reads age off the features with unit gain, so its
// brain-age gaps recover the generator's disease model.
TEST(Benchmark, BagRecoversDiseaseModel) {
  auto b = default_benchmark(1);
  b.train_size = 2048;
  const auto run =
      run_benchmark(b, benchmark_loss_config(LossKind::L1Baseline), benchmark_train_config(1));
  const auto& r = run.report;
  EXPECT_NEAR(r.bag.groups.at(Group::HC).mean, 0.0, 1.0);
  // Group means pool visits 0..3, adding rate * 1.5 years.
  EXPECT_NEAR(r.bag.groups.at(Group::AD).mean, 5.0 + 1.0 * 1.5, 1.0);
  EXPECT_NEAR(r.longitudinal.slope.at(Group::pMCI), 0.8, 0.3);
  EXPECT_NEAR(r.longitudinal.slope.at(Group::HC), 0.0, 0.2);

  const Cohort clinical = generate_cohort(clinical_spec(b));
  const auto healthy = generate_cohort(b.healthy);
  std::vector<Index> baseline_ad;
  for (Index row : internal_site_rows(clinical, default_external_sites(healthy))) {
    const auto u = static_cast<std::size_t>(row);
    if (clinical.group[u] == Group::AD && clinical.visit_index[u] == 0) baseline_ad.push_back(row);
  }
  const auto recs = bag_records(encoder_predict(run.history.params, clinical.feature_rows(baseline_ad)),
                                clinical, baseline_ad);
  EXPECT_NEAR(group_bag_stats(recs).groups.at(Group::AD).mean, 5.0, 1.0);
}

TEST(Benchmark, ExpEmbeddingSeparatesGroups) {
  auto b = default_benchmark(1);
  b.train_size = 2048;
  const auto run = run_benchmark(b, benchmark_loss_config(LossKind::Exp), benchmark_train_config(1));
  const auto& r = run.report;
  EXPECT_EQ(r.n_train, 2048);
  const auto& g = r.bag.groups;
  EXPECT_NEAR(g.at(Group::HC).mean, 0.0, 1.0);
  EXPECT_LT(g.at(Group::HC).mean, g.at(Group::sMCI).mean);
  EXPECT_LT(g.at(Group::sMCI).mean, g.at(Group::pMCI).mean);
  EXPECT_LT(g.at(Group::pMCI).mean, g.at(Group::AD).mean);
  EXPECT_GT(r.longitudinal.slope.at(Group::AD), 0.5);
  ASSERT_TRUE(r.auc_hc_vs_ad.has_value());
  EXPECT_GT(*r.auc_hc_vs_ad, 0.8);
  EXPECT_NEAR(r.site_bacc, r.site_chance, 0.05);
  EXPECT_NEAR(r.challenge_score, std::pow(r.site_bacc, 0.3) * r.mae_external, 1e-12);
  EXPECT_EQ(run.history.epochs.size(), 40u);
}

TEST(Benchmark, HealthyOnlyOmitsGroups) {
  auto b = tiny_sweep().base;
  b.clinical_subjects = 0;
  auto t = tiny_sweep().train;
  const auto r = run_benchmark(b, benchmark_loss_config(), t).report;
  EXPECT_TRUE(r.bag.groups.empty());
  EXPECT_EQ(r.bag.omitted.size(), 4u);
  EXPECT_FALSE(r.auc_hc_vs_ad.has_value());
  EXPECT_TRUE(std::isfinite(r.mae_internal));
  EXPECT_TRUE(std::isfinite(r.mae_external));
}

TEST(Benchmark, PretrainingHelpsFinetuning) {
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto b = default_benchmark(seed);
    b.train_size = 1024;
    b.finetune = true;
    b.finetune_options.head_only = true;
    b.finetune_options.train.epochs = 20;
    b.finetune_options.train.initial_lr = 1e-2;
    b.finetune_options.train.seed = seed;
    const auto pre = run_benchmark(b, benchmark_loss_config(), benchmark_train_config(seed));
    auto cold_cfg = benchmark_train_config(seed);
    cold_cfg.epochs = 0;
    const auto cold = run_benchmark(b, benchmark_loss_config(), cold_cfg);
    if (*pre.report.downstream_accuracy >= *cold.report.downstream_accuracy) ++wins;
  }
  EXPECT_GE(wins, 4);
}

TEST(Sweep, AxisNames) {
  for (auto a : {SweepAxis::TrainSize, SweepAxis::LossKind, SweepAxis::Sigma, SweepAxis::SiteStrength}) {
    EXPECT_EQ(parse_sweep_axis(to_string(a)), a);
  }
  EXPECT_THROW(parse_sweep_axis("depth"), InvalidArgument);
}

TEST(Sweep, Validation) {
  auto s = tiny_sweep();
  s.values = {"64"};
  EXPECT_THROW(validate(s), InvalidArgument);
  s = tiny_sweep();
  s.values = {"64", "12.5"};
  EXPECT_THROW(validate(s), InvalidArgument);
  s = tiny_sweep();
  s.seeds.clear();
  EXPECT_THROW(validate(s), InvalidArgument);
  s = tiny_sweep();
  s.axis = SweepAxis::LossKind;
  s.values = {"exp", "bogus"};
  EXPECT_THROW(validate(s), InvalidArgument);
  s = tiny_sweep();
  s.axis = SweepAxis::Sigma;
  s.values = {"1", "two"};
  EXPECT_THROW(validate(s), InvalidArgument);
  s = tiny_sweep();
  s.jobs = 0;
  EXPECT_THROW(validate(s), InvalidArgument);
}

TEST(Sweep, CellsOrderedAndJobsInvariant) {
  auto s = tiny_sweep();
  const auto serial = run_sweep(s);
  ASSERT_EQ(serial.size(), 24u);
  std::size_t i = 0;
  for (LossKind k : s.losses) {
    for (const auto& v : s.values) {
      for (auto seed : s.seeds) {
        EXPECT_EQ(serial[i].method, to_string(k));
        EXPECT_EQ(serial[i].axis_value, v);
        EXPECT_EQ(serial[i].seed, seed);
        EXPECT_TRUE(serial[i].ok) << serial[i].error;
        ++i;
      }
    }
  }
  const auto csv = trend_csv(serial);
  EXPECT_EQ(count_lines(csv), 25u);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "method,axis_value,seed,mae_ext,site_bacc,auc,challenge_score");

  s.jobs = 3;
  const auto parallel = run_sweep(s);
  EXPECT_EQ(trend_csv(parallel), csv);
  EXPECT_EQ(sweep_summary(s, parallel).dump(), sweep_summary(s, serial).dump());
}

TEST(Sweep, FailedCellsAreRecorded) {
  auto s = tiny_sweep();
  s.axis = SweepAxis::Sigma;
  s.values = {"2", "-1"};
  s.seeds = {1};
  s.losses = {LossKind::Exp};
  const auto cells = run_sweep(s);
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_TRUE(cells[0].ok);
  EXPECT_FALSE(cells[1].ok);
  EXPECT_FALSE(cells[1].error.empty());
  EXPECT_EQ(count_lines(trend_csv(cells)), 2u);
  const auto j = sweep_summary(s, cells);
  EXPECT_EQ(j["cells_total"], 2);
  EXPECT_EQ(j["cells_succeeded"], 1);
  EXPECT_EQ(j["runs"][1]["status"], "failed");
  EXPECT_EQ(j["aggregates"].size(), 1u);
}

TEST(Sweep, LossAxisUsesValuesAsMethods) {
  auto s = tiny_sweep();
  s.axis = SweepAxis::LossKind;
  s.values = {"yaware", "threshold"};
  s.seeds = {4};
  const auto cells = run_sweep(s);
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_EQ(cells[0].method, "yaware");
  EXPECT_EQ(cells[1].method, "threshold");
}

TEST(Json, SyntheticSpecRoundTrip) {
  SyntheticSpec s;
  s.n_subjects = 123;
  s.site_effect_strength = 0.25;
  s.baseline_age_range = std::array<double, 2>{40.0, 60.0};
  s.bag_offset = {0, 1, 2, 3};
  s.subject_stream = 9;
  const auto j = to_json(s);
  const auto back = synthetic_spec_from_json(j);
  EXPECT_EQ(to_json(back).dump(), j.dump());
  EXPECT_EQ(synthetic_spec_from_json({{"seed", 5}}).n_subjects, 5000);
  EXPECT_THROW(synthetic_spec_from_json({{"age_range", {1, 2, 3}}}), InvalidArgument);
  auto partial = synthetic_spec_from_json({{"baseline_age_range", nullptr}}, s);
  EXPECT_FALSE(partial.baseline_age_range.has_value());
}
