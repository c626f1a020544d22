// kwcl: generate cohorts, train encoders, evaluate them, run sweeps and
// turn sweep summaries into tables.
//
// Settings resolve as flags > --config file > built-in defaults, and the
// effective settings are written into every JSON artifact. Exit codes:
// 0 success, 2 bad input or configuration, 3 numerical divergence,
// 4 every sweep cell failed.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "kwcl/errors.hpp"
#include "kwcl/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace kwcl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitSweepFailed = 4;

struct SweepFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Options shared by every command.
struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidArgument("config file " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw InvalidArgument("config file " + path + " must hold a JSON object");
  static const std::set<std::string> sections = {"cohort", "loss", "train", "split", "eval",
                                                 "benchmark", "sweep"};
  for (const auto& [key, value] : j.items()) {
    if (!sections.count(key)) throw InvalidArgument("unknown config section '" + key + "'");
    if (!value.is_object()) throw InvalidArgument("config section '" + key + "' must be an object");
  }
  return j;
}

json section(const json& cfg, const char* name) {
  return cfg.contains(name) ? cfg.at(name) : json::object();
}

template <typename T>
void apply(const json& j, const char* key, T& field) {
  if (j.contains(key)) j.at(key).get_to(field);
}

fs::path prepare_out_dir(const std::string& dir) {
  const fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw InvalidArgument("cannot create output directory " + dir);
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << text;
  if (!out) throw InvalidArgument("failed writing " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Splits ------------------------------------------------------------------

struct SplitOptions {
  int folds = 5;
  int fold = 0;
  std::optional<std::uint64_t> seed;  // defaults to the run seed
  std::vector<std::string> external_sites;  // empty = last ceil(20%) of sites
};

SplitOptions split_from(const json& j) {
  SplitOptions s;
  apply(j, "folds", s.folds);
  apply(j, "fold", s.fold);
  if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  apply(j, "external_sites", s.external_sites);
  return s;
}

json to_json(const SplitOptions& s, std::uint64_t seed, const std::vector<std::string>& external) {
  return {{"folds", s.folds}, {"fold", s.fold}, {"seed", seed}, {"external_sites", external}};
}

// Rows of one cohort file used by train and evaluate: healthy controls of
// the internal sites outside the held-out fold train the encoder; the
// held-out fold and the external sites are the test sets; every
// internal-site row not used for training enters the BAG analysis.
struct CohortSplit {
  std::vector<std::string> external;
  SplitPlan plan;
  std::vector<Index> clinical;
};

CohortSplit split_cohort(const Cohort& c, const SplitOptions& s, std::uint64_t seed) {
  CohortSplit out;
  out.external = s.external_sites.empty() ? default_external_sites(c) : s.external_sites;
  out.plan = plan_splits(c, out.external, s.folds, s.fold, seed);
  const std::set<Index> train(out.plan.train_pool.begin(), out.plan.train_pool.end());
  for (Index r : internal_site_rows(c, out.external)) {
    if (!train.count(r)) out.clinical.push_back(r);
  }
  return out;
}

EvalOptions eval_from(const json& j, EvalOptions e) {
  apply(j, "ridge_lambda", e.ridge_lambda);
  apply(j, "probe_folds", e.probe_folds);
  apply(j, "min_visits", e.min_visits);
  return e;
}

json to_json(const EvalOptions& e) {
  return {{"ridge_lambda", e.ridge_lambda}, {"probe_folds", e.probe_folds}, {"min_visits", e.min_visits}};
}

// generate ----------------------------------------------------------------

struct GenerateFlags {
  std::optional<Index> n_subjects;
  std::optional<int> n_sites;
  std::optional<int> visits;
  std::optional<double> site_strength;
  std::optional<double> noise;
  std::optional<Index> feature_dim;
  bool healthy_only = false;
};

int cmd_generate(const Common& common, const GenerateFlags& f) {
  const json cfg = load_config(common.config_path);
  SyntheticSpec spec = synthetic_spec_from_json(section(cfg, "cohort"));
  if (common.seed) spec.seed = *common.seed;
  if (f.n_subjects) spec.n_subjects = *f.n_subjects;
  if (f.n_sites) spec.n_sites = *f.n_sites;
  if (f.visits) spec.visits_per_subject = *f.visits;
  if (f.site_strength) spec.site_effect_strength = *f.site_strength;
  if (f.noise) spec.noise_std = *f.noise;
  if (f.feature_dim) spec.feature_dim = *f.feature_dim;
  if (f.healthy_only) spec.group_fractions = {1.0, 0.0, 0.0, 0.0};

  const Cohort cohort = generate_cohort(spec);
  const fs::path dir = prepare_out_dir(common.out_dir);
  write_cohort_csv(cohort, dir / "cohort.csv");
  write_json(dir / "generate.json", {{"command", "generate"},
                                     {"config", {{"cohort", to_json(spec)}}},
                                     {"rows", cohort.size()},
                                     {"subjects", cohort.subjects().size()},
                                     {"sites", cohort.sites()}});
  std::cout << "wrote " << (dir / "cohort.csv").string() << ": " << cohort.size() << " rows, "
            << cohort.subjects().size() << " subjects\n";
  return kExitOk;
}

// train -------------------------------------------------------------------

struct LossTrainFlags {
  std::optional<std::string> loss;
  std::optional<double> sigma;
  std::optional<double> tau;
  std::optional<int> epochs;
  std::optional<double> lr;
  std::optional<int> batch_size;
};

void apply_flags(const LossTrainFlags& f, LossConfig& loss, TrainConfig& train) {
  if (f.loss) loss.kind = parse_loss_kind(*f.loss);
  if (f.sigma) loss.kernel.sigma = *f.sigma;
  if (f.tau) loss.similarity.temperature = *f.tau;
  if (f.epochs) train.epochs = *f.epochs;
  if (f.lr) train.initial_lr = *f.lr;
  if (f.batch_size) train.batch_size = *f.batch_size;
}

struct SplitFlags {
  std::optional<int> folds;
  std::optional<int> fold;
};

SplitOptions resolve_split(const json& cfg, const SplitFlags& f) {
  SplitOptions s = split_from(section(cfg, "split"));
  if (f.folds) s.folds = *f.folds;
  if (f.fold) s.fold = *f.fold;
  return s;
}

int cmd_train(const Common& common, const std::string& cohort_path, const LossTrainFlags& lt,
              const SplitFlags& sf) {
  const json cfg = load_config(common.config_path);
  LossConfig loss = loss_config_from_json(section(cfg, "loss"), benchmark_loss_config());
  TrainConfig train_cfg = train_config_from_json(section(cfg, "train"), benchmark_train_config(0));
  if (common.seed) train_cfg.seed = *common.seed;
  apply_flags(lt, loss, train_cfg);
  validate(train_cfg);
  const SplitOptions split = resolve_split(cfg, sf);
  const std::uint64_t split_seed = split.seed.value_or(train_cfg.seed);

  const Cohort cohort = read_cohort_csv(cohort_path);
  const CohortSplit rows = split_cohort(cohort, split, split_seed);
  const fs::path dir = prepare_out_dir(common.out_dir);

  const TrainHistory h = train(cohort, rows.plan.train_pool, loss, train_cfg);
  write_checkpoint(Checkpoint{h.params, loss, train_cfg}, dir / "checkpoint.json");
  json history = history_json(h);
  write_json(dir / "history.json",
             {{"command", "train"},
              {"config",
               {{"cohort_file", cohort_path},
                {"loss", to_json(loss)},
                {"train", to_json(train_cfg)},
                {"split", to_json(split, split_seed, rows.external)}}},
              {"n_train", rows.plan.train_pool.size()},
              {"epochs", history["epochs"]},
              {"skipped_batches", history["skipped_batches"]},
              {"capped_terms", history["capped_terms"]},
              {"metadata", history_timing_json(h)}});
  const double last = h.epochs.empty() ? 0.0 : h.epochs.back().loss;
  std::cout << "trained " << to_string(loss.kind) << " on " << rows.plan.train_pool.size() << " rows for "
            << h.epochs.size() << " epochs; final loss " << last << "\n";
  return kExitOk;
}

// evaluate ----------------------------------------------------------------

int cmd_evaluate(const Common& common, const std::string& checkpoint_path, const std::string& cohort_path,
                 const std::string& clinical_path, const SplitFlags& sf,
                 std::optional<double> ridge_lambda) {
  const json cfg = load_config(common.config_path);
  const Checkpoint ckpt = read_checkpoint(checkpoint_path);
  const std::uint64_t seed = common.seed.value_or(ckpt.train.seed);
  EvalOptions eval = eval_from(section(cfg, "eval"), EvalOptions{});
  if (ridge_lambda) eval.ridge_lambda = *ridge_lambda;
  eval.seed = seed;
  const SplitOptions split = resolve_split(cfg, sf);
  const std::uint64_t split_seed = split.seed.value_or(seed);

  const Cohort cohort = read_cohort_csv(cohort_path);
  if (cohort.feature_dim() != ckpt.params.input_dim()) {
    throw InvalidArgument("cohort has " + std::to_string(cohort.feature_dim()) +
                          " features but the checkpoint expects " + std::to_string(ckpt.params.input_dim()));
  }
  const CohortSplit rows = split_cohort(cohort, split, split_seed);
  EvalData data;
  data.healthy = &cohort;
  data.train = rows.plan.train_pool;
  data.internal_test = rows.plan.internal_test;
  data.external_test = rows.plan.external_test;
  Cohort clinical;
  if (!clinical_path.empty()) {
    clinical = read_cohort_csv(clinical_path);
    data.clinical = &clinical;
    data.clinical_rows = internal_site_rows(clinical, rows.external);
  } else {
    data.clinical = &cohort;
    data.clinical_rows = rows.clinical;
  }
  const EvalReport report = evaluate_encoder(ckpt.params, data, eval);

  const fs::path dir = prepare_out_dir(common.out_dir);
  write_json(dir / "report.json",
             {{"command", "evaluate"},
              {"config",
               {{"checkpoint_file", checkpoint_path},
                {"cohort_file", cohort_path},
                {"clinical_file", clinical_path.empty() ? json(nullptr) : json(clinical_path)},
                {"loss", to_json(ckpt.loss)},
                {"split", to_json(split, split_seed, rows.external)},
                {"eval", to_json(eval)},
                {"seed", seed}}},
              {"report", to_json(report)}});
  std::cout << std::setprecision(4) << "mae_internal " << report.mae_internal << "  mae_external "
            << report.mae_external << "  site_bacc " << report.site_bacc << "  challenge "
            << report.challenge_score << "\n";
  return kExitOk;
}

// sweep -------------------------------------------------------------------

struct SweepFlags {
  std::optional<std::string> axis;
  std::optional<std::string> values;
  std::optional<std::string> seeds;
  std::optional<std::string> losses;
  std::optional<int> jobs;
  std::optional<Index> n_subjects;
};

SweepSpec resolve_sweep(const json& cfg, const Common& common, const SweepFlags& f, const LossTrainFlags& lt) {
  SweepSpec s;
  const json sw = section(cfg, "sweep");
  const json bench = section(cfg, "benchmark");
  s.values = {"256", "512", "1024", "2048"};
  if (sw.contains("axis")) s.axis = parse_sweep_axis(sw.at("axis").get<std::string>());
  if (sw.contains("values")) {
    s.values.clear();
    for (const auto& v : sw.at("values")) s.values.push_back(v.is_string() ? v.get<std::string>() : v.dump());
  }
  apply(sw, "seeds", s.seeds);
  if (sw.contains("losses")) {
    s.losses.clear();
    for (const auto& v : sw.at("losses")) s.losses.push_back(parse_loss_kind(v.get<std::string>()));
  }
  apply(sw, "jobs", s.jobs);

  s.base.healthy = synthetic_spec_from_json(section(cfg, "cohort"), s.base.healthy);
  apply(bench, "clinical_subjects", s.base.clinical_subjects);
  apply(bench, "clinical_visits", s.base.clinical_visits);
  apply(bench, "clinical_age_range", s.base.clinical_age_range);
  apply(bench, "train_size", s.base.train_size);
  apply(bench, "folds", s.base.folds);
  apply(bench, "test_fold", s.base.test_fold);
  s.base.eval = eval_from(section(cfg, "eval"), s.base.eval);
  s.loss = loss_config_from_json(section(cfg, "loss"), s.loss);
  s.train = train_config_from_json(section(cfg, "train"), s.train);

  if (f.axis) s.axis = parse_sweep_axis(*f.axis);
  if (f.values) s.values = split_list(*f.values);
  if (f.seeds) {
    s.seeds.clear();
    for (const auto& v : split_list(*f.seeds)) s.seeds.push_back(std::stoull(v));
  } else if (common.seed && !sw.contains("seeds")) {
    s.seeds = {*common.seed};
  }
  if (f.losses) {
    s.losses.clear();
    for (const auto& v : split_list(*f.losses)) s.losses.push_back(parse_loss_kind(v));
  }
  if (f.jobs) s.jobs = *f.jobs;
  if (f.n_subjects) s.base.healthy.n_subjects = *f.n_subjects;
  apply_flags(lt, s.loss, s.train);
  validate(s);
  validate(s.train);
  validate(s.base.healthy);
  return s;
}

int cmd_sweep(const Common& common, const SweepFlags& f, const LossTrainFlags& lt) {
  const json cfg = load_config(common.config_path);
  const SweepSpec spec = resolve_sweep(cfg, common, f, lt);
  const fs::path dir = prepare_out_dir(common.out_dir);

  const auto start = std::chrono::steady_clock::now();
  const auto cells = run_sweep(spec);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json summary = sweep_summary(spec, cells);
  summary["command"] = "sweep";
  json cell_seconds = json::array();
  for (const auto& c : cells) cell_seconds.push_back(c.seconds);
  summary["metadata"] = {{"jobs", spec.jobs}, {"total_wall_seconds", seconds}, {"cell_wall_seconds", cell_seconds}};
  write_text(dir / "trend.csv", trend_csv(cells));
  write_json(dir / "summary.json", summary);

  std::size_t ok = 0;
  for (const auto& c : cells) {
    if (c.ok) {
      ++ok;
    } else {
      std::cerr << "cell " << c.method << " " << c.axis_value << " seed " << c.seed << " failed: " << c.error
                << "\n";
    }
  }
  std::cout << ok << " of " << cells.size() << " cells succeeded; wrote " << (dir / "trend.csv").string()
            << " and " << (dir / "summary.json").string() << "\n";
  if (ok == 0) throw SweepFailed("every sweep cell failed");
  return kExitOk;
}

// report ------------------------------------------------------------------

std::string cell(const json& stat) {
  if (stat.is_null()) return "n/a";
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(3) << stat.at("mean").get<double>() << " ± "
     << stat.at("std").get<double>();
  return ss.str();
}

std::string plain(const json& stat, const char* key) {
  if (stat.is_null()) return "";
  std::ostringstream ss;
  ss << std::setprecision(17) << stat.at(key).get<double>();
  return ss.str();
}

int cmd_report(const Common& common, const std::string& summary_path) {
  std::ifstream in(summary_path);
  if (!in) throw InvalidArgument("cannot open sweep summary " + summary_path);
  json summary;
  try {
    in >> summary;
  } catch (const json::exception& e) {
    throw InvalidArgument("sweep summary " + summary_path + " is not valid JSON: " + e.what());
  }
  if (!summary.contains("aggregates") || !summary.contains("config")) {
    throw InvalidArgument(summary_path + " is not a sweep summary");
  }
  const std::string axis = summary.at("config").at("axis").get<std::string>();

  std::ostringstream md;
  md << "# Sweep over " << axis << "\n\n"
     << summary.at("cells_succeeded").get<int>() << " of " << summary.at("cells_total").get<int>()
     << " cells succeeded.\n\n"
     << "| method | " << axis << " | n | external MAE | site BAcc | HC vs AD AUC | challenge score |\n"
     << "|---|---|---|---|---|---|---|\n";
  std::string csv = "method,axis_value,n,mae_ext_mean,mae_ext_std,site_bacc_mean,site_bacc_std,auc_mean,auc_std,"
                    "challenge_score_mean,challenge_score_std\n";
  for (const auto& a : summary.at("aggregates")) {
    const auto& m = a.at("mae_ext");
    md << "| " << a.at("method").get<std::string>() << " | " << a.at("axis_value").get<std::string>() << " | "
       << m.at("n").get<int>() << " | " << cell(m) << " | " << cell(a.at("site_bacc")) << " | " << cell(a.at("auc"))
       << " | " << cell(a.at("challenge_score")) << " |\n";
    csv += a.at("method").get<std::string>() + "," + a.at("axis_value").get<std::string>() + "," +
           std::to_string(m.at("n").get<int>()) + "," + plain(m, "mean") + "," + plain(m, "std") + "," +
           plain(a.at("site_bacc"), "mean") + "," + plain(a.at("site_bacc"), "std") + "," +
           plain(a.at("auc"), "mean") + "," + plain(a.at("auc"), "std") + "," +
           plain(a.at("challenge_score"), "mean") + "," + plain(a.at("challenge_score"), "std") + "\n";
  }
  std::size_t failed = 0;
  for (const auto& r : summary.at("runs")) {
    if (r.at("status") != "ok") {
      if (failed++ == 0) md << "\n## Failed cells\n\n";
      md << "- " << r.at("method").get<std::string>() << " " << r.at("axis_value").get<std::string>() << " seed "
         << r.at("seed").get<std::uint64_t>() << ": " << r.at("error").get<std::string>() << "\n";
    }
  }
  const fs::path dir = prepare_out_dir(common.out_dir);
  write_text(dir / "report.md", md.str());
  write_text(dir / "plot_data.csv", csv);
  std::cout << "wrote " << (dir / "report.md").string() << " and " << (dir / "plot_data.csv").string() << "\n";
  return kExitOk;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--out-dir", c.out_dir, "directory for output files")->capture_default_str();
}

void add_loss_train(CLI::App* cmd, LossTrainFlags& f) {
  cmd->add_option("--loss", f.loss, "loss kind: infonce, yaware, threshold, exp, l1");
  cmd->add_option("--sigma", f.sigma, "kernel bandwidth (label units)");
  cmd->add_option("--tau", f.tau, "similarity temperature");
  cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--lr", f.lr, "initial learning rate");
  cmd->add_option("--batch-size", f.batch_size, "mini-batch size");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel-weighted contrastive learning for brain-age style regression"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "kwcl 1.0");

  Common common;
  GenerateFlags gen;
  LossTrainFlags lt;
  SplitFlags sf;
  SweepFlags sw;
  std::string cohort_path, checkpoint_path, clinical_path, summary_path;
  std::optional<double> ridge_lambda;

  auto* generate = app.add_subcommand("generate", "write a synthetic cohort CSV");
  add_common(generate, common);
  generate->add_option("--n-subjects", gen.n_subjects, "number of subjects");
  generate->add_option("--n-sites", gen.n_sites, "number of sites");
  generate->add_option("--visits", gen.visits, "visits per subject");
  generate->add_option("--site-strength", gen.site_strength, "site effect strength");
  generate->add_option("--noise", gen.noise, "feature noise standard deviation");
  generate->add_option("--feature-dim", gen.feature_dim, "number of features");
  generate->add_flag("--healthy-only", gen.healthy_only, "generate healthy controls only");

  auto* train_cmd = app.add_subcommand("train", "train an encoder on a cohort CSV");
  add_common(train_cmd, common);
  train_cmd->add_option("--cohort", cohort_path, "cohort CSV")->required();
  add_loss_train(train_cmd, lt);
  train_cmd->add_option("--folds", sf.folds, "number of subject folds");
  train_cmd->add_option("--fold", sf.fold, "held-out fold");

  auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint");
  add_common(evaluate, common);
  evaluate->add_option("--checkpoint", checkpoint_path, "checkpoint JSON")->required();
  evaluate->add_option("--cohort", cohort_path, "cohort CSV used for training")->required();
  evaluate->add_option("--clinical", clinical_path, "optional separate cohort for the BAG analysis");
  evaluate->add_option("--folds", sf.folds, "number of subject folds");
  evaluate->add_option("--fold", sf.fold, "held-out fold");
  evaluate->add_option("--ridge-lambda", ridge_lambda, "ridge penalty of the age readout");

  auto* sweep = app.add_subcommand("sweep", "run a benchmark sweep");
  add_common(sweep, common);
  add_loss_train(sweep, lt);
  sweep->add_option("--axis", sw.axis, "train_size, loss_kind, sigma or site_strength");
  sweep->add_option("--values", sw.values, "comma-separated axis values");
  sweep->add_option("--seeds", sw.seeds, "comma-separated seeds");
  sweep->add_option("--losses", sw.losses, "comma-separated loss kinds");
  sweep->add_option("--jobs", sw.jobs, "cells run in parallel");
  sweep->add_option("--n-subjects", sw.n_subjects, "healthy subjects per benchmark cohort");

  auto* report = app.add_subcommand("report", "tabulate a sweep summary");
  add_common(report, common);
  report->add_option("--summary", summary_path, "summary.json written by sweep")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*generate) return cmd_generate(common, gen);
    if (*train_cmd) return cmd_train(common, cohort_path, lt, sf);
    if (*evaluate) return cmd_evaluate(common, checkpoint_path, cohort_path, clinical_path, sf, ridge_lambda);
    if (*sweep) return cmd_sweep(common, sw, lt);
    if (*report) return cmd_report(common, summary_path);
  } catch (const TrainingDiverged& e) {
    std::cerr << "error: training diverged: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const SweepFailed& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSweepFailed;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const json::exception& e) {
    std::cerr << "error: bad configuration value: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
