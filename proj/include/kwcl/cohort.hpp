#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kwcl/types.hpp"

namespace kwcl {

enum class Group { HC = 0, sMCI = 1, pMCI = 2, AD = 3 };
inline constexpr std::array<Group, 4> kAllGroups = {Group::HC, Group::sMCI, Group::pMCI,
                                                    Group::AD};

std::string_view to_string(Group g);
Group parse_group(std::string_view s);

/// Subjects x visits table, stored column-wise. Row r of every column
/// describes the same visit.
struct Cohort {
  std::vector<std::string> subject_id;
  std::vector<int> visit_index;
  Eigen::VectorXd visit_time;  // years since baseline
  std::vector<std::string> site;
  Eigen::VectorXd age;  // chronological, years
  std::vector<Group> group;
  Eigen::MatrixXd features;  // rows x p

  Index size() const { return static_cast<Index>(subject_id.size()); }
  Index feature_dim() const { return features.cols(); }

  Cohort select(std::span<const Index> rows) const;
  Eigen::MatrixXd feature_rows(std::span<const Index> rows) const;
  Eigen::VectorXd age_rows(std::span<const Index> rows) const;

  /// Distinct site names in sorted order.
  std::vector<std::string> sites() const;
  /// Distinct subjects in first-appearance order.
  std::vector<std::string> subjects() const;

  /// Throws InvalidArgument on duplicate (subject, visit) keys, subjects
  /// that change site or group, non-finite values or ragged columns.
  void validate() const;
};

/// Parameters of the synthetic multi-site generator. Features are
///   x = M phi(y_eff) + beta c_site + noise,
/// with phi(y) = [r, r^2, sin r, cos r], r = y / mid(age_range), and
/// y_eff = age + offset(group) + rate(group) * visit_time.
struct SyntheticSpec {
  Index n_subjects = 5000;
  int n_sites = 10;
  double age_lo = 20.0;
  double age_hi = 90.0;
  // Narrower range for baseline ages; the feature model keeps using
  // mid(age_range), so cohorts differing only here stay comparable.
  std::optional<std::array<double, 2>> baseline_age_range;
  Index feature_dim = 64;
  double site_effect_strength = 1.0;
  double noise_std = 0.3;
  std::array<double, 4> group_fractions = {0.36, 0.28, 0.13, 0.23};
  std::array<double, 4> bag_offset = {0.0, 0.5, 2.5, 5.0};  // years
  std::array<double, 4> bag_rate = {0.0, 0.0, 0.8, 1.0};    // years per year
  int visits_per_subject = 1;
  double visit_spacing = 1.0;  // years
  std::uint64_t seed = 0;
  // Selects the subject draws independently of the seed-fixed mixing
  // matrix and site vectors, so companion cohorts share one feature model.
  std::uint64_t subject_stream = 0;
};

void validate(const SyntheticSpec& spec);

/// Fraction of sites held out as external: ceil(20%) of n_sites.
int external_site_count(int n_sites);
std::string site_name(int index);

/// Effective-age shift of a group at a visit time.
double effective_age_offset(const SyntheticSpec& spec, Group g, double visit_time);

Cohort generate_cohort(const SyntheticSpec& spec);

/// Subject-level fold assignment; every visit of a subject shares a fold.
struct FoldAssignment {
  int k = 0;
  std::unordered_map<std::string, int> subject_fold;

  int fold_of(const std::string& subject) const;
  std::vector<Index> rows_in_fold(const Cohort& cohort, int fold) const;
  std::vector<Index> rows_not_in_fold(const Cohort& cohort, int fold) const;
};

/// Subjects sorted by baseline age (ties by id) are dealt round-robin into
/// k folds starting at a seeded offset.
FoldAssignment stratified_subject_folds(const Cohort& cohort, int k, std::uint64_t seed);

/// CSV with header subject_id,visit_index,visit_time,site,age,group,f0..f{p-1}.
Cohort read_cohort_csv(const std::filesystem::path& path);
Cohort parse_cohort_csv(std::string_view text);
void write_cohort_csv(const Cohort& cohort, const std::filesystem::path& path);
std::string format_cohort_csv(const Cohort& cohort);

}  // namespace kwcl
