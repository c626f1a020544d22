#include "kwcl/cohort.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "kwcl/errors.hpp"
#include "kwcl/random.hpp"

namespace kwcl {

std::string_view to_string(Group g) {
  switch (g) {
    case Group::HC:
      return "HC";
    case Group::sMCI:
      return "sMCI";
    case Group::pMCI:
      return "pMCI";
    case Group::AD:
      return "AD";
  }
  return "HC";
}

Group parse_group(std::string_view s) {
  for (Group g : kAllGroups) {
    if (s == to_string(g)) return g;
  }
  throw InvalidArgument("unknown group '" + std::string(s) + "'");
}

Cohort Cohort::select(std::span<const Index> rows) const {
  Cohort out;
  const auto n = rows.size();
  out.subject_id.reserve(n);
  out.visit_index.reserve(n);
  out.site.reserve(n);
  out.group.reserve(n);
  out.visit_time.resize(static_cast<Index>(n));
  out.age.resize(static_cast<Index>(n));
  out.features.resize(static_cast<Index>(n), features.cols());
  for (std::size_t j = 0; j < n; ++j) {
    const Index r = rows[j];
    const auto u = static_cast<std::size_t>(r);
    const auto jj = static_cast<Index>(j);
    out.subject_id.push_back(subject_id[u]);
    out.visit_index.push_back(visit_index[u]);
    out.site.push_back(site[u]);
    out.group.push_back(group[u]);
    out.visit_time(jj) = visit_time(r);
    out.age(jj) = age(r);
    out.features.row(jj) = features.row(r);
  }
  return out;
}

Eigen::MatrixXd Cohort::feature_rows(std::span<const Index> rows) const {
  Eigen::MatrixXd out(static_cast<Index>(rows.size()), features.cols());
  for (std::size_t j = 0; j < rows.size(); ++j) out.row(static_cast<Index>(j)) = features.row(rows[j]);
  return out;
}

Eigen::VectorXd Cohort::age_rows(std::span<const Index> rows) const {
  Eigen::VectorXd out(static_cast<Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) out(static_cast<Index>(j)) = age(rows[j]);
  return out;
}

std::vector<std::string> Cohort::sites() const {
  std::set<std::string> s(site.begin(), site.end());
  return {s.begin(), s.end()};
}

std::vector<std::string> Cohort::subjects() const {
  std::vector<std::string> out;
  std::unordered_map<std::string, bool> seen;
  for (const auto& s : subject_id) {
    if (seen.emplace(s, true).second) out.push_back(s);
  }
  return out;
}

void Cohort::validate() const {
  const auto n = subject_id.size();
  if (visit_index.size() != n || site.size() != n || group.size() != n ||
      static_cast<std::size_t>(visit_time.size()) != n || static_cast<std::size_t>(age.size()) != n ||
      static_cast<std::size_t>(features.rows()) != n) {
    throw InvalidArgument("cohort columns have different lengths");
  }
  std::set<std::pair<std::string, int>> keys;
  std::unordered_map<std::string, std::pair<std::string, Group>> subject_info;
  for (std::size_t r = 0; r < n; ++r) {
    const auto ri = static_cast<Index>(r);
    const std::string where = " (row " + std::to_string(r) + ")";
    if (visit_index[r] < 0) throw InvalidArgument("negative visit_index" + where);
    if (!keys.emplace(subject_id[r], visit_index[r]).second) {
      throw InvalidArgument("duplicate subject/visit " + subject_id[r] + "/" +
                            std::to_string(visit_index[r]) + where);
    }
    auto [it, fresh] = subject_info.try_emplace(subject_id[r], site[r], group[r]);
    if (!fresh && (it->second.first != site[r] || it->second.second != group[r])) {
      throw InvalidArgument("subject " + subject_id[r] + " changes site or group" + where);
    }
    if (!std::isfinite(age(ri)) || !std::isfinite(visit_time(ri)) || !features.row(ri).allFinite()) {
      throw InvalidArgument("non-finite value" + where);
    }
  }
}

void validate(const SyntheticSpec& spec) {
  if (spec.n_subjects < 1) throw InvalidArgument("n_subjects must be positive");
  if (spec.n_sites < 1) throw InvalidArgument("n_sites must be positive");
  if (!(spec.age_lo < spec.age_hi)) throw InvalidArgument("age range must satisfy lo < hi");
  if (!(spec.age_lo + spec.age_hi > 0.0)) throw InvalidArgument("age range midpoint must be positive");
  if (spec.baseline_age_range) {
    const auto [lo, hi] = *spec.baseline_age_range;
    if (!(lo < hi) || lo < spec.age_lo || hi > spec.age_hi) {
      throw InvalidArgument("baseline age range must be an increasing sub-range of age_range");
    }
  }
  if (spec.feature_dim < 1) throw InvalidArgument("feature_dim must be positive");
  if (!(spec.site_effect_strength >= 0.0)) throw InvalidArgument("site effect must be >= 0");
  if (!(spec.noise_std >= 0.0)) throw InvalidArgument("noise_std must be >= 0");
  double total = 0.0;
  for (double f : spec.group_fractions) {
    if (!(f >= 0.0)) throw InvalidArgument("group fractions must be non-negative");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("group fractions must sum to 1");
  if (spec.visits_per_subject < 1) throw InvalidArgument("visits_per_subject must be >= 1");
  if (!(spec.visit_spacing >= 0.0)) throw InvalidArgument("visit_spacing must be >= 0");
}

int external_site_count(int n_sites) {
  return static_cast<int>(std::ceil(0.2 * static_cast<double>(n_sites) - 1e-12));
}

std::string site_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "site%02d", index);
  return buf;
}

double effective_age_offset(const SyntheticSpec& spec, Group g, double visit_time) {
  const auto gi = static_cast<std::size_t>(g);
  return spec.bag_offset[gi] + spec.bag_rate[gi] * visit_time;
}

namespace {

std::string subject_name(std::uint64_t stream, Index i) {
  char buf[48];
  if (stream == 0) {
    std::snprintf(buf, sizeof buf, "S%05ld", static_cast<long>(i));
  } else {
    std::snprintf(buf, sizeof buf, "S%lu-%05ld", static_cast<unsigned long>(stream),
                  static_cast<long>(i));
  }
  return buf;
}

Eigen::Vector4d age_code(double y, double center) {
  const double r = y / center;
  return {r, r * r, std::sin(r), std::cos(r)};
}

}  // namespace

Cohort generate_cohort(const SyntheticSpec& spec) {
  validate(spec);
  const Index p = spec.feature_dim;
  const double center = 0.5 * (spec.age_lo + spec.age_hi);

  Rng structure = make_rng(spec.seed, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd mixing(p, 4);
  for (Index j = 0; j < 4; ++j) {
    for (Index i = 0; i < p; ++i) mixing(i, j) = normal(structure);
  }
  Eigen::MatrixXd site_vec(p, spec.n_sites);
  for (int s = 0; s < spec.n_sites; ++s) {
    Eigen::VectorXd v(p);
    do {
      for (Index i = 0; i < p; ++i) v(i) = normal(structure);
    } while (v.norm() == 0.0);
    site_vec.col(s) = v.normalized();
  }

  Rng draws = make_rng(spec.seed, 1000 + spec.subject_stream);
  const auto [draw_lo, draw_hi] =
      spec.baseline_age_range.value_or(std::array<double, 2>{spec.age_lo, spec.age_hi});
  std::uniform_real_distribution<double> uniform_age(draw_lo, draw_hi);
  std::uniform_int_distribution<int> uniform_site(0, spec.n_sites - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  const Index rows = spec.n_subjects * spec.visits_per_subject;
  Cohort c;
  c.subject_id.reserve(static_cast<std::size_t>(rows));
  c.visit_index.reserve(static_cast<std::size_t>(rows));
  c.site.reserve(static_cast<std::size_t>(rows));
  c.group.reserve(static_cast<std::size_t>(rows));
  c.visit_time.resize(rows);
  c.age.resize(rows);
  c.features.resize(rows, p);

  Index r = 0;
  for (Index i = 0; i < spec.n_subjects; ++i) {
    const double baseline = uniform_age(draws);
    const int site = uniform_site(draws);
    const double u = unit(draws);
    Group g = Group::AD;
    double acc = 0.0;
    for (Group cand : kAllGroups) {
      acc += spec.group_fractions[static_cast<std::size_t>(cand)];
      if (u < acc) {
        g = cand;
        break;
      }
    }
    // Guard against rounding leaving u >= acc with trailing zero fractions.
    while (spec.group_fractions[static_cast<std::size_t>(g)] == 0.0 && g != Group::HC) {
      g = static_cast<Group>(static_cast<int>(g) - 1);
    }
    const std::string id = subject_name(spec.subject_stream, i);
    for (int v = 0; v < spec.visits_per_subject; ++v, ++r) {
      const double t = v * spec.visit_spacing;
      const double effective = baseline + t + effective_age_offset(spec, g, t);
      Eigen::VectorXd x = mixing * age_code(effective, center) +
                          spec.site_effect_strength * site_vec.col(site);
      if (spec.noise_std > 0.0) {
        for (Index k = 0; k < p; ++k) x(k) += spec.noise_std * noise(draws);
      }
      c.subject_id.push_back(id);
      c.visit_index.push_back(v);
      c.site.push_back(site_name(site));
      c.group.push_back(g);
      c.visit_time(r) = t;
      c.age(r) = baseline + t;
      c.features.row(r) = x.transpose();
    }
  }
  return c;
}

int FoldAssignment::fold_of(const std::string& subject) const {
  auto it = subject_fold.find(subject);
  if (it == subject_fold.end()) throw InvalidArgument("subject " + subject + " has no fold");
  return it->second;
}

std::vector<Index> FoldAssignment::rows_in_fold(const Cohort& cohort, int fold) const {
  std::vector<Index> out;
  for (Index r = 0; r < cohort.size(); ++r) {
    if (fold_of(cohort.subject_id[static_cast<std::size_t>(r)]) == fold) out.push_back(r);
  }
  return out;
}

std::vector<Index> FoldAssignment::rows_not_in_fold(const Cohort& cohort, int fold) const {
  std::vector<Index> out;
  for (Index r = 0; r < cohort.size(); ++r) {
    if (fold_of(cohort.subject_id[static_cast<std::size_t>(r)]) != fold) out.push_back(r);
  }
  return out;
}

FoldAssignment stratified_subject_folds(const Cohort& cohort, int k, std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("need at least 2 folds");
  // Baseline = smallest visit index per subject.
  std::unordered_map<std::string, std::pair<int, double>> baseline;
  for (Index r = 0; r < cohort.size(); ++r) {
    const auto u = static_cast<std::size_t>(r);
    auto [it, fresh] = baseline.try_emplace(cohort.subject_id[u], cohort.visit_index[u], cohort.age(r));
    if (!fresh && cohort.visit_index[u] < it->second.first) {
      it->second = {cohort.visit_index[u], cohort.age(r)};
    }
  }
  if (static_cast<Index>(baseline.size()) < k) {
    throw InvalidArgument("fewer subjects (" + std::to_string(baseline.size()) + ") than folds (" +
                          std::to_string(k) + ")");
  }
  std::vector<std::pair<double, std::string>> order;
  order.reserve(baseline.size());
  for (const auto& [id, b] : baseline) order.emplace_back(b.second, id);
  std::sort(order.begin(), order.end());

  Rng rng = make_rng(seed, 7);
  const int offset = std::uniform_int_distribution<int>(0, k - 1)(rng);
  FoldAssignment out;
  out.k = k;
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.subject_fold[order[i].second] = static_cast<int>((static_cast<std::size_t>(offset) + i) %
                                                         static_cast<std::size_t>(k));
  }
  return out;
}

// CSV ------------------------------------------------------------------

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view s, std::size_t line, std::string_view column) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty() || !std::isfinite(v)) {
    throw ParseError("malformed number '" + std::string(s) + "' in column " + std::string(column), line);
  }
  return v;
}

int parse_int(std::string_view s, std::size_t line, std::string_view column) {
  int v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) {
    throw ParseError("malformed integer '" + std::string(s) + "' in column " + std::string(column),
                     line);
  }
  return v;
}

void append_double(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace

Cohort parse_cohort_csv(std::string_view text) {
  std::vector<std::string_view> lines;
  {
    std::size_t start = 0;
    while (start <= text.size()) {
      auto pos = text.find('\n', start);
      if (pos == std::string_view::npos) pos = text.size();
      std::string_view l = text.substr(start, pos - start);
      if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
      lines.push_back(l);
      start = pos + 1;
    }
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw ParseError("missing header", 1);

  const auto header = split_commas(lines[0]);
  std::map<std::string, std::size_t, std::less<>> col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!col.emplace(std::string(header[i]), i).second) {
      throw ParseError("duplicate column '" + std::string(header[i]) + "'", 1);
    }
  }
  for (const char* required : {"subject_id", "visit_index", "visit_time", "site", "age", "group"}) {
    if (!col.count(required)) throw ParseError(std::string("missing column ") + required, 1);
  }
  std::vector<std::size_t> feature_cols;
  while (true) {
    auto it = col.find("f" + std::to_string(feature_cols.size()));
    if (it == col.end()) break;
    feature_cols.push_back(it->second);
  }
  if (feature_cols.empty()) throw ParseError("missing feature column f0", 1);
  if (feature_cols.size() + 6 != header.size()) {
    throw ParseError("unexpected columns: features must be named f0..f{p-1} contiguously", 1);
  }

  const auto n = static_cast<Index>(lines.size() - 1);
  const auto p = static_cast<Index>(feature_cols.size());
  Cohort c;
  c.visit_time.resize(n);
  c.age.resize(n);
  c.features.resize(n, p);
  std::set<std::pair<std::string, int>> keys;
  std::unordered_map<std::string, std::pair<std::string, Group>> subject_info;

  for (Index r = 0; r < n; ++r) {
    const std::size_t line = static_cast<std::size_t>(r) + 2;
    const auto cells = split_commas(lines[static_cast<std::size_t>(r) + 1]);
    if (cells.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(cells.size()),
                       line);
    }
    std::string id(cells[col["subject_id"]]);
    if (id.empty()) throw ParseError("empty subject_id", line);
    const int visit = parse_int(cells[col["visit_index"]], line, "visit_index");
    if (visit < 0) throw ParseError("negative visit_index", line);
    std::string site(cells[col["site"]]);
    Group g;
    try {
      g = parse_group(cells[col["group"]]);
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), line);
    }
    if (!keys.emplace(id, visit).second) {
      throw ParseError("duplicate (subject_id, visit_index) = (" + id + ", " +
                           std::to_string(visit) + ")",
                       line);
    }
    auto [it, fresh] = subject_info.try_emplace(id, site, g);
    if (!fresh && (it->second.first != site || it->second.second != g)) {
      throw ParseError("subject " + id + " has inconsistent site or group", line);
    }
    c.visit_time(r) = parse_double(cells[col["visit_time"]], line, "visit_time");
    c.age(r) = parse_double(cells[col["age"]], line, "age");
    for (Index j = 0; j < p; ++j) {
      c.features(r, j) = parse_double(cells[feature_cols[static_cast<std::size_t>(j)]], line,
                                      header[feature_cols[static_cast<std::size_t>(j)]]);
    }
    c.subject_id.push_back(std::move(id));
    c.visit_index.push_back(visit);
    c.site.push_back(std::move(site));
    c.group.push_back(g);
  }
  return c;
}

Cohort read_cohort_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open cohort file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_cohort_csv(ss.str());
}

std::string format_cohort_csv(const Cohort& c) {
  std::string out = "subject_id,visit_index,visit_time,site,age,group";
  for (Index j = 0; j < c.feature_dim(); ++j) out += ",f" + std::to_string(j);
  out += '\n';
  for (Index r = 0; r < c.size(); ++r) {
    const auto u = static_cast<std::size_t>(r);
    out += c.subject_id[u];
    out += ',';
    out += std::to_string(c.visit_index[u]);
    out += ',';
    append_double(out, c.visit_time(r));
    out += ',';
    out += c.site[u];
    out += ',';
    append_double(out, c.age(r));
    out += ',';
    out += to_string(c.group[u]);
    for (Index j = 0; j < c.feature_dim(); ++j) {
      out += ',';
      append_double(out, c.features(r, j));
    }
    out += '\n';
  }
  return out;
}

void write_cohort_csv(const Cohort& cohort, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write cohort file " + path.string());
  const std::string text = format_cohort_csv(cohort);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw InvalidArgument("failed writing cohort file " + path.string());
}

}  // namespace kwcl
