#include "speechmark/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "speechmark/errors.hpp"
#include "speechmark/ranks.hpp"

namespace speechmark::corpus {

namespace {

constexpr const char* kCsvHeader =
    "id,group,sex,age,updrs3,hy,years_post_dx,audio_path,transcript_path";

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double_field(const std::string& text, const std::string& where) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || p != last)
    throw ParseError(where + ": expected a number, got '" + text + "'");
  return v;
}

int parse_int_field(const std::string& text, const std::string& where) {
  int v = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || p != last)
    throw ParseError(where + ": expected an integer, got '" + text + "'");
  return v;
}

Group parse_group(const std::string& text, const std::string& where) {
  if (text == "PD") return Group::PD;
  if (text == "HC") return Group::HC;
  throw ParseError(where + ": group must be PD or HC, got '" + text + "'");
}

Sex parse_sex(const std::string& text, const std::string& where) {
  if (text == "M") return Sex::male;
  if (text == "F") return Sex::female;
  throw ParseError(where + ": sex must be M or F, got '" + text + "'");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

SubjectRecord record_from_csv_row(const std::vector<std::string>& f,
                                  const std::filesystem::path& base_dir,
                                  const std::string& where) {
  SubjectRecord r;
  r.id = trim(f[0]);
  r.group = parse_group(trim(f[1]), where + ", field 'group'");
  r.sex = parse_sex(trim(f[2]), where + ", field 'sex'");
  r.age = parse_double_field(trim(f[3]), where + ", field 'age'");
  if (auto s = trim(f[4]); !s.empty())
    r.mds_updrs_iii = parse_int_field(s, where + ", field 'updrs3'");
  if (auto s = trim(f[5]); !s.empty())
    r.hoehn_yahr = parse_double_field(s, where + ", field 'hy'");
  if (auto s = trim(f[6]); !s.empty())
    r.years_post_diagnosis = parse_double_field(s, where + ", field 'years_post_dx'");
  if (auto s = trim(f[7]); !s.empty()) r.audio_path = resolve(base_dir, s);
  if (auto s = trim(f[8]); !s.empty()) r.transcript_path = resolve(base_dir, s);
  return r;
}

CorpusManifest load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("manifest '" + path.string() + "': empty file");
  if (trim(line) != kCsvHeader)
    throw ParseError("manifest '" + path.string() + "', line 1: expected header '" +
                     std::string(kCsvHeader) + "'");

  CorpusManifest m;
  m.name = path.stem().string();
  const auto base_dir = path.parent_path();
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(trim(line));
    const std::string where = "manifest '" + path.string() + "', line " + std::to_string(line_no);
    if (fields.size() != 9)
      throw ParseError(where + ": expected 9 comma-separated fields, got " +
                       std::to_string(fields.size()));
    m.subjects.push_back(record_from_csv_row(fields, base_dir, where));
  }
  return m;
}

std::optional<std::string> json_string(const nlohmann::json& obj, const char* key,
                                       const std::string& where) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  if (!obj[key].is_string())
    throw ParseError(where + ", field '" + key + "': expected a string");
  auto s = obj[key].get<std::string>();
  if (s.empty()) return std::nullopt;
  return s;
}

CorpusManifest load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("manifest '" + path.string() + "': " + e.what());
  }

  CorpusManifest m;
  m.name = path.stem().string();
  nlohmann::json subjects;
  if (root.is_array()) {
    subjects = root;
  } else if (root.is_object() && root.contains("subjects")) {
    if (root.contains("name") && root["name"].is_string()) m.name = root["name"];
    subjects = root["subjects"];
  } else {
    throw ParseError("manifest '" + path.string() +
                     "': expected an array of subjects or an object with a 'subjects' key");
  }

  const auto base_dir = path.parent_path();
  std::size_t index = 0;
  for (const auto& obj : subjects) {
    ++index;
    const std::string where =
        "manifest '" + path.string() + "', subject " + std::to_string(index);
    if (!obj.is_object()) throw ParseError(where + ": expected an object");
    SubjectRecord r;
    try {
      r.id = obj.at("id").get<std::string>();
      r.group = parse_group(obj.at("group").get<std::string>(), where);
      r.sex = parse_sex(obj.at("sex").get<std::string>(), where);
      r.age = obj.at("age").get<double>();
      if (obj.contains("updrs3") && !obj["updrs3"].is_null())
        r.mds_updrs_iii = obj["updrs3"].get<int>();
      if (obj.contains("hy") && !obj["hy"].is_null())
        r.hoehn_yahr = obj["hy"].get<double>();
      if (obj.contains("years_post_dx") && !obj["years_post_dx"].is_null())
        r.years_post_diagnosis = obj["years_post_dx"].get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (auto s = json_string(obj, "audio_path", where)) r.audio_path = resolve(base_dir, *s);
    if (auto s = json_string(obj, "transcript_path", where))
      r.transcript_path = resolve(base_dir, *s);
    m.subjects.push_back(std::move(r));
  }
  return m;
}

FieldStats stats_over(std::vector<double> values) {
  FieldStats s;
  s.count = values.size();
  if (values.empty()) return s;
  // Sorted accumulation makes the summary exactly permutation-invariant.
  std::sort(values.begin(), values.end());
  s.min = values.front();
  s.max = values.back();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() == 1) {
    s.stddev = 0.0;
    return s;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return s;
}

}  // namespace

std::string to_string(Group g) { return g == Group::PD ? "PD" : "HC"; }
std::string to_string(Sex s) { return s == Sex::male ? "M" : "F"; }

std::size_t CorpusManifest::count(Group g) const {
  return static_cast<std::size_t>(
      std::count_if(subjects.begin(), subjects.end(),
                    [g](const SubjectRecord& r) { return r.group == g; }));
}

void validate_record(const SubjectRecord& r) {
  const std::string who = "subject '" + r.id + "'";
  if (r.id.empty()) throw ValidationError("subject with empty id");
  if (!(r.age > 0.0)) throw ValidationError(who + ": age must be > 0");
  if (r.mds_updrs_iii && (*r.mds_updrs_iii < 0 || *r.mds_updrs_iii > 132))
    throw ValidationError(who + ": MDS-UPDRS-III must be in [0, 132]");
  if (r.years_post_diagnosis && *r.years_post_diagnosis < 0.0)
    throw ValidationError(who + ": years post diagnosis must be >= 0");
  if (r.group == Group::HC &&
      (r.mds_updrs_iii || r.hoehn_yahr || r.years_post_diagnosis))
    throw ValidationError(who + ": HC records cannot carry clinical scores");
  if (!r.audio_path && !r.transcript_path && !r.transcript)
    throw ValidationError(who + ": needs at least one of audio_path, transcript_path, transcript");
}

void validate_manifest(const CorpusManifest& m) {
  std::unordered_set<std::string> seen;
  for (const auto& r : m.subjects) {
    validate_record(r);
    if (!seen.insert(r.id).second)
      throw ValidationError("duplicate subject id '" + r.id + "'");
  }
}

CorpusManifest load_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw Error("manifest '" + path.string() + "' does not exist");
  CorpusManifest m =
      path.extension() == ".json" ? load_json(path) : load_csv(path);
  validate_manifest(m);
  return m;
}

CellSummary& DemographicSummary::cell(Group g, Sex s) {
  return cells[g == Group::PD ? 0 : 1][s == Sex::male ? 0 : 1];
}

const CellSummary& DemographicSummary::cell(Group g, Sex s) const {
  return cells[g == Group::PD ? 0 : 1][s == Sex::male ? 0 : 1];
}

DemographicSummary demographic_summary(const CorpusManifest& m) {
  DemographicSummary out;
  for (Group g : {Group::PD, Group::HC}) {
    for (Sex s : {Sex::male, Sex::female}) {
      std::vector<double> ages, years, updrs;
      for (const auto& r : m.subjects) {
        if (r.group != g || r.sex != s) continue;
        ages.push_back(r.age);
        if (r.years_post_diagnosis) years.push_back(*r.years_post_diagnosis);
        if (r.mds_updrs_iii) updrs.push_back(static_cast<double>(*r.mds_updrs_iii));
      }
      auto& cell = out.cell(g, s);
      cell.count = ages.size();
      cell.age = stats_over(std::move(ages));
      cell.years_post_diagnosis = stats_over(std::move(years));
      cell.mds_updrs_iii = stats_over(std::move(updrs));
    }
  }
  return out;
}

namespace detail {

double exact_two_sided_p(int n1, int n2, double u1) {
  const int n = n1 + n2;
  const int max_sum = n * (n + 1) / 2;
  // counts[k][s]: subsets of size k of ranks {1..n} with rank sum s.
  std::vector<std::vector<std::uint64_t>> counts(
      static_cast<std::size_t>(n1) + 1,
      std::vector<std::uint64_t>(static_cast<std::size_t>(max_sum) + 1, 0));
  counts[0][0] = 1;
  for (int rank = 1; rank <= n; ++rank) {
    for (int k = std::min(rank, n1); k >= 1; --k) {
      for (int s = max_sum; s >= rank; --s) {
        counts[k][s] += counts[k - 1][s - rank];
      }
    }
  }

  const int min_r1 = n1 * (n1 + 1) / 2;
  const long long r1 = std::llround(u1) + min_r1;  // integer when tie-free
  std::uint64_t le = 0, ge = 0, total = 0;
  for (int s = min_r1; s <= max_sum; ++s) {
    const std::uint64_t c = counts[static_cast<std::size_t>(n1)][static_cast<std::size_t>(s)];
    total += c;
    if (s <= r1) le += c;
    if (s >= r1) ge += c;
  }
  const double tail = static_cast<double>(std::min(le, ge));
  return std::min(1.0, 2.0 * tail / static_cast<double>(total));
}

double normal_approx_two_sided_p(int n1, int n2, double u1, double tie_term) {
  const double n = static_cast<double>(n1 + n2);
  const double mu = 0.5 * static_cast<double>(n1) * static_cast<double>(n2);
  const double var = (static_cast<double>(n1) * static_cast<double>(n2) / 12.0) *
                     ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) return 1.0;  // every pooled value identical
  double z = (std::fabs(u1 - mu) - 0.5) / std::sqrt(var);  // continuity correction
  if (z < 0.0) z = 0.0;
  const double p = std::erfc(z / std::sqrt(2.0));
  return std::min(1.0, p);
}

}  // namespace detail

UTestResult mann_whitney_u(const std::vector<double>& sample_a,
                           const std::vector<double>& sample_b) {
  if (sample_a.empty() || sample_b.empty())
    throw ValidationError("mann_whitney_u: both samples must be non-empty");

  const int n1 = static_cast<int>(sample_a.size());
  const int n2 = static_cast<int>(sample_b.size());
  std::vector<double> pooled;
  pooled.reserve(sample_a.size() + sample_b.size());
  pooled.insert(pooled.end(), sample_a.begin(), sample_a.end());
  pooled.insert(pooled.end(), sample_b.begin(), sample_b.end());
  const RankInfo info = midranks(pooled);

  double r1 = 0.0;
  for (int i = 0; i < n1; ++i) r1 += info.ranks[static_cast<std::size_t>(i)];
  const double u1 = r1 - 0.5 * static_cast<double>(n1) * static_cast<double>(n1 + 1);

  UTestResult res;
  res.u_statistic = u1;
  if (!info.has_ties && n1 * n2 <= 400) {
    res.method = UTestMethod::exact;
    res.p_value = detail::exact_two_sided_p(n1, n2, u1);
  } else {
    res.method = UTestMethod::normal_approx;
    res.p_value = detail::normal_approx_two_sided_p(n1, n2, u1, info.tie_term);
  }
  return res;
}

}  // namespace speechmark::corpus
