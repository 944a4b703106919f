#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace speechmark::corpus {

enum class Group { PD, HC };
enum class Sex { male, female };

std::string to_string(Group g);  // "PD" / "HC"
std::string to_string(Sex s);    // "M" / "F"

/// One participant. Clinical fields are only meaningful for the PD group;
/// a manifest carrying them on an HC record is rejected.
struct SubjectRecord {
  std::string id;
  Group group = Group::HC;
  Sex sex = Sex::male;
  double age = 0.0;  // years
  std::optional<int> mds_updrs_iii;
  std::optional<double> hoehn_yahr;
  std::optional<double> years_post_diagnosis;
  std::optional<std::filesystem::path> audio_path;
  std::optional<std::filesystem::path> transcript_path;
  std::optional<std::string> transcript;  // inline text, set programmatically
};

struct CorpusManifest {
  std::string name;
  std::vector<SubjectRecord> subjects;

  std::size_t count(Group g) const;
};

/// Throws ValidationError naming the record on any invariant violation.
void validate_record(const SubjectRecord& r);

/// Record-level checks plus id uniqueness across the manifest.
void validate_manifest(const CorpusManifest& m);

/// Reads a manifest. `.csv` expects the header
///   id,group,sex,age,updrs3,hy,years_post_dx,audio_path,transcript_path
/// with empty fields meaning "absent"; `.json` accepts the same field names.
/// Relative audio/transcript paths are resolved against the manifest's
/// directory. Subject order is preserved.
CorpusManifest load_manifest(const std::filesystem::path& path);

struct FieldStats {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample estimator (divisor n-1); 0 when count == 1
  double min = 0.0;
  double max = 0.0;
};

struct CellSummary {
  std::size_t count = 0;
  FieldStats age;
  FieldStats years_post_diagnosis;  // only populated for PD cells
  FieldStats mds_updrs_iii;         // only populated for PD cells
};

/// Per (group, sex) demographic statistics.
struct DemographicSummary {
  CellSummary& cell(Group g, Sex s);
  const CellSummary& cell(Group g, Sex s) const;

  CellSummary cells[2][2];  // [group][sex]
};

DemographicSummary demographic_summary(const CorpusManifest& m);

enum class UTestMethod { exact, normal_approx };

struct UTestResult {
  double u_statistic = 0.0;  // U of the first sample, in [0, n1*n2]
  double p_value = 1.0;      // two-sided, in (0, 1]
  UTestMethod method = UTestMethod::normal_approx;
};

/// Two-sided Mann-Whitney U test. Uses the exact rank-assignment
/// distribution when n1*n2 <= 400 and the pooled sample is tie-free, and the
/// normal approximation with tie and continuity corrections otherwise.
UTestResult mann_whitney_u(const std::vector<double>& sample_a,
                           const std::vector<double>& sample_b);

namespace detail {

/// Exact two-sided p for tie-free samples from the full distribution of the
/// rank statistic under all C(n1+n2, n1) label assignments. u1 must be the
/// (integer-valued) U statistic of the first sample.
double exact_two_sided_p(int n1, int n2, double u1);

/// Normal approximation with tie correction (tie_term = sum of t^3 - t) and
/// continuity correction. Degenerate zero-variance pools give p = 1.
double normal_approx_two_sided_p(int n1, int n2, double u1, double tie_term);

}  // namespace detail

}  // namespace speechmark::corpus
