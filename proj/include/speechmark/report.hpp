#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "speechmark/eval.hpp"

namespace speechmark::eval {

/// One rendered table row: the winning grid point of one embedding model.
struct ReportRow {
  std::string model_name;
  int dimension = 0;
  MetricSummary accuracy, precision, recall, auc;
  svm::Hyperparams hyperparams;
};

ReportRow report_row(const std::string& model_name, int dimension, const CvResult& best);

/// Aligned plain-text table with columns Embedding Model, Dimension,
/// Accuracy, Precision, Recall, AUC, Kernel, C, Gamma. Metrics render as
/// integer percentages "mu ± se" with the standard error to one decimal;
/// C and gamma as powers of ten. Metrics undefined in every fold render as
/// an em dash with a footnote.
std::string render_report(const std::vector<ReportRow>& rows);

/// "10⁻⁴" for exact powers of ten, plain %g otherwise.
std::string format_power_of_ten(double value);

nlohmann::json report_rows_json(const std::vector<ReportRow>& rows);
std::vector<ReportRow> report_rows_from_json(const nlohmann::json& j);

/// Full grid dump: every grid point with per-fold metrics, plus the plan.
nlohmann::json grid_report_json(const std::string& model_name, int dimension,
                                const FoldPlan& plan, const GridSearchReport& report);

nlohmann::json nested_report_json(const std::string& model_name, int dimension,
                                  const FoldPlan& plan, const NestedCvReport& report);

}  // namespace speechmark::eval
