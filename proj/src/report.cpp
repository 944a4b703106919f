#include "speechmark/report.hpp"

#include <cmath>
#include <cstdio>

#include "speechmark/errors.hpp"

namespace speechmark::eval {

namespace {

std::string superscript_int(int value) {
  static const char* digits[10] = {"⁰", "¹", "²", "³", "⁴",
                                   "⁵", "⁶", "⁷", "⁸", "⁹"};
  std::string out;
  if (value < 0) {
    out += "⁻";
    value = -value;
  }
  std::string dec = std::to_string(value);
  for (char c : dec) out += digits[c - '0'];
  return out;
}

std::string format_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

// "73 ± 2.6" in percent; an undefined mean renders as an em dash.
std::string metric_cell(const MetricSummary& m) {
  if (!m.mean) return "—";
  char buf[64];
  if (m.se)
    std::snprintf(buf, sizeof(buf), "%.0f ± %.1f", *m.mean * 100.0, *m.se * 100.0);
  else
    std::snprintf(buf, sizeof(buf), "%.0f ± —", *m.mean * 100.0);
  return buf;
}

std::string kernel_label(svm::KernelKind k) {
  switch (k) {
    case svm::KernelKind::rbf: return "rbf";
    case svm::KernelKind::poly: return "poly";
    case svm::KernelKind::sigmoid: return "sig";
  }
  return "?";
}

// Display width = code point count; the table mixes ASCII with ± and
// superscripts, all of which occupy one column.
std::size_t display_width(const std::string& s) {
  std::size_t w = 0;
  for (unsigned char c : s)
    if ((c & 0xc0) != 0x80) ++w;
  return w;
}

std::string pad(const std::string& s, std::size_t width, bool right_align) {
  const std::size_t w = display_width(s);
  if (w >= width) return s;
  const std::string fill(width - w, ' ');
  return right_align ? fill + s : s + fill;
}

nlohmann::json summary_json(const MetricSummary& m) {
  nlohmann::json j;
  j["mean"] = m.mean ? nlohmann::json(*m.mean) : nlohmann::json();
  j["se"] = m.se ? nlohmann::json(*m.se) : nlohmann::json();
  j["defined_folds"] = m.defined_folds;
  return j;
}

MetricSummary summary_from_json(const nlohmann::json& j) {
  MetricSummary m;
  if (!j.at("mean").is_null()) m.mean = j.at("mean").get<double>();
  if (!j.at("se").is_null()) m.se = j.at("se").get<double>();
  m.defined_folds = j.at("defined_folds").get<int>();
  return m;
}

nlohmann::json fold_metrics_json(const FoldMetrics& fm) {
  nlohmann::json j;
  j["fold"] = fm.fold_index;
  j["test_size"] = fm.test_size;
  j["accuracy"] = fm.accuracy;
  j["precision"] = fm.precision ? nlohmann::json(*fm.precision) : nlohmann::json();
  j["recall"] = fm.recall;
  j["auc"] = fm.auc;
  return j;
}

nlohmann::json hyperparams_json(const svm::Hyperparams& hp) {
  nlohmann::json j;
  j["kernel"] = svm::to_string(hp.kernel.kind);
  j["c"] = hp.c;
  j["gamma"] = hp.kernel.gamma;
  j["degree"] = hp.kernel.degree;
  j["coef0"] = hp.kernel.coef0;
  return j;
}

svm::Hyperparams hyperparams_from_json(const nlohmann::json& j) {
  svm::Hyperparams hp;
  hp.kernel.kind = svm::kernel_kind_from_string(j.at("kernel").get<std::string>());
  hp.c = j.at("c").get<double>();
  hp.kernel.gamma = j.at("gamma").get<double>();
  hp.kernel.degree = j.at("degree").get<int>();
  hp.kernel.coef0 = j.at("coef0").get<double>();
  return hp;
}

}  // namespace

std::string format_power_of_ten(double value) {
  if (value > 0.0) {
    const double e = std::round(std::log10(value));
    if (std::fabs(e) <= 12.0) {
      const double back = std::pow(10.0, e);
      if (std::fabs(back - value) <= 1e-12 * value)
        return "10" + superscript_int(static_cast<int>(e));
    }
  }
  return format_g(value);
}

ReportRow report_row(const std::string& model_name, int dimension, const CvResult& best) {
  ReportRow row;
  row.model_name = model_name;
  row.dimension = dimension;
  row.accuracy = best.accuracy;
  row.precision = best.precision;
  row.recall = best.recall;
  row.auc = best.auc;
  row.hyperparams = best.hyperparams;
  return row;
}

std::string render_report(const std::vector<ReportRow>& rows) {
  if (rows.empty()) throw ValidationError("render_report: no rows");

  const std::vector<std::string> header = {"Embedding Model", "Dimension", "Accuracy",
                                           "Precision", "Recall", "AUC",
                                           "Kernel", "C", "Gamma"};
  // Right-align numeric columns, left-align names.
  const std::vector<bool> right = {false, true, true, true, true, true, false, true, true};

  std::vector<std::vector<std::string>> cells;
  bool any_undefined = false;
  for (const auto& row : rows) {
    std::vector<std::string> r;
    r.push_back(row.model_name);
    r.push_back(std::to_string(row.dimension));
    for (const auto* m : {&row.accuracy, &row.precision, &row.recall, &row.auc}) {
      r.push_back(metric_cell(*m));
      if (!m->mean) any_undefined = true;
    }
    r.push_back(kernel_label(row.hyperparams.kernel.kind));
    r.push_back(format_power_of_ten(row.hyperparams.c));
    r.push_back(format_power_of_ten(row.hyperparams.kernel.gamma));
    cells.push_back(std::move(r));
  }

  std::vector<std::size_t> widths(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    widths[c] = display_width(header[c]);
    for (const auto& r : cells) widths[c] = std::max(widths[c], display_width(r[c]));
  }

  std::string out;
  auto emit_row = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c) out += "  ";
      const bool last = c + 1 == r.size();
      std::string cell = pad(r[c], widths[c], right[c]);
      if (last && !right[c]) {  // no trailing spaces
        while (!cell.empty() && cell.back() == ' ') cell.pop_back();
      }
      out += cell;
    }
    out += "\n";
  };

  emit_row(header);
  for (const auto& r : cells) emit_row(r);
  if (any_undefined)
    out += "\n— = metric undefined in every fold (no positive predictions)\n";
  return out;
}

nlohmann::json report_rows_json(const std::vector<ReportRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json j;
    j["model_name"] = row.model_name;
    j["dimension"] = row.dimension;
    j["accuracy"] = summary_json(row.accuracy);
    j["precision"] = summary_json(row.precision);
    j["recall"] = summary_json(row.recall);
    j["auc"] = summary_json(row.auc);
    j["hyperparams"] = hyperparams_json(row.hyperparams);
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<ReportRow> report_rows_from_json(const nlohmann::json& j) {
  std::vector<ReportRow> rows;
  for (const auto& obj : j) {
    ReportRow row;
    row.model_name = obj.at("model_name").get<std::string>();
    row.dimension = obj.at("dimension").get<int>();
    row.accuracy = summary_from_json(obj.at("accuracy"));
    row.precision = summary_from_json(obj.at("precision"));
    row.recall = summary_from_json(obj.at("recall"));
    row.auc = summary_from_json(obj.at("auc"));
    row.hyperparams = hyperparams_from_json(obj.at("hyperparams"));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json grid_report_json(const std::string& model_name, int dimension,
                                const FoldPlan& plan, const GridSearchReport& report) {
  nlohmann::json j;
  j["model_name"] = model_name;
  j["dimension"] = dimension;
  j["k"] = plan.k;
  j["seed"] = plan.seed;
  j["fold_assignments"] = plan.assignments;
  j["best_index"] = report.best_index >= 0 ? nlohmann::json(report.best_index)
                                           : nlohmann::json();
  nlohmann::json points = nlohmann::json::array();
  for (const auto& point : report.points) {
    nlohmann::json p = hyperparams_json(point.hyperparams);
    if (point.result) {
      p["status"] = "ok";
      nlohmann::json folds = nlohmann::json::array();
      for (const auto& fm : point.result->per_fold) folds.push_back(fold_metrics_json(fm));
      p["folds"] = std::move(folds);
      p["mean"] = {{"accuracy", summary_json(point.result->accuracy)["mean"]},
                   {"precision", summary_json(point.result->precision)["mean"]},
                   {"recall", summary_json(point.result->recall)["mean"]},
                   {"auc", summary_json(point.result->auc)["mean"]}};
      p["se"] = {{"accuracy", summary_json(point.result->accuracy)["se"]},
                 {"precision", summary_json(point.result->precision)["se"]},
                 {"recall", summary_json(point.result->recall)["se"]},
                 {"auc", summary_json(point.result->auc)["se"]}};
    } else {
      p["status"] = "failed";
      p["error"] = point.error;
    }
    points.push_back(std::move(p));
  }
  j["grid_points"] = std::move(points);
  return j;
}

nlohmann::json nested_report_json(const std::string& model_name, int dimension,
                                  const FoldPlan& plan, const NestedCvReport& report) {
  nlohmann::json j;
  j["model_name"] = model_name;
  j["dimension"] = dimension;
  j["k"] = plan.k;
  j["seed"] = plan.seed;
  j["mode"] = "nested";
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& fold : report.folds) {
    nlohmann::json f;
    f["fold"] = fold.fold_index;
    f["chosen_hyperparams"] = hyperparams_json(fold.chosen);
    f["metrics"] = fold_metrics_json(fold.metrics);
    folds.push_back(std::move(f));
  }
  j["outer_folds"] = std::move(folds);
  j["accuracy"] = summary_json(report.accuracy);
  j["precision"] = summary_json(report.precision);
  j["recall"] = summary_json(report.recall);
  j["auc"] = summary_json(report.auc);
  j["modal_hyperparams"] = hyperparams_json(report.modal_hyperparams);
  return j;
}

}  // namespace speechmark::eval
