#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "speechmark/embed.hpp"
#include "speechmark/errors.hpp"
#include "speechmark/eval.hpp"
#include "speechmark/fs_util.hpp"
#include "speechmark/http_client.hpp"
#include "speechmark/report.hpp"
#include "speechmark/transcribe.hpp"

namespace speechmark::cli {

namespace {

using config::ExperimentConfig;

std::string format1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

std::string format_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string mean_std_cell(const corpus::FieldStats& s) {
  if (s.count == 0) return "";
  return format1(s.mean) + " ± " + format1(s.stddev);
}

std::string range_cell(const corpus::FieldStats& s) {
  if (s.count == 0) return "";
  return format_g(s.min) + " - " + format_g(s.max);
}

nlohmann::json field_stats_json(const corpus::FieldStats& s) {
  nlohmann::json j;
  j["count"] = s.count;
  if (s.count > 0) {
    j["mean"] = s.mean;
    j["std"] = s.stddev;
    j["min"] = s.min;
    j["max"] = s.max;
  }
  return j;
}

corpus::CorpusManifest load_corpus_for(const ExperimentConfig& cfg) {
  auto manifest = corpus::load_manifest(cfg.corpus);
  if (manifest.count(corpus::Group::PD) == 0 || manifest.count(corpus::Group::HC) == 0)
    throw ValidationError("manifest '" + cfg.corpus.string() +
                          "' must contain at least one PD and one HC subject");
  return manifest;
}

std::string sanitize_filename(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (c == '/' || c == '\\' || c == ' ' || c == ':') c = '-';
  return out;
}

void require_api_key_for_remote(const ExperimentConfig& cfg) {
  const bool any_remote =
      std::any_of(cfg.models.begin(), cfg.models.end(), [](const auto& m) {
        return m.backend == embed::Backend::remote_api;
      });
  if (any_remote) http::api_key_from_env();  // throws ConfigError naming the variable
}

eval::EvalOptions eval_options(const ExperimentConfig& cfg) {
  eval::EvalOptions opts;
  opts.workers = cfg.workers;
  opts.precision_undefined_as_zero = cfg.precision_undefined_as_zero;
  return opts;
}

}  // namespace

void cmd_stats(const ExperimentConfig& cfg, bool as_json, std::ostream& out) {
  const auto manifest = load_corpus_for(cfg);
  const auto summary = corpus::demographic_summary(manifest);

  std::vector<double> pd_ages, hc_ages;
  for (const auto& s : manifest.subjects)
    (s.group == corpus::Group::PD ? pd_ages : hc_ages).push_back(s.age);
  const auto utest = corpus::mann_whitney_u(pd_ages, hc_ages);

  using corpus::Group;
  using corpus::Sex;
  const std::pair<Group, Sex> cells[4] = {{Group::PD, Sex::male},
                                          {Group::PD, Sex::female},
                                          {Group::HC, Sex::male},
                                          {Group::HC, Sex::female}};

  if (as_json) {
    nlohmann::json j;
    j["corpus"] = manifest.name;
    j["subjects"] = manifest.subjects.size();
    for (const auto& [g, s] : cells) {
      const auto& cell = summary.cell(g, s);
      nlohmann::json c;
      c["count"] = cell.count;
      c["age"] = field_stats_json(cell.age);
      if (g == Group::PD) {
        c["years_post_dx"] = field_stats_json(cell.years_post_diagnosis);
        c["updrs3"] = field_stats_json(cell.mds_updrs_iii);
      }
      j["cells"][corpus::to_string(g) + "_" + corpus::to_string(s)] = std::move(c);
    }
    j["age_utest"] = {{"u", utest.u_statistic},
                      {"p", utest.p_value},
                      {"method", utest.method == corpus::UTestMethod::exact
                                     ? "exact"
                                     : "normal_approx"}};
    out << j.dump(2) << "\n";
    return;
  }

  std::vector<std::vector<std::string>> table;
  table.push_back({"", "PD M", "PD F", "HC M", "HC F"});
  auto row = [&](const std::string& label, auto getter) {
    std::vector<std::string> r{label};
    for (const auto& [g, s] : cells) r.push_back(getter(summary.cell(g, s)));
    table.push_back(std::move(r));
  };
  row("Number of subjects",
      [](const corpus::CellSummary& c) { return std::to_string(c.count); });
  row("Age [years] (mean +- std)",
      [](const corpus::CellSummary& c) { return mean_std_cell(c.age); });
  row("Range of age [years]",
      [](const corpus::CellSummary& c) { return range_cell(c.age); });
  row("Time post diagnosis [years] (mean +- std)",
      [](const corpus::CellSummary& c) { return mean_std_cell(c.years_post_diagnosis); });
  row("Range of time post diagnosis [years]",
      [](const corpus::CellSummary& c) { return range_cell(c.years_post_diagnosis); });
  row("MDS-UPDRS-III (mean +- std)",
      [](const corpus::CellSummary& c) { return mean_std_cell(c.mds_updrs_iii); });
  row("Range of MDS-UPDRS-III",
      [](const corpus::CellSummary& c) { return range_cell(c.mds_updrs_iii); });

  auto width = [](const std::string& s) {
    std::size_t w = 0;
    for (unsigned char c : s)
      if ((c & 0xc0) != 0x80) ++w;
    return w;
  };
  std::vector<std::size_t> widths(5, 0);
  for (const auto& r : table)
    for (std::size_t c = 0; c < r.size(); ++c)
      widths[c] = std::max(widths[c], width(r[c]));
  for (const auto& r : table) {
    std::string line;
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c) line += "  ";
      std::string cell = r[c];
      const std::string fill(widths[c] - width(cell), ' ');
      line += (c == 0) ? cell + fill : fill + cell;
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << "\n";
  }
  out << "\nAge PD vs HC: Mann-Whitney U = " << format_g(utest.u_statistic)
      << ", two-sided p = " << format_g(utest.p_value) << " ("
      << (utest.method == corpus::UTestMethod::exact ? "exact" : "normal approximation")
      << ")\n";
}

void cmd_transcribe(const ExperimentConfig& cfg, std::ostream& out) {
  const auto manifest = load_corpus_for(cfg);
  const auto records =
      transcribe::transcripts_for_corpus(manifest, cfg.asr, cfg.cache, cfg.workers);
  std::size_t from_files = 0, from_asr = 0;
  for (const auto& r : records)
    (r.source == transcribe::TranscriptSource::file ? from_files : from_asr) += 1;
  out << "resolved " << records.size() << " transcripts (" << from_files
      << " from inline/file, " << from_asr << " via ASR endpoint or cache)\n";
}

void cmd_embed(const ExperimentConfig& cfg, std::ostream& out) {
  require_api_key_for_remote(cfg);
  const auto manifest = load_corpus_for(cfg);
  for (const auto& model : cfg.models) {
    const auto vectors =
        embed::embed_corpus(manifest, model, cfg.cache, cfg.asr, cfg.workers);
    out << model.model_name << " dim " << embed::output_dimension(model) << ": "
        << vectors.size() << " vectors cached\n";
  }
}

void cmd_evaluate(const ExperimentConfig& cfg, std::ostream& out) {
  require_api_key_for_remote(cfg);
  const auto manifest = load_corpus_for(cfg);
  std::filesystem::create_directories(cfg.out);

  std::vector<int> labels;
  std::vector<std::string> ids;
  for (const auto& s : manifest.subjects) {
    labels.push_back(s.group == corpus::Group::PD ? 1 : -1);
    ids.push_back(s.id);
  }
  // One fold plan shared by every model, so rows differ only in features.
  const auto plan = eval::stratified_folds(labels, cfg.k, cfg.seed);
  const auto opts = eval_options(cfg);

  std::vector<eval::ReportRow> rows;
  for (const auto& model : cfg.models) {
    const auto vectors =
        embed::embed_corpus(manifest, model, cfg.cache, cfg.asr, cfg.workers);
    eval::Dataset data;
    data.ids = ids;
    data.labels = labels;
    for (const auto& id : ids) data.features.push_back(vectors.at(id).values);

    const int dim = embed::output_dimension(model);
    const std::string stem =
        sanitize_filename(model.model_name) + "_" + std::to_string(dim);

    if (cfg.nested_cv) {
      const auto nested = eval::nested_cv(data, plan, cfg.grid, opts);
      atomic_write_file(cfg.out / ("nested_" + stem + ".json"),
                        eval::nested_report_json(model.model_name, dim, plan, nested).dump(2) +
                            "\n");
      eval::ReportRow row;
      row.model_name = model.model_name;
      row.dimension = dim;
      row.accuracy = nested.accuracy;
      row.precision = nested.precision;
      row.recall = nested.recall;
      row.auc = nested.auc;
      row.hyperparams = nested.modal_hyperparams;
      rows.push_back(std::move(row));
    } else {
      const auto report = eval::grid_search(data, plan, cfg.grid, opts);
      atomic_write_file(cfg.out / ("grid_" + stem + ".json"),
                        eval::grid_report_json(model.model_name, dim, plan, report).dump(2) +
                            "\n");
      if (report.best_index < 0)
        throw Error("evaluation of model '" + model.model_name +
                    "': every grid point failed to train");
      rows.push_back(eval::report_row(model.model_name, dim, report.best()));
    }
  }

  const std::string table = eval::render_report(rows);
  atomic_write_file(cfg.out / "report.txt", table);
  atomic_write_file(cfg.out / "report.json", eval::report_rows_json(rows).dump(2) + "\n");
  out << table;
}

void cmd_report(const ExperimentConfig& cfg, std::ostream& out) {
  const auto path = cfg.out / "report.json";
  if (!std::filesystem::exists(path))
    throw Error("no report at '" + path.string() + "'; run `speechmark evaluate` first");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("report '" + path.string() + "': " + e.what());
  }
  out << eval::render_report(eval::report_rows_from_json(j));
}

}  // namespace speechmark::cli
