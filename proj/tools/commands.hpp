#pragma once

#include <iosfwd>

#include "speechmark/config.hpp"

namespace speechmark::cli {

/// Table-1-style demographic summary plus the age Mann-Whitney test.
void cmd_stats(const config::ExperimentConfig& cfg, bool as_json, std::ostream& out);

/// Resolves every subject's transcript (warming the transcript cache).
void cmd_transcribe(const config::ExperimentConfig& cfg, std::ostream& out);

/// Computes and caches embeddings for every configured model.
void cmd_embed(const config::ExperimentConfig& cfg, std::ostream& out);

/// Full pipeline: transcripts -> embeddings -> grid search (or nested CV)
/// -> report files under cfg.out.
void cmd_evaluate(const config::ExperimentConfig& cfg, std::ostream& out);

/// Re-renders the table from a previous run's report.json.
void cmd_report(const config::ExperimentConfig& cfg, std::ostream& out);

}  // namespace speechmark::cli
