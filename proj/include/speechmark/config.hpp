#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "speechmark/embed.hpp"
#include "speechmark/eval.hpp"
#include "speechmark/transcribe.hpp"

namespace speechmark::config {

struct ExperimentConfig {
  std::filesystem::path corpus;
  std::filesystem::path cache;
  std::filesystem::path out;
  int k = 10;
  std::int64_t seed = 0;
  int workers = 4;
  bool nested_cv = false;
  bool precision_undefined_as_zero = false;
  std::vector<embed::EmbeddingModelSpec> models;
  std::optional<transcribe::AsrConfig> asr;
  eval::GridSpec grid;  // standard grid unless overridden
};

/// Loads and validates a JSON experiment config. Relative paths resolve
/// against the config file's directory; unknown keys are rejected.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

void validate(const ExperimentConfig& cfg);

}  // namespace speechmark::config
