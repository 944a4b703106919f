#include "speechmark/config.hpp"

#include <fstream>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "speechmark/errors.hpp"

namespace speechmark::config {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.count(key))
      throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

embed::EmbeddingModelSpec parse_model(const json& obj, std::int64_t default_seed,
                                      const std::string& where) {
  reject_unknown_keys(obj,
                      {"backend", "model_name", "native_dimension", "requested_dimension",
                       "endpoint_url", "truncate_dimension", "local_seed", "timeout_ms",
                       "max_retries", "backoff_ms"},
                      where);
  embed::EmbeddingModelSpec spec;
  try {
    spec.backend = embed::backend_from_string(obj.at("backend").get<std::string>());
    spec.model_name = obj.at("model_name").get<std::string>();
    spec.native_dimension = obj.at("native_dimension").get<int>();
    if (obj.contains("requested_dimension") && !obj["requested_dimension"].is_null())
      spec.requested_dimension = obj["requested_dimension"].get<int>();
    if (obj.contains("endpoint_url") && !obj["endpoint_url"].is_null())
      spec.endpoint_url = obj["endpoint_url"].get<std::string>();
    if (obj.contains("truncate_dimension") && !obj["truncate_dimension"].is_null())
      spec.truncate_dimension = obj["truncate_dimension"].get<int>();
    spec.local_seed = obj.value("local_seed", default_seed);
    spec.timeout = std::chrono::milliseconds(obj.value("timeout_ms", 30000));
    spec.max_retries = obj.value("max_retries", 3);
    spec.backoff_base = std::chrono::milliseconds(obj.value("backoff_ms", 500));
  } catch (const json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return spec;
}

transcribe::AsrConfig parse_asr(const json& obj, const std::string& where) {
  reject_unknown_keys(obj,
                      {"endpoint_url", "model_name", "language", "response_format",
                       "timeout_ms", "max_retries", "backoff_ms"},
                      where);
  transcribe::AsrConfig cfg;
  try {
    cfg.endpoint_url = obj.at("endpoint_url").get<std::string>();
    cfg.model_name = obj.value("model_name", std::string("whisper-1"));
    cfg.language = obj.value("language", std::string("es"));
    cfg.response_format = obj.value("response_format", std::string("text"));
    cfg.timeout = std::chrono::milliseconds(obj.value("timeout_ms", 30000));
    cfg.max_retries = obj.value("max_retries", 3);
    cfg.backoff_base = std::chrono::milliseconds(obj.value("backoff_ms", 500));
  } catch (const json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return cfg;
}

eval::GridSpec parse_grid(const json& obj, const std::string& where) {
  reject_unknown_keys(obj, {"kernels", "c_values", "gamma_values", "poly_degree", "coef0"},
                      where);
  eval::GridSpec grid = eval::GridSpec::standard();
  try {
    if (obj.contains("kernels")) {
      grid.kernels.clear();
      for (const auto& k : obj["kernels"])
        grid.kernels.push_back(svm::kernel_kind_from_string(k.get<std::string>()));
    }
    if (obj.contains("c_values"))
      grid.c_values = obj["c_values"].get<std::vector<double>>();
    if (obj.contains("gamma_values"))
      grid.gamma_values = obj["gamma_values"].get<std::vector<double>>();
    grid.poly_degree = obj.value("poly_degree", 3);
    grid.coef0 = obj.value("coef0", 0.0);
  } catch (const json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return grid;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw ConfigError("config file '" + path.string() + "' does not exist");
  std::ifstream in(path);
  json root;
  try {
    root = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path.string() + "': " + e.what());
  }
  if (!root.is_object())
    throw ConfigError("config file '" + path.string() + "': expected a JSON object");

  const std::string where = "config '" + path.string() + "'";
  reject_unknown_keys(root,
                      {"corpus", "cache", "out", "k", "seed", "workers", "nested_cv",
                       "precision_undefined_as_zero", "models", "asr", "grid"},
                      where);

  ExperimentConfig cfg;
  const auto base = std::filesystem::absolute(path).parent_path();
  try {
    cfg.corpus = resolve(base, root.at("corpus").get<std::string>());
    cfg.cache = resolve(base, root.at("cache").get<std::string>());
    cfg.out = resolve(base, root.value("out", std::string("results")));
    cfg.k = root.value("k", 10);
    cfg.seed = root.value("seed", static_cast<std::int64_t>(0));
    cfg.workers = root.value("workers", 4);
    cfg.nested_cv = root.value("nested_cv", false);
    cfg.precision_undefined_as_zero = root.value("precision_undefined_as_zero", false);
  } catch (const json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }

  if (!root.contains("models") || !root["models"].is_array())
    throw ConfigError(where + ": 'models' must be an array");
  std::size_t index = 0;
  for (const auto& m : root["models"]) {
    ++index;
    cfg.models.push_back(
        parse_model(m, cfg.seed, where + ", models[" + std::to_string(index - 1) + "]"));
  }
  if (root.contains("asr") && !root["asr"].is_null())
    cfg.asr = parse_asr(root["asr"], where + ", asr");
  if (root.contains("grid") && !root["grid"].is_null())
    cfg.grid = parse_grid(root["grid"], where + ", grid");
  else
    cfg.grid = eval::GridSpec::standard();

  validate(cfg);
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.k < 2) throw ConfigError("config: k must be >= 2");
  if (cfg.workers < 1) throw ConfigError("config: workers must be >= 1");
  if (cfg.models.empty()) throw ConfigError("config: at least one embedding model is required");
  for (const auto& m : cfg.models) {
    try {
      embed::validate(m);
    } catch (const ValidationError& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  if (cfg.asr) {
    try {
      transcribe::validate(*cfg.asr);
    } catch (const ValidationError& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  if (cfg.grid.kernels.empty() || cfg.grid.c_values.empty() || cfg.grid.gamma_values.empty())
    throw ConfigError("config: grid must keep at least one kernel, C, and gamma value");
}

}  // namespace speechmark::config
