#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "speechmark/errors.hpp"
#include "synthetic.hpp"

namespace {

using speechmark::config::ExperimentConfig;

ExperimentConfig load_config(const std::string& config_path,
                             const std::optional<std::int64_t>& seed,
                             const std::optional<int>& workers,
                             const std::optional<std::string>& out) {
  if (config_path.empty())
    throw speechmark::ConfigError("this command requires --config <path>");
  auto cfg = speechmark::config::load_experiment_config(config_path);
  if (seed) cfg.seed = *seed;
  if (workers) cfg.workers = *workers;
  if (out) cfg.out = *out;
  speechmark::config::validate(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"speechmark: speech corpus -> transcripts -> embeddings -> kernel-SVM evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::int64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out_dir;
  app.add_option("--config", config_path, "experiment config JSON")->expected(1);
  app.add_option("--seed", seed, "override the config seed");
  app.add_option("--workers", workers, "override the worker bound");
  app.add_option("--out", out_dir, "override the output directory");
  app.fallthrough();

  auto* gen = app.add_subcommand("gen-synthetic",
                                 "generate an offline synthetic corpus with planted signal");
  speechmark::synth::SyntheticOptions gen_opts;
  gen->add_option("--n-per-class", gen_opts.n_per_class, "subjects per class")
      ->capture_default_str();
  gen->add_option("--dimension", gen_opts.dimension, "embedding dimension")
      ->capture_default_str();
  gen->add_option("--signal", gen_opts.signal, "class signal magnitude")
      ->capture_default_str();

  auto* stats = app.add_subcommand("stats", "demographic summary and age matching test");
  bool stats_json = false;
  stats->add_flag("--json", stats_json, "emit JSON instead of text");

  auto* transcribe = app.add_subcommand("transcribe", "resolve transcripts for the corpus");
  auto* embed = app.add_subcommand("embed", "compute and cache embeddings");
  auto* evaluate = app.add_subcommand("evaluate", "run the full evaluation pipeline");
  auto* report = app.add_subcommand("report", "re-render the table from report.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // flag misuse is a config error
  }

  try {
    if (gen->parsed()) {
      if (seed) gen_opts.seed = *seed;
      if (!out_dir)
        throw speechmark::ConfigError("gen-synthetic requires --out <directory>");
      gen_opts.out = *out_dir;
      speechmark::synth::generate_synthetic_corpus(gen_opts);
      std::cout << "synthetic corpus written to " << gen_opts.out.string() << "\n";
    } else if (stats->parsed()) {
      speechmark::cli::cmd_stats(load_config(config_path, seed, workers, out_dir),
                                 stats_json, std::cout);
    } else if (transcribe->parsed()) {
      speechmark::cli::cmd_transcribe(load_config(config_path, seed, workers, out_dir),
                                      std::cout);
    } else if (embed->parsed()) {
      speechmark::cli::cmd_embed(load_config(config_path, seed, workers, out_dir), std::cout);
    } else if (evaluate->parsed()) {
      speechmark::cli::cmd_evaluate(load_config(config_path, seed, workers, out_dir),
                                    std::cout);
    } else if (report->parsed()) {
      speechmark::cli::cmd_report(load_config(config_path, seed, workers, out_dir), std::cout);
    }
  } catch (const speechmark::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const CLI::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
