#pragma once

#include <cstdint>
#include <filesystem>

namespace speechmark::synth {

/// Offline stand-in corpus: age/sex-matched demographics, seeded
/// Spanish-like monologue transcripts, and pre-planted embedding cache
/// entries for the local-test backend. `signal` is the magnitude of a fixed
/// offset vector added (pre-normalization) to the embeddings of PD subjects;
/// 0 produces a null corpus with no class signal.
struct SyntheticOptions {
  int n_per_class = 50;
  int dimension = 768;
  double signal = 2.0;
  std::int64_t seed = 42;
  std::filesystem::path out;
};

/// Writes manifest.csv, transcripts/, cache/ (planted embeddings), and a
/// ready-to-run config.json under `out`. Byte-identical for identical
/// options.
void generate_synthetic_corpus(const SyntheticOptions& options);

}  // namespace speechmark::synth
