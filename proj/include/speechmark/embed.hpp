#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "speechmark/corpus.hpp"
#include "speechmark/transcribe.hpp"

namespace speechmark::embed {

enum class Backend { remote_api, local_test };

Backend backend_from_string(const std::string& s);
std::string to_string(Backend b);

struct EmbeddingModelSpec {
  Backend backend = Backend::local_test;
  std::string model_name;
  int native_dimension = 0;
  std::optional<int> requested_dimension;   // sent as `dimensions` when set
  std::optional<std::string> endpoint_url;  // required for remote_api
  std::optional<int> truncate_dimension;    // client-side cut after receipt
  std::int64_t local_seed = 0;              // local_test stream seed
  std::chrono::milliseconds timeout{30000};
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{500};
};

void validate(const EmbeddingModelSpec& spec);

/// Dimension of the vectors this spec ultimately produces.
int output_dimension(const EmbeddingModelSpec& spec);

struct EmbeddingVector {
  std::vector<double> values;
  std::string model_name;
  std::string text_hash;  // sha256 of the source text

  int dimension() const { return static_cast<int>(values.size()); }
};

/// Deterministic offline embedding: a counter-based stream keyed by
/// (seed, sha256(text)) drawn into a unit vector. Identical inputs give
/// bit-identical output on every run and platform.
EmbeddingVector local_test_embed(const std::string& text, int dimension,
                                 std::int64_t seed);

/// First d coordinates, renormalized to unit length; model name and text
/// hash carry over. Errors on d out of range or a zero-norm prefix.
EmbeddingVector truncate_renormalize(const EmbeddingVector& v, int d);

/// remote_api: JSON POST {model, input[, dimensions]} parsed from
/// data[0].embedding, with the dimension checked against the spec.
/// local_test: the deterministic embedding above.
EmbeddingVector embed_text(const std::string& text, const EmbeddingModelSpec& spec);

std::filesystem::path vector_cache_path(const std::filesystem::path& cache_root,
                                        const std::string& model_name, int dimension,
                                        const std::string& text_hash);

/// Binary layout: little-endian u32 dimension, then dimension 64-bit floats.
/// Round trips are bit-exact.
void write_vector_file(const std::filesystem::path& path, const EmbeddingVector& v);
EmbeddingVector read_vector_file(const std::filesystem::path& path,
                                 const std::string& model_name,
                                 const std::string& text_hash);

/// One vector per subject, cached under
///   <cache>/embeddings/<model_name>/<dim>/<text_sha256>.bin.
/// A warm cache makes reruns free of network calls. Partial failures report
/// every failing subject and keep successful cache entries.
std::map<std::string, EmbeddingVector> embed_corpus(
    const corpus::CorpusManifest& manifest, const EmbeddingModelSpec& spec,
    const std::filesystem::path& cache_root,
    const std::optional<transcribe::AsrConfig>& asr = std::nullopt, int workers = 4);

}  // namespace speechmark::embed
