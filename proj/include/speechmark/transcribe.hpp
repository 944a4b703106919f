#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "speechmark/corpus.hpp"

namespace speechmark::transcribe {

/// OpenAI-compatible transcription endpoint configuration. The credential is
/// read from the environment (http::kApiKeyEnvVar) at request time.
struct AsrConfig {
  std::string endpoint_url;  // e.g. https://api.openai.com/v1/audio/transcriptions
  std::string model_name = "whisper-1";
  std::string language = "es";
  std::string response_format = "text";  // the endpoint returns a plain-text body
  std::chrono::milliseconds timeout{30000};
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{500};
};

void validate(const AsrConfig& cfg);

enum class TranscriptSource { remote_asr, file };

struct TranscriptRecord {
  std::string subject_id;
  std::string text;  // non-empty after trimming
  TranscriptSource source = TranscriptSource::file;
  std::optional<std::string> model_name;
};

/// Multipart POST of (model, language, response_format, file) to the
/// endpoint; retries transient failures (429/5xx/timeouts) with exponential
/// backoff. The returned text is the response body with surrounding
/// whitespace trimmed.
TranscriptRecord transcribe_audio(const std::vector<char>& audio,
                                  const std::string& filename, const AsrConfig& cfg);

/// Resolves a subject's transcript with precedence
///   inline transcript > transcript file > cache hit > remote ASR,
/// where a remote result is cached under
///   <cache>/transcripts/<model_name>/<audio_sha256>.txt.
/// No network I/O happens when precedence resolves before the remote call.
TranscriptRecord get_transcript(const corpus::SubjectRecord& subject,
                                const std::optional<AsrConfig>& asr,
                                const std::filesystem::path& cache_root);

/// Batch resolution with a concurrency bound. Results are in manifest order.
/// Failures are aggregated into one error naming every failing subject;
/// successful cache writes are kept.
std::vector<TranscriptRecord> transcripts_for_corpus(
    const corpus::CorpusManifest& manifest, const std::optional<AsrConfig>& asr,
    const std::filesystem::path& cache_root, int workers = 4);

namespace detail {
std::string trim_whitespace(const std::string& s);
std::filesystem::path transcript_cache_path(const std::filesystem::path& cache_root,
                                            const std::string& model_name,
                                            const std::string& audio_sha256);
}  // namespace detail

}  // namespace speechmark::transcribe
