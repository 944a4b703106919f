#include "speechmark/transcribe.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <thread>

#include <httplib.h>

#include "speechmark/digest.hpp"
#include "speechmark/errors.hpp"
#include "speechmark/fs_util.hpp"
#include "speechmark/http_client.hpp"

namespace speechmark::transcribe {

namespace detail {

std::string trim_whitespace(const std::string& s) {
  const char* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::filesystem::path transcript_cache_path(const std::filesystem::path& cache_root,
                                            const std::string& model_name,
                                            const std::string& audio_sha256) {
  return cache_root / "transcripts" / model_name / (audio_sha256 + ".txt");
}

}  // namespace detail

void validate(const AsrConfig& cfg) {
  if (cfg.endpoint_url.empty())
    throw ValidationError("ASR config: endpoint_url must be non-empty");
  if (cfg.response_format != "text")
    throw ValidationError("ASR config: response_format must be 'text'");
  if (cfg.max_retries < 0)
    throw ValidationError("ASR config: max_retries must be >= 0");
}

TranscriptRecord transcribe_audio(const std::vector<char>& audio,
                                  const std::string& filename, const AsrConfig& cfg) {
  validate(cfg);
  if (audio.empty()) throw ValidationError("transcribe_audio: empty audio");
  const std::string key = http::api_key_from_env();
  const auto url = http::split_url(cfg.endpoint_url);

  http::RetryPolicy policy;
  policy.max_retries = cfg.max_retries;
  policy.backoff_base = cfg.backoff_base;

  const auto response = http::request_with_retries(policy, "transcription request", [&]() {
    httplib::Client cli(url.base);
    cli.set_connection_timeout(cfg.timeout);
    cli.set_read_timeout(cfg.timeout);
    cli.set_write_timeout(cfg.timeout);
    httplib::Headers headers = {{"Authorization", "Bearer " + key}};
    httplib::MultipartFormDataItems items = {
        {"model", cfg.model_name, "", ""},
        {"language", cfg.language, "", ""},
        {"response_format", cfg.response_format, "", ""},
        {"file", std::string(audio.begin(), audio.end()), filename,
         "application/octet-stream"},
    };
    auto res = cli.Post(url.path, headers, items);
    http::AttemptResult out;
    if (res) {
      out.transport_ok = true;
      out.response = {res->status, res->body};
    } else {
      out.transport_error = httplib::to_string(res.error());
    }
    return out;
  });

  TranscriptRecord record;
  record.text = detail::trim_whitespace(response.body);
  record.source = TranscriptSource::remote_asr;
  record.model_name = cfg.model_name;
  if (record.text.empty())
    throw Error("transcription endpoint returned an empty transcript");
  return record;
}

TranscriptRecord get_transcript(const corpus::SubjectRecord& subject,
                                const std::optional<AsrConfig>& asr,
                                const std::filesystem::path& cache_root) {
  if (subject.transcript) {
    TranscriptRecord r;
    r.subject_id = subject.id;
    r.text = detail::trim_whitespace(*subject.transcript);
    r.source = TranscriptSource::file;
    if (r.text.empty())
      throw ValidationError("subject '" + subject.id + "': inline transcript is empty");
    return r;
  }

  if (subject.transcript_path) {
    TranscriptRecord r;
    r.subject_id = subject.id;
    r.text = detail::trim_whitespace(read_file(*subject.transcript_path));
    r.source = TranscriptSource::file;
    if (r.text.empty())
      throw ValidationError("subject '" + subject.id + "': transcript file '" +
                            subject.transcript_path->string() + "' is empty");
    return r;
  }

  if (!subject.audio_path)
    throw ValidationError("subject '" + subject.id +
                          "' has no transcript, transcript file, or audio");
  if (!asr)
    throw ConfigError("subject '" + subject.id +
                      "' needs remote transcription but no ASR endpoint is configured");
  validate(*asr);

  const std::string audio = read_file(*subject.audio_path);
  if (audio.empty())
    throw ValidationError("subject '" + subject.id + "': audio file '" +
                          subject.audio_path->string() + "' is empty");
  const std::string hash = sha256_hex(audio);
  const auto cache_file = detail::transcript_cache_path(cache_root, asr->model_name, hash);

  TranscriptRecord r;
  r.subject_id = subject.id;
  r.source = TranscriptSource::remote_asr;
  r.model_name = asr->model_name;
  if (std::filesystem::exists(cache_file)) {
    r.text = read_file(cache_file);
    if (r.text.empty())
      throw Error("cached transcript '" + cache_file.string() + "' is empty");
    return r;
  }

  auto remote = transcribe_audio(std::vector<char>(audio.begin(), audio.end()),
                                 subject.audio_path->filename().string(), *asr);
  r.text = remote.text;
  atomic_write_file(cache_file, r.text);
  return r;
}

std::vector<TranscriptRecord> transcripts_for_corpus(
    const corpus::CorpusManifest& manifest, const std::optional<AsrConfig>& asr,
    const std::filesystem::path& cache_root, int workers) {
  const std::size_t n = manifest.subjects.size();
  std::vector<TranscriptRecord> records(n);
  std::vector<std::string> failures(n);
  std::atomic<std::size_t> next{0};

  auto work = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) break;
      try {
        records[i] = get_transcript(manifest.subjects[i], asr, cache_root);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };

  const int pool_size = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  if (pool_size == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < pool_size; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  std::string error;
  for (std::size_t i = 0; i < n; ++i) {
    if (failures[i].empty()) continue;
    if (!error.empty()) error += "; ";
    error += manifest.subjects[i].id + " (" + failures[i] + ")";
  }
  if (!error.empty())
    throw Error("transcription failed for subject(s): " + error);
  return records;
}

}  // namespace speechmark::transcribe
