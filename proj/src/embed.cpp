#include "speechmark/embed.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "speechmark/digest.hpp"
#include "speechmark/errors.hpp"
#include "speechmark/fs_util.hpp"
#include "speechmark/http_client.hpp"
#include "speechmark/rng.hpp"

namespace speechmark::embed {

Backend backend_from_string(const std::string& s) {
  if (s == "remote_api") return Backend::remote_api;
  if (s == "local_test") return Backend::local_test;
  throw ParseError("unknown embedding backend '" + s +
                   "' (expected remote_api or local_test)");
}

std::string to_string(Backend b) {
  return b == Backend::remote_api ? "remote_api" : "local_test";
}

void validate(const EmbeddingModelSpec& spec) {
  if (spec.model_name.empty())
    throw ValidationError("embedding spec: model_name must be non-empty");
  if (spec.native_dimension < 1)
    throw ValidationError("embedding spec: native_dimension must be >= 1");
  if (spec.requested_dimension &&
      (*spec.requested_dimension < 1 || *spec.requested_dimension > spec.native_dimension))
    throw ValidationError("embedding spec: requested_dimension must be in [1, native_dimension]");
  if (spec.backend == Backend::remote_api && (!spec.endpoint_url || spec.endpoint_url->empty()))
    throw ValidationError("embedding spec: remote_api requires endpoint_url");
  if (spec.truncate_dimension) {
    const int base = spec.requested_dimension.value_or(spec.native_dimension);
    if (*spec.truncate_dimension < 1 || *spec.truncate_dimension > base)
      throw ValidationError("embedding spec: truncate_dimension must be in [1, served dimension]");
  }
  if (spec.max_retries < 0)
    throw ValidationError("embedding spec: max_retries must be >= 0");
}

int output_dimension(const EmbeddingModelSpec& spec) {
  if (spec.truncate_dimension) return *spec.truncate_dimension;
  return spec.requested_dimension.value_or(spec.native_dimension);
}

EmbeddingVector local_test_embed(const std::string& text, int dimension,
                                 std::int64_t seed) {
  if (dimension < 1)
    throw ValidationError("local_test_embed: dimension must be >= 1");
  EmbeddingVector v;
  v.model_name = "local-test";
  v.text_hash = sha256_hex(text);

  CounterRng rng(mix64(static_cast<std::uint64_t>(seed)) ^ sha256_seed64(text));
  v.values.resize(static_cast<std::size_t>(dimension));
  double norm_sq = 0.0;
  for (auto& x : v.values) {
    x = rng.next_symmetric();
    norm_sq += x * x;
  }
  if (norm_sq == 0.0) {
    v.values[0] = 1.0;
    return v;
  }
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (auto& x : v.values) x *= inv;
  return v;
}

EmbeddingVector truncate_renormalize(const EmbeddingVector& v, int d) {
  if (d < 1 || d > v.dimension())
    throw ValidationError("truncate_renormalize: d=" + std::to_string(d) +
                          " out of range for dimension " + std::to_string(v.dimension()));
  double norm_sq = 0.0;
  for (int i = 0; i < d; ++i) norm_sq += v.values[static_cast<std::size_t>(i)] *
                                         v.values[static_cast<std::size_t>(i)];
  if (norm_sq == 0.0)
    throw ValidationError("truncate_renormalize: leading-" + std::to_string(d) +
                          " prefix has zero norm");
  EmbeddingVector out;
  out.model_name = v.model_name;
  out.text_hash = v.text_hash;
  out.values.resize(static_cast<std::size_t>(d));
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (int i = 0; i < d; ++i)
    out.values[static_cast<std::size_t>(i)] = v.values[static_cast<std::size_t>(i)] * inv;
  return out;
}

namespace {

EmbeddingVector remote_embed(const std::string& text, const EmbeddingModelSpec& spec) {
  const std::string key = http::api_key_from_env();
  const auto url = http::split_url(*spec.endpoint_url);

  nlohmann::json body;
  body["model"] = spec.model_name;
  body["input"] = text;
  // The `dimensions` parameter is only sent when a reduced dimension was
  // requested; otherwise the server default applies.
  if (spec.requested_dimension) body["dimensions"] = *spec.requested_dimension;

  http::RetryPolicy policy;
  policy.max_retries = spec.max_retries;
  policy.backoff_base = spec.backoff_base;
  const auto response = http::request_with_retries(policy, "embedding request", [&]() {
    httplib::Client cli(url.base);
    cli.set_connection_timeout(spec.timeout);
    cli.set_read_timeout(spec.timeout);
    cli.set_write_timeout(spec.timeout);
    httplib::Headers headers = {{"Authorization", "Bearer " + key}};
    auto res = cli.Post(url.path, headers, body.dump(), "application/json");
    http::AttemptResult out;
    if (res) {
      out.transport_ok = true;
      out.response = {res->status, res->body};
    } else {
      out.transport_error = httplib::to_string(res.error());
    }
    return out;
  });

  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(response.body);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("embedding response is not valid JSON: ") + e.what());
  }

  EmbeddingVector v;
  v.model_name = spec.model_name;
  v.text_hash = sha256_hex(text);
  try {
    v.values = parsed.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("embedding response missing data[0].embedding: ") + e.what());
  }

  const int expected = spec.requested_dimension.value_or(spec.native_dimension);
  if (v.dimension() != expected)
    throw ValidationError("embedding dimension mismatch: server returned " +
                          std::to_string(v.dimension()) + " values but the spec requires " +
                          std::to_string(expected));
  for (double x : v.values)
    if (!std::isfinite(x)) throw ValidationError("embedding contains non-finite values");
  return v;
}

}  // namespace

EmbeddingVector embed_text(const std::string& text, const EmbeddingModelSpec& spec) {
  validate(spec);
  if (text.empty()) throw ValidationError("embed_text: text must be non-empty");

  EmbeddingVector v;
  if (spec.backend == Backend::local_test) {
    v = local_test_embed(text, spec.requested_dimension.value_or(spec.native_dimension),
                         spec.local_seed);
    v.model_name = spec.model_name;
  } else {
    v = remote_embed(text, spec);
  }
  if (spec.truncate_dimension) v = truncate_renormalize(v, *spec.truncate_dimension);
  return v;
}

std::filesystem::path vector_cache_path(const std::filesystem::path& cache_root,
                                        const std::string& model_name, int dimension,
                                        const std::string& text_hash) {
  return cache_root / "embeddings" / model_name / std::to_string(dimension) /
         (text_hash + ".bin");
}

void write_vector_file(const std::filesystem::path& path, const EmbeddingVector& v) {
  std::string bytes;
  bytes.reserve(4 + 8 * v.values.size());
  const auto dim = static_cast<std::uint32_t>(v.values.size());
  for (int i = 0; i < 4; ++i)
    bytes.push_back(static_cast<char>((dim >> (8 * i)) & 0xff));
  for (double x : v.values) {
    const auto bits = std::bit_cast<std::uint64_t>(x);
    for (int i = 0; i < 8; ++i)
      bytes.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
  atomic_write_file(path, bytes);
}

EmbeddingVector read_vector_file(const std::filesystem::path& path,
                                 const std::string& model_name,
                                 const std::string& text_hash) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 4)
    throw ParseError("embedding cache file '" + path.string() + "' is truncated");
  std::uint32_t dim = 0;
  for (int i = 0; i < 4; ++i)
    dim |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[static_cast<std::size_t>(i)]))
           << (8 * i);
  if (bytes.size() != 4 + 8ull * dim)
    throw ParseError("embedding cache file '" + path.string() + "' has inconsistent size");

  EmbeddingVector v;
  v.model_name = model_name;
  v.text_hash = text_hash;
  v.values.resize(dim);
  for (std::uint32_t i = 0; i < dim; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
      bits |= static_cast<std::uint64_t>(
                  static_cast<unsigned char>(bytes[4 + 8ull * i + static_cast<std::size_t>(b)]))
              << (8 * b);
    v.values[i] = std::bit_cast<double>(bits);
  }
  return v;
}

std::map<std::string, EmbeddingVector> embed_corpus(
    const corpus::CorpusManifest& manifest, const EmbeddingModelSpec& spec,
    const std::filesystem::path& cache_root,
    const std::optional<transcribe::AsrConfig>& asr, int workers) {
  validate(spec);

  const int dim = output_dimension(spec);
  const std::size_t n = manifest.subjects.size();
  std::vector<EmbeddingVector> vectors(n);
  std::vector<std::string> failures(n);
  std::atomic<std::size_t> next{0};

  // Transcript resolution happens per subject so one irrecoverable subject
  // does not stop the others from being embedded and cached.
  auto work = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) break;
      try {
        const auto transcript =
            transcribe::get_transcript(manifest.subjects[i], asr, cache_root);
        const std::string& text = transcript.text;
        const std::string hash = sha256_hex(text);
        const auto path = vector_cache_path(cache_root, spec.model_name, dim, hash);
        if (std::filesystem::exists(path)) {
          auto v = read_vector_file(path, spec.model_name, hash);
          if (v.dimension() != dim)
            throw ParseError("cached vector '" + path.string() + "' has dimension " +
                             std::to_string(v.dimension()) + ", expected " +
                             std::to_string(dim));
          vectors[i] = std::move(v);
        } else {
          auto v = embed_text(text, spec);
          write_vector_file(path, v);
          vectors[i] = std::move(v);
        }
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
  if (!error.empty()) throw Error("embedding failed for subject(s): " + error);

  std::map<std::string, EmbeddingVector> out;
  for (std::size_t i = 0; i < n; ++i)
    out[manifest.subjects[i].id] = std::move(vectors[i]);
  return out;
}

}  // namespace speechmark::embed
