#pragma once

#include <chrono>
#include <functional>
#include <string>

namespace speechmark::http {

inline constexpr const char* kApiKeyEnvVar = "SPEECHMARK_API_KEY";

/// Reads the API credential; throws ConfigError naming the variable.
std::string api_key_from_env();

struct UrlParts {
  std::string base;  // scheme://host[:port]
  std::string path;  // at least "/"
};

UrlParts split_url(const std::string& url);

struct RetryPolicy {
  int max_retries = 3;  // additional attempts after the first
  std::chrono::milliseconds backoff_base{500};
};

struct Response {
  int status = 0;
  std::string body;
};

/// One attempt outcome: a response, or empty on transport error/timeout.
struct AttemptResult {
  bool transport_ok = false;
  Response response;
  std::string transport_error;
};

/// Runs `attempt` with retries on 429, 5xx, and transport failures, backing
/// off exponentially from backoff_base with multiplicative jitter. Other
/// non-2xx statuses and exhausted retries surface as HttpError.
Response request_with_retries(const RetryPolicy& policy,
                              const std::string& what,
                              const std::function<AttemptResult()>& attempt);

}  // namespace speechmark::http
