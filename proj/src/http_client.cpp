#include "speechmark/http_client.hpp"

#include <cstdlib>
#include <random>
#include <thread>

#include "speechmark/errors.hpp"

namespace speechmark::http {

std::string api_key_from_env() {
  const char* key = std::getenv(kApiKeyEnvVar);
  if (!key || !*key)
    throw ConfigError(std::string("missing API credential: environment variable ") +
                      kApiKeyEnvVar + " is not set");
  return key;
}

UrlParts split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ParseError("URL '" + url + "' has no scheme");
  const auto path_start = url.find('/', scheme_end + 3);
  UrlParts parts;
  if (path_start == std::string::npos) {
    parts.base = url;
    parts.path = "/";
  } else {
    parts.base = url.substr(0, path_start);
    parts.path = url.substr(path_start);
  }
  if (parts.base.size() <= scheme_end + 3)
    throw ParseError("URL '" + url + "' has no host");
  return parts;
}

namespace {

bool transient_status(int status) {
  return status == 429 || (status >= 500 && status < 600);
}

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int attempt) {
  // base * 2^attempt, jittered by a factor in [0.75, 1.25)
  static thread_local std::minstd_rand rng{std::random_device{}()};
  std::uniform_real_distribution<double> jitter(0.75, 1.25);
  const double ms = static_cast<double>(policy.backoff_base.count()) *
                    std::ldexp(1.0, attempt) * jitter(rng);
  return std::chrono::milliseconds(static_cast<long>(ms));
}

}  // namespace

Response request_with_retries(const RetryPolicy& policy, const std::string& what,
                              const std::function<AttemptResult()>& attempt) {
  std::string last_failure;
  for (int tries = 0;; ++tries) {
    const AttemptResult result = attempt();
    if (result.transport_ok) {
      const auto& r = result.response;
      if (r.status >= 200 && r.status < 300) return r;
      if (!transient_status(r.status))
        throw HttpError(r.status, r.body,
                        what + ": HTTP " + std::to_string(r.status) + ": " + r.body);
      last_failure = "HTTP " + std::to_string(r.status);
    } else {
      last_failure = "transport error: " + result.transport_error;
    }
    if (tries >= policy.max_retries)
      throw HttpError(0, "",
                      what + ": retries exhausted after " + std::to_string(tries + 1) +
                          " attempts (last failure: " + last_failure + ")");
    std::this_thread::sleep_for(backoff_delay(policy, tries));
  }
}

}  // namespace speechmark::http
