#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace speechmark {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file or wire payload could not be parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Structurally valid input that violates a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Bad experiment configuration (config file, CLI flags, missing credential).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-transient HTTP failure, or retries exhausted.
class HttpError : public Error {
 public:
  HttpError(int status, std::string body, const std::string& what)
      : Error(what), status_(status), body_(std::move(body)) {}

  int status() const { return status_; }
  const std::string& body() const { return body_; }

 private:
  int status_;
  std::string body_;
};

/// SVM training stopped before reaching the KKT tolerance. Carries the
/// smallest KKT violation seen across iterates.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(double kkt_violation, const std::string& what)
      : Error(what), kkt_violation_(kkt_violation) {}

  double kkt_violation() const { return kkt_violation_; }

 private:
  double kkt_violation_;
};

}  // namespace speechmark
