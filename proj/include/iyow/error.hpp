#pragma once

#include <stdexcept>
#include <string>

namespace iyow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent survey input.
class CorpusError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Raised by provider clients. Transient failures are retried by the caching
// wrappers; everything else surfaces immediately.
class ProviderError : public Error {
 public:
  using Error::Error;
};

class TransientProviderError : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

class AuthenticationError : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

class DimensionMismatchError : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

class RetriesExhaustedError : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

// Numerical failure: non-finite loss, singular systems, degenerate data.
class NumericError : public Error {
 public:
  using Error::Error;
};

class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace iyow
