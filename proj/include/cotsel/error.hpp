#pragma once

#include <stdexcept>
#include <string>

namespace cotsel {

// Base of every error thrown by the library. The CLI maps these onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Input data does not match the expected record layout.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class RankingError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

// Endpoint answered, but the payload is not what the completions API promises.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// A single record could not be scored (retries exhausted, endpoint failure).
class ScoringError : public Error {
 public:
  ScoringError(std::string record_id, const std::string& what)
      : Error(what), record_id_(std::move(record_id)) {}

  const std::string& record_id() const noexcept { return record_id_; }

 private:
  std::string record_id_;
};

}  // namespace cotsel
