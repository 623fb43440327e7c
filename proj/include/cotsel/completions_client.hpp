#pragma once

// Minimal client for completions-style HTTP endpoints with per-request
// retries and jittered exponential backoff. One instance per thread.

#include <chrono>
#include <cstdlib>
#include <memory>
#include <random>
#include <string>
#include <thread>

#include "cotsel/error.hpp"
#include "httplib.h"
#include "json.hpp"

namespace cotsel::scoring {

// The request never produced a usable HTTP response.
class TransportError : public Error {
 public:
  using Error::Error;
};

struct RetryPolicy {
  int retries = 3;
  std::chrono::milliseconds backoff_base{500};
  std::chrono::milliseconds max_backoff{30000};
};

struct EndpointUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline EndpointUrl parse_endpoint_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint URL needs a scheme: " + url);
  }
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ConfigError("endpoint URL scheme must be http or https: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  EndpointUrl e;
  e.origin = url.substr(0, path_start);
  e.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (e.origin.size() <= scheme_end + 3) throw ConfigError("endpoint URL has no host: " + url);
  return e;
}

class CompletionsClient {
 public:
  CompletionsClient(const std::string& url, std::chrono::milliseconds timeout,
                    RetryPolicy retry, std::string api_key = {})
      : endpoint_(parse_endpoint_url(url)),
        client_(std::make_unique<httplib::Client>(endpoint_.origin)),
        retry_(retry),
        api_key_(std::move(api_key)),
        jitter_(std::random_device{}()) {
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs =
        std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client_->set_connection_timeout(secs.count(), usecs.count());
    client_->set_read_timeout(secs.count(), usecs.count());
    client_->set_write_timeout(secs.count(), usecs.count());
    client_->set_keep_alive(true);
    client_->set_tcp_nodelay(true);
  }

  // Total HTTP attempts issued by this client, retries included.
  std::size_t attempts() const { return attempts_; }

  nlohmann::json post(const nlohmann::json& body) {
    const std::string payload = body.dump();
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    std::string last_error;
    for (int attempt = 0; attempt <= retry_.retries; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(backoff(attempt));
      ++attempts_;
      auto res = client_->Post(endpoint_.path, headers, payload, "application/json");
      if (!res) {
        last_error = "connection failed: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status < 200 || res->status >= 300) {
        throw TransportError("HTTP " + std::to_string(res->status) + " from " +
                             endpoint_.origin + endpoint_.path);
      }
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception&) {
        throw ProtocolError("endpoint returned a non-JSON body");
      }
    }
    throw TransportError("gave up after " + std::to_string(retry_.retries + 1) +
                         " attempts: " + last_error);
  }

 private:
  std::chrono::milliseconds backoff(int attempt) {
    const double base = static_cast<double>(retry_.backoff_base.count()) *
                        static_cast<double>(1ULL << std::min(attempt - 1, 20));
    std::uniform_real_distribution<double> jitter(0.5, 1.0);
    const double ms = std::min(base, static_cast<double>(retry_.max_backoff.count())) *
                      jitter(jitter_);
    return std::chrono::milliseconds(static_cast<long long>(ms));
  }

  EndpointUrl endpoint_;
  std::unique_ptr<httplib::Client> client_;
  RetryPolicy retry_;
  std::string api_key_;
  std::mt19937_64 jitter_;
  std::size_t attempts_ = 0;
};

inline std::string api_key_from_env(const std::string& var) {
  if (var.empty()) return {};
  const char* v = std::getenv(var.c_str());
  return v ? std::string(v) : std::string();
}

}  // namespace cotsel::scoring
