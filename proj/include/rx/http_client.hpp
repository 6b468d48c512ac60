#pragma once

#include <chrono>
#include <functional>
#include <nlohmann/json.hpp>
#include <string>

namespace rx {

struct HttpClientConfig {
  std::string endpoint;                 // e.g. https://host:443/v1/retrieve
  std::string api_key_env = "RX_VLM_API_KEY";
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::seconds timeout{60};
};

/// JSON-over-HTTP POST with bounded retries and exponential backoff. Connection
/// failures, 429 and 5xx are retried; other statuses fail immediately. Exhausted
/// retries raise ErrorKind::Transport.
class HttpJsonClient {
 public:
  explicit HttpJsonClient(HttpClientConfig config);

  nlohmann::json post(const nlohmann::json& body) const;

  /// Replaces the sleep between attempts (tests use a no-op).
  void set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper) { sleeper_ = std::move(sleeper); }

  const HttpClientConfig& config() const { return config_; }

 private:
  HttpClientConfig config_;
  std::string scheme_host_port_;
  std::string path_;
  std::function<void(std::chrono::milliseconds)> sleeper_;
};

}  // namespace rx
