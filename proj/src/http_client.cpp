#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "rx/http_client.hpp"

#include <httplib.h>

#include <cstdlib>
#include <regex>
#include <thread>

#include "rx/error.hpp"

namespace rx {

HttpJsonClient::HttpJsonClient(HttpClientConfig config)
    : config_(std::move(config)),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
  static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.endpoint, m, url))
    throw Error(ErrorKind::InvalidArgument, "endpoint must be an http(s) URL: '" + config_.endpoint + "'");
  scheme_host_port_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/";
  if (config_.max_attempts < 1) throw Error(ErrorKind::InvalidArgument, "max_attempts must be >= 1");
}

nlohmann::json HttpJsonClient::post(const nlohmann::json& body) const {
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
    headers.emplace("Authorization", std::string("Bearer ") + key);

  const std::string payload = body.dump();
  std::string last_failure;
  auto backoff = config_.initial_backoff;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    auto res = client.Post(path_, headers, payload, "application/json");
    if (res && res->status >= 200 && res->status < 300) {
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Transport, "malformed JSON response from " + config_.endpoint + ": " + e.what());
      }
    }
    if (res) {
      last_failure = "HTTP " + std::to_string(res->status);
      const bool retryable = res->status == 429 || res->status >= 500;
      if (!retryable) break;
    } else {
      last_failure = httplib::to_string(res.error());
    }
    if (attempt < config_.max_attempts) {
      sleeper_(backoff);
      backoff *= 2;
    }
  }
  throw Error(ErrorKind::Transport, "request to " + config_.endpoint + " failed: " + last_failure);
}

}  // namespace rx
