#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace derail {

struct HttpRequest {
  std::string method = "GET";
  std::string path;  // path plus query, relative to the transport's base URL
  std::map<std::string, std::string> headers;
  std::string body;
};

struct HttpResponse {
  int status = 0;
  std::map<std::string, std::string> headers;  // keys lowercased
  std::string body;

  std::optional<std::string> header(const std::string& lowercase_name) const;
};

// Raises Error(Errc::Transient) when no response could be obtained.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse send(const HttpRequest& request) = 0;
};

struct BaseUrl {
  std::string scheme_host_port;  // "https://api.github.com"
  std::string path_prefix;       // "" or "/v1"
};

BaseUrl split_base_url(const std::string& url);

class LiveHttpTransport final : public HttpTransport {
 public:
  LiveHttpTransport(std::string base_url, std::chrono::seconds timeout);
  HttpResponse send(const HttpRequest& request) override;

 private:
  BaseUrl base_;
  std::chrono::seconds timeout_;
};

/// Key of a recorded exchange: FNV-1a 64 over the request path, hex encoded.
std::string request_path_hash(const std::string& path);

struct RecordedResponse {
  int status = 200;
  std::map<std::string, std::string> headers;
  std::string body;
};

/// Serves recorded responses keyed by request path. A fixture directory holds
/// one "<hash>.json" per path:
///   {"path": "...", "responses": [{"status": 200, "headers": {}, "body": ...}]}
/// Responses are served in order; the last one repeats once the list is
/// exhausted. Unknown paths answer 404.
class ReplayTransport final : public HttpTransport {
 public:
  ReplayTransport() = default;
  explicit ReplayTransport(const std::filesystem::path& fixture_dir);

  void add(const std::string& path, std::vector<RecordedResponse> responses);
  HttpResponse send(const HttpRequest& request) override;

  // Paths in the order they were requested.
  std::vector<std::string> requests() const;

 private:
  struct Entry {
    std::vector<RecordedResponse> responses;
    std::size_t next = 0;
  };
  mutable std::mutex mutex_;
  std::map<std::string, Entry> entries_;
  std::vector<std::string> log_;
};

/// Forwards to another transport and writes every exchange into a fixture
/// directory readable by ReplayTransport.
class RecordingTransport final : public HttpTransport {
 public:
  RecordingTransport(std::shared_ptr<HttpTransport> inner, std::filesystem::path fixture_dir);
  HttpResponse send(const HttpRequest& request) override;

 private:
  std::shared_ptr<HttpTransport> inner_;
  std::filesystem::path dir_;
  std::mutex mutex_;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;
Sleeper real_sleeper();

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{30'000};

  // Delay before retry number `attempt` (1-based). Non-decreasing in attempt.
  std::chrono::milliseconds backoff(int attempt) const;
};

}  // namespace derail
