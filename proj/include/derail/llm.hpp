#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "derail/http.hpp"

namespace derail {

enum class ChatRole { System, User };

struct ChatMessage {
  ChatRole role = ChatRole::User;
  std::string text;
};

struct ChatRequest {
  std::string model_name;
  double temperature = 0.0;
  std::size_t max_context_tokens = 8192;
  std::vector<ChatMessage> messages;

  /// Errc::InvalidArgument on negative temperature or no messages.
  void validate() const;
};

/// ceil(chars / 4), counted in bytes.
std::size_t estimate_tokens(std::string_view text);
/// Sum over message texts.
std::size_t estimate_tokens(const ChatRequest& request);

/// Chat-completion backend. complete() validates the request and rejects it
/// with Errc::ContextOverflow before the backend is reached.
class Gateway {
 public:
  virtual ~Gateway() = default;
  std::string complete(const ChatRequest& request);
  virtual std::string model_name() const = 0;

 protected:
  virtual std::string do_complete(const ChatRequest& request) = 0;
};

struct HttpGatewayConfig {
  std::string api_base = "http://localhost:8000/v1";
  std::string api_key;
  std::string model = "llama-3.1-70b";
  std::chrono::seconds timeout{120};
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{1000};
  std::size_t max_in_flight = 4;

  /// LLM_API_BASE, LLM_API_KEY, LLM_MODEL over the defaults.
  static HttpGatewayConfig from_env();
};

/// POST {api_base}/chat/completions, reply read from
/// choices[0].message.content. 429, 5xx and network failures are retried
/// with exponential backoff.
class HttpGateway final : public Gateway {
 public:
  HttpGateway(HttpGatewayConfig config, std::shared_ptr<HttpTransport> transport, Sleeper sleeper = real_sleeper());
  explicit HttpGateway(HttpGatewayConfig config);

  std::string model_name() const override { return config_.model; }

 protected:
  std::string do_complete(const ChatRequest& request) override;

 private:
  HttpGatewayConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  Sleeper sleeper_;
  RetryPolicy retry_;
  std::counting_semaphore<> in_flight_;
};

struct ScriptEntry {
  std::string match_substring;  // empty matches any request
  std::string response;
};

/// Reads the mock script format: one {"match_substring", "response"} object
/// per line.
std::vector<ScriptEntry> load_mock_script(const std::filesystem::path& path);
std::vector<ScriptEntry> parse_mock_script(std::string_view text);

/// Canned responses. The first entry whose substring occurs in the request's
/// last message answers it. In Consume mode each entry answers once; in Reuse
/// mode entries stay available. No match left: Errc::ScriptExhausted.
class ScriptedMock final : public Gateway {
 public:
  enum class Mode { Consume, Reuse };

  explicit ScriptedMock(std::vector<ScriptEntry> script, Mode mode = Mode::Consume);

  std::string model_name() const override { return "scripted-mock"; }
  std::vector<ChatRequest> requests() const;

 protected:
  std::string do_complete(const ChatRequest& request) override;

 private:
  mutable std::mutex mutex_;
  std::vector<ScriptEntry> script_;
  std::vector<bool> used_;
  Mode mode_;
  std::vector<ChatRequest> log_;
};

enum class ParseMode { Strict, Lenient };

/// Probability in [0, 1], rounded to two decimals. Strict accepts only a bare
/// decimal (optionally quoted or followed by a period); Lenient then falls
/// back to the first in-range decimal literal in the text. Errc::ParseFailure
/// otherwise, with the raw text in the message.
double parse_probability(std::string_view text, ParseMode mode = ParseMode::Lenient);

/// Leading "yes" or "no", case-insensitive. Errc::ParseFailure otherwise.
bool parse_binary(std::string_view text);

}  // namespace derail
