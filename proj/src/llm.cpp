#include "derail/llm.hpp"

#include <spdlog/spdlog.h>

#include <cctype>
#include <cmath>
#include <fstream>
#include <optional>
#include <regex>
#include <sstream>

#include "derail/error.hpp"
#include "json_util.hpp"

namespace derail {

using json = nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

std::optional<double> in_unit_range(const std::string& literal) {
  const double v = std::strtod(literal.c_str(), nullptr);
  if (v < 0.0 || v > 1.0) return std::nullopt;
  return round2(v);
}

std::string snippet(std::string_view s) {
  constexpr std::size_t kMax = 200;
  return s.size() <= kMax ? std::string(s) : std::string(s.substr(0, kMax)) + "...";
}

}  // namespace

void ChatRequest::validate() const {
  if (!(temperature >= 0.0)) throw Error(Errc::InvalidArgument, "temperature must be >= 0");
  if (messages.empty()) throw Error(Errc::InvalidArgument, "chat request has no messages");
  if (max_context_tokens == 0) throw Error(Errc::InvalidArgument, "max_context_tokens must be positive");
}

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

std::size_t estimate_tokens(const ChatRequest& request) {
  std::size_t total = 0;
  for (const auto& m : request.messages) total += estimate_tokens(m.text);
  return total;
}

std::string Gateway::complete(const ChatRequest& request) {
  request.validate();
  const std::size_t estimate = estimate_tokens(request);
  if (estimate > request.max_context_tokens) {
    throw Error(Errc::ContextOverflow, "estimated " + std::to_string(estimate) + " tokens exceeds the " +
                                           std::to_string(request.max_context_tokens) + "-token context");
  }
  return do_complete(request);
}

HttpGatewayConfig HttpGatewayConfig::from_env() {
  HttpGatewayConfig c;
  c.api_base = env_or("LLM_API_BASE", c.api_base);
  c.api_key = env_or("LLM_API_KEY", c.api_key);
  c.model = env_or("LLM_MODEL", c.model);
  return c;
}

HttpGateway::HttpGateway(HttpGatewayConfig config, std::shared_ptr<HttpTransport> transport, Sleeper sleeper)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      sleeper_(std::move(sleeper)),
      in_flight_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, config_.max_in_flight))) {
  if (config_.max_retries < 0) throw Error(Errc::InvalidArgument, "max_retries must be >= 0");
  retry_.max_retries = config_.max_retries;
  retry_.initial_backoff = config_.initial_backoff;
}

HttpGateway::HttpGateway(HttpGatewayConfig config)
    : HttpGateway(config, std::make_shared<LiveHttpTransport>(config.api_base, config.timeout)) {}

std::string HttpGateway::do_complete(const ChatRequest& request) {
  json payload;
  payload["model"] = request.model_name.empty() ? config_.model : request.model_name;
  payload["temperature"] = request.temperature;
  payload["stream"] = false;
  payload["messages"] = json::array();
  for (const auto& m : request.messages) {
    payload["messages"].push_back({{"role", m.role == ChatRole::System ? "system" : "user"}, {"content", m.text}});
  }
  HttpRequest req;
  req.method = "POST";
  req.path = "/chat/completions";
  req.headers["Content-Type"] = "application/json";
  if (!config_.api_key.empty()) req.headers["Authorization"] = "Bearer " + config_.api_key;
  req.body = payload.dump();

  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{in_flight_};

  for (int attempt = 0;; ++attempt) {
    std::optional<Error> failure;
    try {
      const HttpResponse resp = transport_->send(req);
      if (resp.status >= 200 && resp.status < 300) {
        json body;
        try {
          body = json::parse(resp.body);
          return body.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
          throw Error(Errc::MalformedJson, std::string("chat completion response: ") + e.what());
        }
      }
      const std::string msg = "chat completion returned HTTP " + std::to_string(resp.status) + ": " + snippet(resp.body);
      if (resp.status != 429 && resp.status < 500) throw Error(Errc::HttpStatus, msg);
      failure.emplace(resp.status == 429 ? Errc::RateLimited : Errc::Transient, msg);
    } catch (const Error& e) {
      if (e.code() != Errc::Transient) throw;
      failure.emplace(e);
    }
    if (attempt >= retry_.max_retries) throw *failure;
    spdlog::warn("chat completion attempt {} failed ({}), retrying", attempt + 1, failure->what());
    sleeper_(retry_.backoff(attempt + 1));
  }
}

std::vector<ScriptEntry> parse_mock_script(std::string_view text) {
  std::vector<ScriptEntry> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      ScriptEntry e;
      if (j.contains("match_substring")) e.match_substring = detail::require_string(j, "match_substring", "");
      e.response = detail::require_string(j, "response", "");
      out.push_back(std::move(e));
    } catch (const json::exception& e) {
      throw Error(Errc::MalformedJson, "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<ScriptEntry> load_mock_script(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open mock script " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_mock_script(ss.str());
}

ScriptedMock::ScriptedMock(std::vector<ScriptEntry> script, Mode mode)
    : script_(std::move(script)), used_(script_.size(), false), mode_(mode) {}

std::vector<ChatRequest> ScriptedMock::requests() const {
  std::lock_guard lock(mutex_);
  return log_;
}

std::string ScriptedMock::do_complete(const ChatRequest& request) {
  std::lock_guard lock(mutex_);
  log_.push_back(request);
  const std::string& text = request.messages.back().text;
  for (std::size_t i = 0; i < script_.size(); ++i) {
    if (mode_ == Mode::Consume && used_[i]) continue;
    if (text.find(script_[i].match_substring) == std::string::npos) continue;
    used_[i] = true;
    return script_[i].response;
  }
  throw Error(Errc::ScriptExhausted, "no scripted response left for request: " + snippet(text));
}

double parse_probability(std::string_view text, ParseMode mode) {
  static const std::regex strict(R"(^["'“]?\s*((?:0|1)(?:\.\d+)?|\.\d+)\s*["'”]?\.?$)");
  static const std::regex literal(R"((\d*\.\d+|\d+))");
  const std::string trimmed(trim(text));
  std::smatch m;
  if (std::regex_match(trimmed, m, strict)) {
    if (auto v = in_unit_range(m[1].str())) return *v;
  }
  if (mode == ParseMode::Lenient) {
    for (std::sregex_iterator it(trimmed.begin(), trimmed.end(), literal), end; it != end; ++it) {
      if (auto v = in_unit_range(it->str())) {
        spdlog::info("probability parsed leniently from \"{}\"", snippet(trimmed));
        return *v;
      }
    }
  }
  throw Error(Errc::ParseFailure, "no probability in [0,1] in model output: \"" + snippet(text) + "\"");
}

bool parse_binary(std::string_view text) {
  std::string_view t = trim(text);
  while (!t.empty() && (t.front() == '"' || t.front() == '\'')) t.remove_prefix(1);
  auto starts_word = [&](std::string_view w) {
    if (t.size() < w.size()) return false;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (std::tolower(static_cast<unsigned char>(t[i])) != w[i]) return false;
    }
    return t.size() == w.size() || !std::isalpha(static_cast<unsigned char>(t[w.size()]));
  };
  if (starts_word("yes")) return true;
  if (starts_word("no")) return false;
  throw Error(Errc::ParseFailure, "expected yes or no in model output: \"" + snippet(text) + "\"");
}

}  // namespace derail
