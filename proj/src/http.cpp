#include "derail/http.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "derail/error.hpp"

namespace derail {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

RecordedResponse response_from_json(const nlohmann::json& j) {
  RecordedResponse r;
  r.status = j.value("status", 200);
  if (auto it = j.find("headers"); it != j.end() && it->is_object()) {
    for (const auto& [k, v] : it->items()) r.headers[lower(k)] = v.is_string() ? v.get<std::string>() : v.dump();
  }
  if (auto it = j.find("body"); it != j.end()) {
    r.body = it->is_string() ? it->get<std::string>() : it->dump();
  }
  return r;
}

}  // namespace

std::optional<std::string> HttpResponse::header(const std::string& lowercase_name) const {
  auto it = headers.find(lowercase_name);
  if (it == headers.end()) return std::nullopt;
  return it->second;
}

BaseUrl split_base_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(Errc::InvalidArgument, "base URL needs a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  BaseUrl b;
  if (path_start == std::string::npos) {
    b.scheme_host_port = url;
  } else {
    b.scheme_host_port = url.substr(0, path_start);
    b.path_prefix = url.substr(path_start);
    while (!b.path_prefix.empty() && b.path_prefix.back() == '/') b.path_prefix.pop_back();
  }
  return b;
}

LiveHttpTransport::LiveHttpTransport(std::string base_url, std::chrono::seconds timeout)
    : base_(split_base_url(base_url)), timeout_(timeout) {}

HttpResponse LiveHttpTransport::send(const HttpRequest& request) {
  httplib::Client client(base_.scheme_host_port);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  client.set_follow_location(true);

  httplib::Headers headers;
  std::string content_type = "application/json";
  for (const auto& [k, v] : request.headers) {
    if (lower(k) == "content-type") {
      content_type = v;
    } else {
      headers.emplace(k, v);
    }
  }
  const std::string path = base_.path_prefix + request.path;
  httplib::Result result = [&] {
    if (request.method == "GET") return client.Get(path, headers);
    if (request.method == "POST") return client.Post(path, headers, request.body, content_type);
    throw Error(Errc::InvalidArgument, "unsupported HTTP method " + request.method);
  }();
  if (!result) {
    throw Error(Errc::Transient, request.method + " " + path + ": " + httplib::to_string(result.error()));
  }
  HttpResponse out;
  out.status = result->status;
  out.body = result->body;
  for (const auto& [k, v] : result->headers) out.headers[lower(k)] = v;
  return out;
}

std::string request_path_hash(const std::string& path) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : path) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ReplayTransport::ReplayTransport(const std::filesystem::path& fixture_dir) {
  if (!std::filesystem::is_directory(fixture_dir)) {
    throw Error(Errc::Io, "fixture directory not found: " + fixture_dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(fixture_dir)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    std::ifstream in(file);
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.contains("path") || !j.contains("responses")) {
      throw Error(Errc::MalformedJson, "bad replay fixture " + file.string());
    }
    std::vector<RecordedResponse> responses;
    for (const auto& r : j["responses"]) responses.push_back(response_from_json(r));
    add(j["path"].get<std::string>(), std::move(responses));
  }
}

void ReplayTransport::add(const std::string& path, std::vector<RecordedResponse> responses) {
  std::lock_guard lock(mutex_);
  auto& entry = entries_[path];
  entry.responses.insert(entry.responses.end(), std::make_move_iterator(responses.begin()),
                         std::make_move_iterator(responses.end()));
}

HttpResponse ReplayTransport::send(const HttpRequest& request) {
  std::lock_guard lock(mutex_);
  log_.push_back(request.path);
  auto it = entries_.find(request.path);
  if (it == entries_.end() || it->second.responses.empty()) {
    return HttpResponse{404, {}, R"({"message":"Not Found"})"};
  }
  Entry& e = it->second;
  const RecordedResponse& r = e.responses[std::min(e.next, e.responses.size() - 1)];
  if (e.next < e.responses.size()) ++e.next;
  if (r.status == 0) throw Error(Errc::Transient, "replayed network failure for " + request.path);
  return HttpResponse{r.status, r.headers, r.body};
}

std::vector<std::string> ReplayTransport::requests() const {
  std::lock_guard lock(mutex_);
  return log_;
}

RecordingTransport::RecordingTransport(std::shared_ptr<HttpTransport> inner, std::filesystem::path fixture_dir)
    : inner_(std::move(inner)), dir_(std::move(fixture_dir)) {
  std::filesystem::create_directories(dir_);
}

HttpResponse RecordingTransport::send(const HttpRequest& request) {
  HttpResponse resp = inner_->send(request);
  std::lock_guard lock(mutex_);
  const auto file = dir_ / (request_path_hash(request.path) + ".json");
  nlohmann::json doc;
  if (std::ifstream in(file); in) {
    doc = nlohmann::json::parse(in, nullptr, false);
  }
  if (doc.is_discarded() || !doc.is_object()) doc = nlohmann::json::object();
  doc["path"] = request.path;
  nlohmann::json headers = nlohmann::json::object();
  for (const auto& [k, v] : resp.headers) {
    if (k == "link" || k == "retry-after" || k.rfind("x-ratelimit", 0) == 0) headers[k] = v;
  }
  auto body = nlohmann::json::parse(resp.body, nullptr, false);
  doc["responses"].push_back({{"status", resp.status},
                              {"headers", headers},
                              {"body", body.is_discarded() ? nlohmann::json(resp.body) : body}});
  std::ofstream(file) << doc.dump(2) << '\n';
  return resp;
}

Sleeper real_sleeper() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::chrono::milliseconds RetryPolicy::backoff(int attempt) const {
  double ms = static_cast<double>(initial_backoff.count());
  for (int i = 1; i < attempt; ++i) {
    ms *= std::max(1.0, multiplier);
    if (ms >= static_cast<double>(max_backoff.count())) break;
  }
  return std::min(max_backoff, std::chrono::milliseconds(static_cast<std::int64_t>(ms)));
}

}  // namespace derail
