#include "derail/github.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <random>
#include <thread>

#include "derail/error.hpp"
#include "utf8.hpp"

namespace derail {
namespace {

constexpr int kPerPage = 100;
constexpr int kMaxPages = 1000;

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

const std::set<std::string>& english_stopwords() {
  static const std::set<std::string> words{
      "the", "and", "is", "to", "of", "it", "this", "that", "in", "for", "with", "not", "you", "i",
      "on", "be", "are", "have", "but", "can", "was", "if", "we", "do", "what", "my", "an", "or"};
  return words;
}

ThreadKind kind_of(const json& issue) {
  return issue.contains("pull_request") ? ThreadKind::PullRequest : ThreadKind::Issue;
}

std::string string_or(const json& j, const char* key, std::string fallback) {
  auto it = j.find(key);
  return it != j.end() && it->is_string() ? it->get<std::string>() : fallback;
}

Comment comment_from_api(const json& j, std::string id) {
  Comment c;
  c.id = std::move(id);
  const auto user = j.find("user");
  if (user == j.end() || user->is_null()) {
    c.author_handle = std::string(kGhostHandle);
    c.author_association = "NONE";
  } else {
    c.author_handle = string_or(*user, "login", std::string(kGhostHandle));
    c.author_association = string_or(j, "author_association", "NONE");
  }
  c.body = string_or(j, "body", "");
  c.created_at = parse_iso8601(string_or(j, "created_at", ""));
  return c;
}

std::string id_string(const json& j) {
  auto it = j.find("id");
  if (it == j.end()) return "";
  return it->is_string() ? it->get<std::string>() : it->dump();
}

}  // namespace

IngestConfig IngestConfig::from_env() {
  IngestConfig c;
  c.api_base_url = env_or("GITHUB_API_BASE", c.api_base_url);
  c.auth_token = env_or("GITHUB_TOKEN", "");
  return c;
}

void IngestConfig::validate() const {
  if (request_timeout.count() <= 0) throw Error(Errc::InvalidArgument, "request_timeout must be > 0");
  if (max_retries < 0) throw Error(Errc::InvalidArgument, "max_retries must be >= 0");
  if (fan_out < 1) throw Error(Errc::InvalidArgument, "fan_out must be >= 1");
  split_base_url(api_base_url);
}

bool looks_english(std::string_view text, const EnglishHeuristic& h) {
  std::size_t ascii_letters = 0;
  std::size_t other_letters = 0;
  std::size_t words = 0;
  int stop_hits = 0;
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    ++words;
    if (english_stopwords().count(word)) ++stop_hits;
    word.clear();
  };
  for (std::size_t i = 0; i < text.size();) {
    const char32_t cp = detail::next_code_point(text, i);
    if (cp < 0x80 && std::isalpha(static_cast<int>(cp))) {
      ++ascii_letters;
      word.push_back(static_cast<char>(std::tolower(static_cast<int>(cp))));
    } else if (detail::is_non_ascii_letter(cp)) {
      ++other_letters;
      word.push_back('?');
    } else if (cp == '\'') {
      word.push_back('\'');
    } else {
      flush();
    }
  }
  flush();
  const std::size_t letters = ascii_letters + other_letters;
  if (letters == 0) return true;
  const double ratio = static_cast<double>(ascii_letters) / static_cast<double>(letters);
  if (ratio < h.min_ascii_letter_ratio) return false;
  if (words >= static_cast<std::size_t>(h.min_words_for_stopwords) && stop_hits < h.min_stopword_hits) return false;
  return true;
}

void EligibilityRule::validate() const {
  if (min_comments < 1) throw Error(Errc::InvalidArgument, "min_comments must be >= 1");
}

bool EligibilityRule::eligible(const ConversationThread& thread) const {
  if (thread.comments.size() < static_cast<std::size_t>(min_comments)) return false;
  if (thread.locked_reason) {
    const std::string reason = lower_ascii(*thread.locked_reason);
    if (exclude_locked_reasons.count(reason)) return false;
    if (!allow_locked_if.count(reason)) return false;
  }
  if (language_filter == LanguageFilter::EnglishOnly) {
    std::string text = thread.title;
    for (const auto& c : thread.comments) {
      text += '\n';
      text += c.body;
    }
    if (!looks_english(text, english)) return false;
  }
  return true;
}

GithubClient::GithubClient(IngestConfig config, std::shared_ptr<HttpTransport> transport, Sleeper sleeper)
    : config_(std::move(config)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {
  config_.validate();
  retry_.max_retries = config_.max_retries;
  retry_.initial_backoff = config_.initial_backoff;
}

void GithubClient::await_governor() {
  std::lock_guard lock(governor_mutex_);
  if (pending_pause_) {
    sleeper_(*pending_pause_);
    pending_pause_.reset();
  }
}

json GithubClient::get_json(const std::string& path) {
  HttpRequest req;
  req.path = path;
  req.headers["Accept"] = "application/vnd.github+json";
  req.headers["X-GitHub-Api-Version"] = "2022-11-28";
  req.headers["User-Agent"] = "derail-ingest";
  if (!config_.auth_token.empty()) req.headers["Authorization"] = "Bearer " + config_.auth_token;

  for (int attempt = 0;; ++attempt) {
    await_governor();
    HttpResponse resp;
    std::optional<Error> failure;
    try {
      resp = transport_->send(req);
    } catch (const Error& e) {
      if (e.code() != Errc::Transient) throw;
      failure = e;
    }

    if (!failure) {
      if (resp.status >= 200 && resp.status < 300) {
        auto j = json::parse(resp.body, nullptr, false);
        if (j.is_discarded()) throw Error(Errc::MalformedJson, "GET " + path + ": response is not JSON");
        return j;
      }
      if (resp.status == 404 || resp.status == 410) {
        throw Error(Errc::NotFound, "GET " + path + ": " + std::to_string(resp.status));
      }
      const auto retry_after = resp.header("retry-after");
      const bool exhausted_quota = resp.header("x-ratelimit-remaining") == std::optional<std::string>("0");
      if (resp.status == 429 || (resp.status == 403 && (retry_after || exhausted_quota))) {
        if (attempt >= retry_.max_retries) {
          throw Error(Errc::RateLimited, "GET " + path + ": rate limited (" + std::to_string(resp.status) + ")");
        }
        std::chrono::milliseconds pause = config_.rate_limit_pause;
        if (retry_after) {
          pause = std::chrono::seconds(std::strtoll(retry_after->c_str(), nullptr, 10));
        }
        std::lock_guard lock(governor_mutex_);
        pending_pause_ = std::max(pending_pause_.value_or(std::chrono::milliseconds{0}), pause);
        continue;
      }
      if (resp.status == 401 || resp.status == 403) {
        throw Error(Errc::Forbidden, "GET " + path + ": access denied (" + std::to_string(resp.status) + ")");
      }
      if (resp.status < 500) {
        throw Error(Errc::HttpStatus, "GET " + path + ": HTTP " + std::to_string(resp.status));
      }
      failure = Error(Errc::Transient, "GET " + path + ": HTTP " + std::to_string(resp.status));
    }

    if (attempt >= retry_.max_retries) throw *failure;
    sleeper_(retry_.backoff(attempt + 1));
  }
}

std::vector<json> GithubClient::get_paginated(const std::string& path) {
  std::vector<json> items;
  const char sep = path.find('?') == std::string::npos ? '?' : '&';
  for (int page = 1; page <= kMaxPages; ++page) {
    json batch = get_json(path + sep + "per_page=" + std::to_string(kPerPage) + "&page=" + std::to_string(page));
    if (!batch.is_array()) throw Error(Errc::SchemaViolation, "GET " + path + ": expected a JSON array");
    for (auto& item : batch) items.push_back(std::move(item));
    if (batch.size() < static_cast<std::size_t>(kPerPage)) break;
  }
  return items;
}

ConversationThread GithubClient::fetch_thread(const std::string& repo, std::int64_t number) {
  const std::string base = "/repos/" + repo + "/issues/" + std::to_string(number);
  const json issue = get_json(base);

  ConversationThread t;
  t.repo = repo;
  t.number = number;
  t.kind = kind_of(issue);
  t.title = string_or(issue, "title", "");
  if (auto it = issue.find("labels"); it != issue.end() && it->is_array()) {
    for (const auto& l : *it) {
      if (l.is_string()) t.labels.push_back(l.get<std::string>());
      else if (l.is_object()) t.labels.push_back(string_or(l, "name", ""));
    }
  }
  if (issue.value("locked", false)) {
    t.locked_reason = string_or(issue, "active_lock_reason", "");
  }
  t.comments.push_back(comment_from_api(issue, "issue-" + id_string(issue)));
  for (const auto& c : get_paginated(base + "/comments")) {
    t.comments.push_back(comment_from_api(c, id_string(c)));
  }
  normalize_comment_order(t);
  return t;
}

std::vector<std::optional<ConversationThread>> GithubClient::fetch_threads(const std::string& repo,
                                                                           const std::vector<std::int64_t>& numbers) {
  std::vector<std::optional<ConversationThread>> out(numbers.size());
  std::vector<std::exception_ptr> errors(numbers.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < numbers.size(); i = next++) {
      try {
        out[i] = fetch_thread(repo, numbers[i]);
      } catch (const Error& e) {
        if (e.code() != Errc::NotFound) errors[i] = std::current_exception();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(config_.fan_out), numbers.size());
  std::vector<std::jthread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  pool.clear();

  std::vector<std::size_t> order(numbers.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return numbers[a] < numbers[b]; });
  for (auto i : order) {
    if (errors[i]) std::rethrow_exception(errors[i]);
  }
  return out;
}

std::vector<std::size_t> seeded_sample_indices(std::size_t n, std::size_t pick, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  if (pick >= n) return idx;
  std::mt19937_64 engine(seed);
  // Unbiased draw in [0, bound) by rejection, identical across standard libraries.
  auto below = [&](std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
      x = engine();
    } while (x >= limit);
    return x % bound;
  };
  for (std::size_t i = 0; i < pick; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(pick);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<ConversationThread> GithubClient::sample_neighbors(const std::string& repo, std::int64_t anchor_number,
                                                               int window, int pick, const EligibilityRule& rule,
                                                               std::uint64_t seed) {
  rule.validate();
  if (window < 0 || pick < 0) throw Error(Errc::InvalidArgument, "window and pick must be non-negative");
  std::vector<std::int64_t> candidates;
  for (std::int64_t n = anchor_number - window; n <= anchor_number + window; ++n) {
    if (n >= 1 && n != anchor_number) candidates.push_back(n);
  }
  std::vector<ConversationThread> eligible;
  for (auto& t : fetch_threads(repo, candidates)) {
    if (t && rule.eligible(*t)) eligible.push_back(std::move(*t));
  }
  std::sort(eligible.begin(), eligible.end(), [](const auto& a, const auto& b) { return a.number < b.number; });

  std::vector<ConversationThread> picked;
  for (auto i : seeded_sample_indices(eligible.size(), static_cast<std::size_t>(pick), seed)) {
    picked.push_back(std::move(eligible[i]));
  }
  return picked;
}

std::vector<LockedThread> GithubClient::list_locked_threads(const std::string& repo,
                                                            const std::set<std::string>& reasons) {
  std::vector<LockedThread> out;
  if (reasons.empty()) return out;
  std::set<std::string> wanted;
  for (const auto& r : reasons) wanted.insert(lower_ascii(r));
  for (const auto& issue : get_paginated("/repos/" + repo + "/issues?state=all")) {
    if (!issue.value("locked", false)) continue;
    const std::string reason = string_or(issue, "active_lock_reason", "");
    if (!wanted.count(lower_ascii(reason))) continue;
    out.push_back({issue.value("number", std::int64_t{0}), reason});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.number < b.number; });
  return out;
}

}  // namespace derail
