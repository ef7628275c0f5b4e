#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "derail/corpus.hpp"
#include "derail/http.hpp"

namespace derail {

struct IngestConfig {
  std::string api_base_url = "https://api.github.com";
  std::string auth_token;
  std::chrono::seconds request_timeout{30};
  int max_retries = 3;
  // Used when a rate-limited response carries no Retry-After / reset hint.
  std::chrono::seconds rate_limit_pause{60};
  std::chrono::milliseconds initial_backoff{500};
  int fan_out = 4;

  // GITHUB_TOKEN and GITHUB_API_BASE, falling back to the defaults above.
  static IngestConfig from_env();
  void validate() const;
};

enum class LanguageFilter { EnglishOnly };

// Approximate English detector. A text passes when at least
// `min_ascii_letter_ratio` of its letters are ASCII and, for texts of
// `min_words_for_stopwords` words or more, it contains at least
// `min_stopword_hits` common English function words.
struct EnglishHeuristic {
  double min_ascii_letter_ratio = 0.85;
  int min_stopword_hits = 2;
  int min_words_for_stopwords = 8;
};

bool looks_english(std::string_view text, const EnglishHeuristic& h = {});

struct EligibilityRule {
  int min_comments = 2;  // counts the initiating post
  std::set<std::string> exclude_locked_reasons{"too heated"};
  std::set<std::string> allow_locked_if{"resolved"};
  LanguageFilter language_filter = LanguageFilter::EnglishOnly;
  EnglishHeuristic english;

  void validate() const;
  bool eligible(const ConversationThread& thread) const;
};

struct LockedThread {
  std::int64_t number = 0;
  std::string reason;

  bool operator==(const LockedThread&) const = default;
};

/// Read-only GitHub REST client. Safe to share between threads; all requests
/// pass through one rate-limit governor.
class GithubClient {
 public:
  GithubClient(IngestConfig config, std::shared_ptr<HttpTransport> transport,
               Sleeper sleeper = real_sleeper());

  /// Issue or PR with every comment. Annotations default to false/empty.
  /// NotFound for missing numbers, RateLimited/Forbidden for refused access,
  /// Transient once retries are exhausted.
  ConversationThread fetch_thread(const std::string& repo, std::int64_t number);

  /// Fetches up to `fan_out` threads concurrently. Missing numbers come back
  /// as nullopt; any other error is rethrown (lowest number first).
  std::vector<std::optional<ConversationThread>> fetch_threads(const std::string& repo,
                                                               const std::vector<std::int64_t>& numbers);

  /// Scans anchor-window..anchor+window (anchor excluded), keeps threads
  /// accepted by `rule`, and draws `pick` of them uniformly with a generator
  /// seeded by `seed`. Output is sorted by number.
  std::vector<ConversationThread> sample_neighbors(const std::string& repo, std::int64_t anchor_number,
                                                   int window, int pick, const EligibilityRule& rule,
                                                   std::uint64_t seed);

  /// Every locked issue/PR whose lock reason is in `reasons`, sorted by number.
  std::vector<LockedThread> list_locked_threads(const std::string& repo,
                                                const std::set<std::string>& reasons);

 private:
  json get_json(const std::string& path);
  std::vector<json> get_paginated(const std::string& path);
  void await_governor();

  IngestConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  Sleeper sleeper_;
  RetryPolicy retry_;
  std::mutex governor_mutex_;
  std::optional<std::chrono::milliseconds> pending_pause_;
};

/// Draws min(pick, n) distinct indices from [0, n) with a Fisher-Yates pass
/// over a std::mt19937_64 stream. Identical across platforms for a seed.
std::vector<std::size_t> seeded_sample_indices(std::size_t n, std::size_t pick, std::uint64_t seed);

}  // namespace derail
