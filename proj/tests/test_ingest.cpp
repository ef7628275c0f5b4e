#include <doctest.h>

#include <algorithm>
#include <set>

#include "derail/error.hpp"
#include "derail/github.hpp"
#include "derail/http.hpp"
#include "support.hpp"

using namespace derail;
using namespace derail::test;
using namespace std::chrono_literals;

namespace {

struct SleepLog {
  std::vector<std::chrono::milliseconds> pauses;
  Sleeper sleeper() {
    return [this](std::chrono::milliseconds d) { pauses.push_back(d); };
  }
};

RecordedResponse ok(const json& body) { return {200, {}, body.dump()}; }

std::string comments_path(const std::string& repo, std::int64_t n, int page = 1) {
  return "/repos/" + repo + "/issues/" + std::to_string(n) + "/comments?per_page=100&page=" + std::to_string(page);
}

json issue_json(std::int64_t number, const std::string& body, std::optional<std::string> lock = std::nullopt) {
  json j{{"number", number},
         {"id", 1000 + number},
         {"title", "Issue " + std::to_string(number)},
         {"user", {{"login", "user" + std::to_string(number)}}},
         {"author_association", "NONE"},
         {"body", body},
         {"created_at", "2024-01-01T00:00:00Z"},
         {"labels", json::array()},
         {"locked", lock.has_value()}};
  if (lock) j["active_lock_reason"] = *lock;
  return j;
}

json comment_json(int id, const std::string& login, const std::string& body, const std::string& ts) {
  return json{{"id", id}, {"user", {{"login", login}}}, {"author_association", "MEMBER"},
              {"body", body}, {"created_at", ts}};
}

// An issue whose initiating post is followed by `replies` comments.
void add_issue(ReplayTransport& t, const std::string& repo, std::int64_t n, int replies,
               std::optional<std::string> lock = std::nullopt) {
  t.add("/repos/" + repo + "/issues/" + std::to_string(n),
        {ok(issue_json(n, "The installer fails on this machine and I would like to know why.", lock))});
  json page = json::array();
  for (int i = 0; i < replies; ++i) {
    page.push_back(comment_json(static_cast<int>(n) * 100 + i, "helper", "Thanks for the report, we are looking at it.",
                                "2024-01-02T00:00:00Z"));
  }
  t.add(comments_path(repo, n), {ok(page)});
}

IngestConfig quick_config() {
  IngestConfig c;
  c.initial_backoff = 10ms;
  c.rate_limit_pause = 5s;
  return c;
}

}  // namespace

TEST_CASE("request path hash matches the fixture file names") {
  CHECK(request_path_hash("/chat/completions") == "dee099628461b8a4");
  CHECK(request_path_hash("/repos/acme/widgets/issues/42") == "2f412550bf4ff40c");
}

TEST_CASE("fetch_thread from a recorded 5-comment issue") {
  auto replay = std::make_shared<ReplayTransport>(fixture("replay/github_issue"));
  GithubClient client(quick_config(), replay);
  const auto t = client.fetch_thread("acme/widgets", 42);

  REQUIRE(t.comments.size() == 5);
  CHECK(t.kind == ThreadKind::Issue);
  CHECK(t.title == "Crash when loading config");
  CHECK(t.labels == std::vector<std::string>{"bug", "needs triage"});
  CHECK(t.locked_reason == "resolved");
  CHECK(t.comments[0].id == "issue-9042");
  CHECK(t.comments[0].author_handle == "rita");

  std::vector<std::string> assoc;
  for (const auto& c : t.comments) assoc.push_back(c.author_association);
  CHECK(assoc == std::vector<std::string>{"NONE", "OWNER", "NONE", "NONE", "CONTRIBUTOR"});
  CHECK(t.comments[1].role() == AuthorRole::ProjectContributor);
  CHECK(t.comments[3].is_ghost());
  CHECK(t.comments[4].body == "Fixed in #43.");
  for (const auto& c : t.comments) {
    CHECK_FALSE(c.is_toxic);
    CHECK(c.tbdfs.empty());
  }
  CHECK_NOTHROW(validate(t));

  CHECK(client.fetch_thread("acme/widgets", 43).kind == ThreadKind::PullRequest);
}

TEST_CASE("fetch_thread failures") {
  auto replay = std::make_shared<ReplayTransport>(fixture("replay/github_issue"));
  SleepLog sleeps;
  GithubClient client(quick_config(), replay, sleeps.sleeper());

  try {
    client.fetch_thread("acme/widgets", 999);
    FAIL("expected NotFound");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NotFound);
  }
  try {
    client.fetch_thread("acme/widgets", 44);
    FAIL("expected Forbidden");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Forbidden);
  }
  CHECK(sleeps.pauses.empty());
}

TEST_CASE("rate limiting honours Retry-After and gives up after the retry budget") {
  auto replay = std::make_shared<ReplayTransport>();
  RecordedResponse limited{429, {{"retry-after", "7"}}, "{}"};
  replay->add("/repos/a/b/issues/1", {limited, ok(issue_json(1, "hello there"))});
  replay->add(comments_path("a/b", 1), {ok(json::array())});
  replay->add("/repos/a/b/issues/2", {RecordedResponse{403, {{"x-ratelimit-remaining", "0"}}, "{}"}});

  SleepLog sleeps;
  GithubClient client(quick_config(), replay, sleeps.sleeper());
  CHECK(client.fetch_thread("a/b", 1).comments.size() == 1);
  REQUIRE(sleeps.pauses.size() == 1);
  CHECK(sleeps.pauses[0] == 7s);

  sleeps.pauses.clear();
  try {
    client.fetch_thread("a/b", 2);
    FAIL("expected RateLimited");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::RateLimited);
  }
  CHECK(sleeps.pauses.size() == 3);
  CHECK(sleeps.pauses[0] == 5s);
}

TEST_CASE("server errors and network failures are retried") {
  auto replay = std::make_shared<ReplayTransport>();
  replay->add("/repos/a/b/issues/1", {RecordedResponse{500, {}, ""}, RecordedResponse{500, {}, ""},
                                      ok(issue_json(1, "hello there"))});
  replay->add(comments_path("a/b", 1), {RecordedResponse{0, {}, ""}, ok(json::array())});
  replay->add("/repos/a/b/issues/2", {RecordedResponse{502, {}, ""}});

  SleepLog sleeps;
  GithubClient client(quick_config(), replay, sleeps.sleeper());
  CHECK(client.fetch_thread("a/b", 1).number == 1);
  CHECK(sleeps.pauses == std::vector<std::chrono::milliseconds>{10ms, 20ms, 10ms});

  try {
    client.fetch_thread("a/b", 2);
    FAIL("expected Transient");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Transient);
  }
}

TEST_CASE("comment pagination") {
  auto replay = std::make_shared<ReplayTransport>();
  replay->add("/repos/a/b/issues/5", {ok(issue_json(5, "hello there"))});
  json page1 = json::array();
  for (int i = 0; i < 100; ++i) {
    page1.push_back(comment_json(i, "helper", "reply " + std::to_string(i), "2024-01-02T00:00:00Z"));
  }
  json page2 = json::array();
  for (int i = 100; i < 103; ++i) {
    page2.push_back(comment_json(i, "helper", "reply " + std::to_string(i), "2024-01-03T00:00:00Z"));
  }
  replay->add(comments_path("a/b", 5, 1), {ok(page1)});
  replay->add(comments_path("a/b", 5, 2), {ok(page2)});

  GithubClient client(quick_config(), replay);
  const auto t = client.fetch_thread("a/b", 5);
  CHECK(t.comments.size() == 104);
  CHECK(t.comments.back().body == "reply 102");
}

TEST_CASE("eligibility rule") {
  EligibilityRule rule;
  auto t = make_thread("a/b", 1, 1);
  t.comments[0].body = "The installer fails on this machine and I would like to know why.";
  CHECK_FALSE(rule.eligible(t));
  t.comments.push_back(t.comments[0]);
  CHECK(rule.eligible(t));
  t.locked_reason = "too heated";
  CHECK_FALSE(rule.eligible(t));
  t.locked_reason = "resolved";
  CHECK(rule.eligible(t));
  t.locked_reason = "spam";
  CHECK_FALSE(rule.eligible(t));
  t.locked_reason.reset();
  t.comments[1].body = "Установщик не работает на этой машине, подскажите почему.";
  t.comments[0].body = "Установщик не работает.";
  t.title = "Ошибка";
  CHECK_FALSE(rule.eligible(t));

  CHECK(looks_english("This is the fix that we discussed in the meeting."));
  CHECK_FALSE(looks_english("Dies ist die Lösung, über die wir gesprochen haben, bitte prüfen."));
  CHECK(looks_english("LGTM"));
}

TEST_CASE("seeded_sample_indices") {
  const auto a = seeded_sample_indices(12, 4, 7);
  CHECK(a == seeded_sample_indices(12, 4, 7));
  CHECK(a.size() == 4);
  CHECK(std::is_sorted(a.begin(), a.end()));
  CHECK(std::set<std::size_t>(a.begin(), a.end()).size() == 4);
  CHECK(std::all_of(a.begin(), a.end(), [](auto i) { return i < 12; }));
  CHECK(seeded_sample_indices(3, 4, 7) == std::vector<std::size_t>{0, 1, 2});
  CHECK(seeded_sample_indices(12, 4, 42) == std::vector<std::size_t>{1, 2, 6, 9});
}

TEST_CASE("sample_neighbors") {
  // 30 candidates around #100: 12 eligible, the rest too short, too heated or missing.
  auto replay = std::make_shared<ReplayTransport>();
  std::vector<std::int64_t> eligible;
  for (std::int64_t n = 85; n <= 115; ++n) {
    if (n == 100) continue;
    const auto k = n % 5;
    if (k == 0 || (k == 1 && n < 100) || (k == 2 && n > 100)) {
      add_issue(*replay, "a/b", n, 2);
      eligible.push_back(n);
    } else if (k == 1 || k == 2) {
      add_issue(*replay, "a/b", n, 0);
    } else if (k == 3) {
      add_issue(*replay, "a/b", n, 3, "too heated");
    }
  }
  REQUIRE(eligible.size() == 12);

  GithubClient client(quick_config(), replay);
  EligibilityRule rule;
  const auto first = client.sample_neighbors("a/b", 100, 15, 4, rule, 2024);
  REQUIRE(first.size() == 4);
  for (const auto& t : first) {
    CHECK(std::find(eligible.begin(), eligible.end(), t.number) != eligible.end());
  }
  CHECK(std::is_sorted(first.begin(), first.end(), [](auto& a, auto& b) { return a.number < b.number; }));
  const auto again = client.sample_neighbors("a/b", 100, 15, 4, rule, 2024);
  CHECK(again == first);

  const auto idx = seeded_sample_indices(12, 4, 2024);
  for (std::size_t i = 0; i < 4; ++i) CHECK(first[i].number == eligible[idx[i]]);
}

TEST_CASE("sample_neighbors with few or no eligible threads") {
  auto replay = std::make_shared<ReplayTransport>();
  add_issue(*replay, "a/b", 9, 1);
  add_issue(*replay, "a/b", 11, 1);
  add_issue(*replay, "a/b", 12, 1);
  GithubClient client(quick_config(), replay);
  CHECK(client.sample_neighbors("a/b", 10, 2, 4, EligibilityRule{}, 1).size() == 3);

  auto heated = std::make_shared<ReplayTransport>();
  for (std::int64_t n : {9, 11}) add_issue(*heated, "a/b", n, 2, "too heated");
  GithubClient heated_client(quick_config(), heated);
  CHECK(heated_client.sample_neighbors("a/b", 10, 1, 4, EligibilityRule{}, 1).empty());
}

TEST_CASE("list_locked_threads") {
  auto replay = std::make_shared<ReplayTransport>();
  json page = json::array({issue_json(3, "x", "too heated"), issue_json(1, "x", "Too Heated"),
                           issue_json(2, "x", "spam"), issue_json(4, "x")});
  replay->add("/repos/a/b/issues?state=all&per_page=100&page=1", {ok(page)});
  GithubClient client(quick_config(), replay);

  const auto locked = client.list_locked_threads("a/b", {"too heated"});
  CHECK(locked == std::vector<LockedThread>{{1, "Too Heated"}, {3, "too heated"}});
  CHECK(client.list_locked_threads("a/b", {}).empty());

  auto quiet = std::make_shared<ReplayTransport>();
  quiet->add("/repos/a/c/issues?state=all&per_page=100&page=1", {ok(json::array({issue_json(1, "x")}))});
  GithubClient quiet_client(quick_config(), quiet);
  CHECK(quiet_client.list_locked_threads("a/c", {"too heated"}).empty());
}

TEST_CASE("recorded exchanges replay to the same thread") {
  auto source = std::make_shared<ReplayTransport>(fixture("replay/github_issue"));
  const auto dir = temp_dir("record");
  auto recorder = std::make_shared<RecordingTransport>(source, dir);
  const auto live = GithubClient(quick_config(), recorder).fetch_thread("acme/widgets", 42);

  auto replay = std::make_shared<ReplayTransport>(dir);
  const auto replayed = GithubClient(quick_config(), replay).fetch_thread("acme/widgets", 42);
  CHECK(replayed == live);
  std::filesystem::remove_all(dir);
}

TEST_CASE("retry backoff is non-decreasing and capped") {
  RetryPolicy p;
  p.initial_backoff = 100ms;
  p.max_backoff = 1000ms;
  std::chrono::milliseconds prev{0};
  for (int a = 1; a <= 10; ++a) {
    CHECK(p.backoff(a) >= prev);
    CHECK(p.backoff(a) <= 1000ms);
    prev = p.backoff(a);
  }
  CHECK(p.backoff(1) == 100ms);
  CHECK(p.backoff(3) == 400ms);
}

TEST_CASE("base URL split") {
  auto b = split_base_url("http://localhost:8000/v1");
  CHECK(b.scheme_host_port == "http://localhost:8000");
  CHECK(b.path_prefix == "/v1");
  CHECK(split_base_url("https://api.github.com").path_prefix.empty());
}
