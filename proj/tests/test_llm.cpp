#include <doctest.h>

#include <thread>

#include "derail/error.hpp"
#include "derail/llm.hpp"
#include "support.hpp"

using namespace derail;
using namespace derail::test;
using namespace std::chrono_literals;

namespace {

ChatRequest user_request(std::string text) {
  ChatRequest r;
  r.model_name = "test-model";
  r.messages.push_back({ChatRole::User, std::move(text)});
  return r;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected derail::Error");
  return Errc::InvalidArgument;
}

}  // namespace

TEST_CASE("scripted mock") {
  ScriptedMock mock(std::vector<ScriptEntry>{{"", "0.85"}});
  CHECK(mock.complete(user_request("anything")) == "0.85");
  CHECK(code_of([&] { mock.complete(user_request("again")); }) == Errc::ScriptExhausted);
  CHECK(mock.requests().size() == 2);
}

TEST_CASE("scripted mock matching and modes") {
  const std::vector<ScriptEntry> script = {{"alpha", "A"}, {"beta", "B"}, {"", "fallback"}};
  ScriptedMock consume(script);
  CHECK(consume.complete(user_request("beta first")) == "B");
  CHECK(consume.complete(user_request("alpha beta")) == "A");
  CHECK(consume.complete(user_request("beta again")) == "fallback");
  CHECK_THROWS_AS(consume.complete(user_request("beta")), Error);

  ScriptedMock reuse(script, ScriptedMock::Mode::Reuse);
  CHECK(reuse.complete(user_request("beta")) == "B");
  CHECK(reuse.complete(user_request("beta")) == "B");

  // Only the last message is matched.
  ChatRequest two = user_request("alpha");
  two.messages.push_back({ChatRole::User, "beta"});
  CHECK(reuse.complete(two) == "B");
}

TEST_CASE("mock script file format") {
  const auto s = parse_mock_script("{\"match_substring\": \"x\", \"response\": \"1\"}\n\n{\"response\": \"2\"}\n");
  REQUIRE(s.size() == 2);
  CHECK(s[0].match_substring == "x");
  CHECK(s[1].match_substring.empty());
  CHECK(s[1].response == "2");
  try {
    parse_mock_script("{\"response\": \"ok\"}\n{\"match_substring\": 3}\n");
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).rfind("line 2:", 0) == 0);
  }
  CHECK(load_mock_script(fixture("eval_mock_script.jsonl")).size() == 16);
}

TEST_CASE("context overflow is rejected before the backend") {
  ScriptedMock mock(std::vector<ScriptEntry>{{"", "0.5"}});
  auto big = user_request(std::string(8192 * 4 + 1, 'x'));
  CHECK(estimate_tokens(big) == 8193);
  CHECK(code_of([&] { mock.complete(big); }) == Errc::ContextOverflow);
  CHECK(mock.requests().empty());
  CHECK(mock.complete(user_request(std::string(8192 * 4, 'x'))) == "0.5");

  ChatRequest empty;
  CHECK(code_of([&] { mock.complete(empty); }) == Errc::InvalidArgument);
  auto hot = user_request("x");
  hot.temperature = -1;
  CHECK(code_of([&] { mock.complete(hot); }) == Errc::InvalidArgument);
}

TEST_CASE("estimate_tokens") {
  CHECK(estimate_tokens("") == 0);
  CHECK(estimate_tokens("abc") == 1);
  CHECK(estimate_tokens("abcd") == 1);
  CHECK(estimate_tokens("abcde") == 2);
}

TEST_CASE("http gateway retries server errors from the replay fixture") {
  auto replay = std::make_shared<ReplayTransport>(fixture("replay/llm_retry"));
  std::vector<std::chrono::milliseconds> sleeps;
  HttpGatewayConfig cfg;
  cfg.max_retries = 3;
  cfg.initial_backoff = 100ms;
  HttpGateway gw(cfg, replay, [&](std::chrono::milliseconds d) { sleeps.push_back(d); });
  CHECK(gw.complete(user_request("hello")) == "0.85");
  CHECK(replay->requests().size() == 3);
  CHECK(sleeps == std::vector<std::chrono::milliseconds>{100ms, 200ms});
  CHECK(gw.model_name() == "llama-3.1-70b");
}

TEST_CASE("http gateway failures") {
  auto noop = [](std::chrono::milliseconds) {};
  HttpGatewayConfig cfg;
  cfg.max_retries = 1;

  auto bad_request = std::make_shared<ReplayTransport>();
  bad_request->add("/chat/completions", {{400, {}, "{\"error\":\"bad\"}"}});
  HttpGateway gw1(cfg, bad_request, noop);
  CHECK(code_of([&] { gw1.complete(user_request("x")); }) == Errc::HttpStatus);
  CHECK(bad_request->requests().size() == 1);

  auto limited = std::make_shared<ReplayTransport>();
  limited->add("/chat/completions", {{429, {}, "{}"}});
  HttpGateway gw2(cfg, limited, noop);
  CHECK(code_of([&] { gw2.complete(user_request("x")); }) == Errc::RateLimited);
  CHECK(limited->requests().size() == 2);

  auto garbage = std::make_shared<ReplayTransport>();
  garbage->add("/chat/completions", {{200, {}, "{\"choices\": []}"}});
  HttpGateway gw3(cfg, garbage, noop);
  CHECK(code_of([&] { gw3.complete(user_request("x")); }) == Errc::MalformedJson);

  auto offline = std::make_shared<ReplayTransport>();
  offline->add("/chat/completions", {{0, {}, ""}});
  HttpGateway gw4(cfg, offline, noop);
  CHECK(code_of([&] { gw4.complete(user_request("x")); }) == Errc::Transient);
}

TEST_CASE("parse_probability") {
  CHECK(parse_probability("0.85") == 0.85);
  CHECK(parse_probability("The probability is 0.32.") == 0.32);
  CHECK(code_of([] { parse_probability("very likely"); }) == Errc::ParseFailure);
  CHECK(parse_probability("\"0.7\"", ParseMode::Strict) == 0.7);
  CHECK(parse_probability(" 1 ", ParseMode::Strict) == 1.0);
  CHECK(parse_probability("0.40.", ParseMode::Strict) == 0.4);
  CHECK(parse_probability("0.456") == 0.46);
  CHECK(code_of([] { parse_probability("The probability is 0.32.", ParseMode::Strict); }) == Errc::ParseFailure);
  CHECK(code_of([] { parse_probability("1.5"); }) == Errc::ParseFailure);
  CHECK(parse_probability("Out of 10 cases, 0.3 derail") == 0.3);
}

TEST_CASE("parse_binary") {
  CHECK(parse_binary("Yes"));
  CHECK_FALSE(parse_binary("no."));
  CHECK(code_of([] { parse_binary("maybe"); }) == Errc::ParseFailure);
  CHECK(parse_binary("  YES, it is toxic"));
  CHECK(code_of([] { parse_binary("nope"); }) == Errc::ParseFailure);
}

TEST_CASE("scripted mock is safe under concurrent use") {
  std::vector<ScriptEntry> script;
  for (int i = 0; i < 64; ++i) script.push_back({"req" + std::to_string(i) + ";", std::to_string(i)});
  ScriptedMock mock(script);
  std::vector<std::string> answers(64);
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < 4; ++w) {
      pool.emplace_back([&, w] {
        for (int i = w; i < 64; i += 4) answers[i] = mock.complete(user_request("req" + std::to_string(i) + ";"));
      });
    }
  }
  for (int i = 0; i < 64; ++i) CHECK(answers[i] == std::to_string(i));
}
