#include <doctest.h>

#include "derail/error.hpp"
#include "derail/predictor.hpp"
#include "support.hpp"

using namespace derail;
using namespace derail::test;

namespace {

PredictOptions fixed_options() {
  PredictOptions o;
  o.clock = fixed_clock(at("2024-07-01T00:00:00Z"));
  return o;
}

Error error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected derail::Error");
  return Error(Errc::InvalidArgument, "");
}

// 20 comments whose bodies cost 10 tokens each, 20 with the per-comment overhead.
std::vector<Comment> uniform_prefix() {
  auto t = make_thread("a/b", 1, 20);
  for (auto& c : t.comments) c.body = std::string(40, 'x');
  return t.comments;
}

}  // namespace

TEST_CASE("classify is inclusive") {
  CHECK(classify(0.50, 0.5));
  CHECK_FALSE(classify(0.49, 0.5));
  CHECK(classify(0.0, 0.0));
  CHECK(classify(1.0, 1.0));
}

TEST_CASE("recommend_action bands") {
  const InterventionPolicy p{0.4, 0.6};
  CHECK(recommend_action(0.45, p) == InterventionAction::BotReminder);
  CHECK(recommend_action(0.60, p) == InterventionAction::ModeratorAlert);
  CHECK(recommend_action(0.10, p) == InterventionAction::NoAction);
  CHECK(recommend_action(0.40, p) == InterventionAction::BotReminder);
  CHECK(recommend_action(1.0, p) == InterventionAction::ModeratorAlert);
  CHECK_THROWS_AS((InterventionPolicy{0.6, 0.4}.validate()), Error);
  CHECK_THROWS_AS((InterventionPolicy{0.4, 1.2}.validate()), Error);
  for (auto a : kAllActions) CHECK(parse_action(to_string(a)) == a);
}

TEST_CASE("truncate_transcript") {
  const auto prefix = uniform_prefix();
  const auto kept = truncate_transcript(prefix, 8 * 20);
  REQUIRE(kept.comments.size() == 8);
  CHECK(kept.elided == 12);
  CHECK(kept.comments[0].id == "1-0");
  for (std::size_t i = 1; i < 8; ++i) CHECK(kept.comments[i].id == "1-" + std::to_string(12 + i));

  const auto all = truncate_transcript(prefix, 20 * 20);
  CHECK(all.comments == prefix);
  CHECK(all.elided == 0);

  auto giant = prefix;
  giant[0].body = std::string(4000, 'y');
  CHECK(error_of([&] { truncate_transcript(giant, 500); }).code() == Errc::ContextOverflow);
  CHECK(error_of([&] { truncate_transcript(prefix, 0); }).code() == Errc::InvalidArgument);
}

TEST_CASE("strip_surrounding_quotes") {
  CHECK(strip_surrounding_quotes("  \"hello\" \n") == "hello");
  CHECK(strip_surrounding_quotes("\xE2\x80\x9Chello\xE2\x80\x9D") == "hello");
  CHECK(strip_surrounding_quotes("say \"hi\"") == "say \"hi\"");
  CHECK(strip_surrounding_quotes("\"unbalanced") == "\"unbalanced");
  CHECK(strip_surrounding_quotes("\"\"").empty());
}

TEST_CASE("predict with a scripted mock") {
  const auto thread = make_thread("a/b", 7, 5, {3});
  ScriptedMock mock({{"Conversation Transcript", "\"USER1 asks and USER2 answers calmly.\""}, {"", "0.85"}});
  const auto p = predict(thread, ScdStrategy::LeastToMostScd, mock, fixed_options());
  CHECK(p.probability == 0.85);
  CHECK(p.scd_summary == "USER1 asks and USER2 answers calmly.");
  CHECK(p.scd_raw_output == "\"USER1 asks and USER2 answers calmly.\"");
  CHECK(p.prefix_comments == 3);
  CHECK(p.elided_comments == 0);
  CHECK(p.model == "scripted-mock");
  CHECK(p.template_version == kTemplateVersion);
  CHECK(p.created_at == at("2024-07-01T00:00:00Z"));
  CHECK(p.thread_ref == ThreadRef{"a/b", 7});
  CHECK(p.predictor_prompt.find("USER1 asks and USER2 answers calmly.") != std::string::npos);
  CHECK(p.scd_prompt.find("comment 2") != std::string::npos);
  CHECK(p.scd_prompt.find("comment 3") == std::string::npos);

  const auto reqs = mock.requests();
  REQUIRE(reqs.size() == 2);
  CHECK(reqs[0].messages.back().text == p.scd_prompt);
  CHECK(reqs[1].messages.back().text == p.predictor_prompt);
  CHECK(reqs[0].temperature == 0.0);
}

TEST_CASE("predict failures carry their step") {
  const auto thread = make_thread("a/b", 7, 5, {3});

  ScriptedMock unclear({{"Conversation Transcript", "\"summary\""}, {"", "unclear"}});
  auto e = error_of([&] { predict(thread, ScdStrategy::GenericScd, unclear, fixed_options()); });
  CHECK(e.code() == Errc::ParseFailure);
  CHECK(e.step() == "predict");

  ScriptedMock blank(std::vector<ScriptEntry>{{"", "  \"\"  "}});
  e = error_of([&] { predict(thread, ScdStrategy::GenericScd, blank, fixed_options()); });
  CHECK(e.code() == Errc::EmptySummary);
  CHECK(e.step() == "scd");

  auto huge = thread;
  huge.comments[0].body = std::string(40000, 'z');
  ScriptedMock unused(std::vector<ScriptEntry>{{"", "0.5"}});
  e = error_of([&] { predict(huge, ScdStrategy::LeastToMostScd, unused, fixed_options()); });
  CHECK(e.code() == Errc::ContextOverflow);
  CHECK(e.step() == "scd");
  CHECK(unused.requests().empty());

  e = error_of([&] { predict(make_thread("a/b", 8, 3, {0}), ScdStrategy::LeastToMostScd, unused, fixed_options()); });
  CHECK(e.code() == Errc::FirstCommentToxic);
  CHECK(e.step() == "prefix");

  ScriptedMock strict({{"Conversation Transcript", "\"summary\""}, {"", "I think 0.7"}});
  auto opts = fixed_options();
  opts.parse_mode = ParseMode::Strict;
  e = error_of([&] { predict(thread, ScdStrategy::GenericScd, strict, opts); });
  CHECK(e.code() == Errc::ParseFailure);
}

TEST_CASE("long prefixes are truncated to fit the context") {
  auto thread = make_thread("a/b", 9, 60);
  for (auto& c : thread.comments) c.body = std::string(400, 'w');
  ScriptedMock mock({{"Conversation Transcript", "\"summary\""}, {"", "0.2"}}, ScriptedMock::Mode::Reuse);
  auto opts = fixed_options();
  opts.max_context_tokens = 4000;
  const auto p = predict(thread, ScdStrategy::LeastToMostScd, mock, opts);
  CHECK(p.elided_comments > 0);
  CHECK(p.prefix_comments == 60);
  CHECK(estimate_tokens(p.scd_prompt) <= 4000);
}

TEST_CASE("bot comments can be dropped") {
  CHECK(is_bot_handle("dependabot[bot]"));
  CHECK_FALSE(is_bot_handle("robot"));
  auto thread = make_thread("a/b", 3, 4);
  thread.comments[1].author_handle = "ci-runner[bot]";
  thread.comments[1].body = "Build passed";
  ScriptedMock mock({{"Conversation Transcript", "\"summary\""}, {"", "0.3"}}, ScriptedMock::Mode::Reuse);
  auto opts = fixed_options();
  opts.drop_bot_comments = true;
  const auto p = predict(thread, ScdStrategy::GenericScd, mock, opts);
  CHECK(p.scd_prompt.find("Build passed") == std::string::npos);
  opts.drop_bot_comments = false;
  CHECK(predict(thread, ScdStrategy::GenericScd, mock, opts).scd_prompt.find("Build passed") != std::string::npos);
}

TEST_CASE("score_corpus keeps input order and records failures") {
  std::vector<ConversationThread> threads;
  std::vector<ScriptEntry> script;
  for (int i = 1; i <= 6; ++i) {
    auto t = make_thread("a/b", i, 3);
    t.comments[0].body = "marker" + std::to_string(i) + "!";
    threads.push_back(t);
    script.push_back({"marker" + std::to_string(i) + "!", "\"Summary " + std::to_string(i) + ".\""});
    script.push_back({"Summary " + std::to_string(i) + ".", i == 4 ? "no idea" : "0." + std::to_string(i)});
  }
  threads.push_back(make_thread("a/b", 99, 2, {0}));

  ScriptedMock mock(script);
  const auto outcomes = score_corpus(threads, ScdStrategy::FewShotScd, mock, fixed_options(), 3);
  REQUIRE(outcomes.size() == 7);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(outcomes[i].thread_ref.number == static_cast<std::int64_t>(i + 1));
    CHECK(outcomes[i].strategy == ScdStrategy::FewShotScd);
  }
  CHECK(outcomes[0].prediction->probability == 0.1);
  CHECK(outcomes[5].prediction->probability == 0.6);
  REQUIRE(outcomes[3].failure);
  CHECK(outcomes[3].failure->code == Errc::ParseFailure);
  CHECK(outcomes[3].failure->step == "predict");
  CHECK(outcomes[6].failure->code == Errc::FirstCommentToxic);
}

TEST_CASE("predictions JSONL round-trip") {
  const auto thread = make_thread("a/b", 7, 5, {3});
  ScriptedMock mock({{"Conversation Transcript", "\"s\""}, {"", "0.85"}, {"", "0.5"}});
  std::vector<PredictionOutcome> outcomes;
  outcomes.push_back({thread.ref(), ScdStrategy::LeastToMostScd,
                      predict(thread, ScdStrategy::LeastToMostScd, mock, fixed_options()), std::nullopt});
  outcomes.push_back({ThreadRef{"a/b", 8}, ScdStrategy::GenericScd, std::nullopt,
                      PredictionFailure{Errc::ScriptExhausted, "scd", "no scripted response"}});

  const std::string text = serialize_predictions(outcomes);
  CHECK(parse_predictions(text) == outcomes);
  CHECK(serialize_predictions(parse_predictions(text)) == text);

  const json first = json::parse(text.substr(0, text.find('\n')));
  CHECK(first["status"] == "ok");
  CHECK(first["probability"] == 0.85);
  CHECK(first["strategy"] == "least_to_most_scd");
  CHECK(first["created_at"] == "2024-07-01T00:00:00Z");
  const json second = json::parse(text.substr(text.find('\n') + 1));
  CHECK(second["status"] == "error");
  CHECK(second["error"]["step"] == "scd");
  CHECK(second["error"]["code"] == "script_exhausted");

  const auto dir = temp_dir("pred");
  save_predictions(outcomes, dir / "p.jsonl");
  CHECK(load_predictions(dir / "p.jsonl") == outcomes);
  std::filesystem::remove_all(dir);
}
