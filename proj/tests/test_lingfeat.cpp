#include <doctest.h>

#include <map>

#include "derail/error.hpp"
#include "derail/lingfeat.hpp"
#include "support.hpp"

using namespace derail;
using namespace derail::test;

using Tokens = std::vector<std::string>;

TEST_CASE("tokenize_lemmatize") {
  CHECK(tokenize_lemmatize("You're saying THIS failed?") == Tokens{"you", "be", "say", "this", "fail"});
  CHECK(tokenize_lemmatize("").empty());
  CHECK(tokenize_lemmatize("```rm -rf /``` done") == Tokens{"do"});
  CHECK(tokenize_lemmatize("see https://example.com/x?y=1 and `git push`") == Tokens{"see", "and"});
  CHECK(tokenize("don't") == Tokens{"do", "n't"});
  CHECK(tokenize_lemmatize("It's broken") == Tokens{"it", "be", "break"});
}

TEST_CASE("lemmatize") {
  CHECK(lemmatize("said") == "say");
  CHECK(lemmatize("asking") == "ask");
  CHECK(lemmatize("tried") == "try");
  CHECK(lemmatize("was") == "be");
  CHECK(lemmatize("n't") == "n't");
  CHECK(lemmatize("issues") == "issue");
  CHECK(lemmatize("this") == "this");
}

TEST_CASE("extract_features") {
  const auto lex = LexiconSet::defaults();
  CHECK_NOTHROW(lex.validate());

  auto f = extract_features("Why don't you just read the docs?", lex);
  CHECK(f.has_wh);
  CHECK(f.has_negation);
  CHECK(f.has_second_person);
  CHECK_FALSE(f.has_first_person);

  f = extract_features("I said this because it matters, really.", lex);
  CHECK(f.has_first_person);
  CHECK(f.has_comm_verb);
  CHECK(f.has_reasoning);
  CHECK(f.has_emphasis);

  f = extract_features("LGTM", lex);
  for (Cue c : kAllCues) CHECK_FALSE(f.has(c));
  CHECK(f.mentions.empty());
  CHECK_FALSE(f.has_quote);
  CHECK(f.token_count == 1);
}

TEST_CASE("detect_mentions") {
  CHECK(detect_mentions("thanks @alice and @bob-2") == Tokens{"alice", "bob-2"});
  CHECK(detect_mentions("mail me a@b.com").empty());
  CHECK(detect_mentions("`@notme` in code").empty());
  CHECK(detect_mentions("@Alice then @alice again") == Tokens{"Alice"});
  CHECK(detect_mentions("```\n@inside\n```\n@outside") == Tokens{"outside"});
}

TEST_CASE("detect_quote") {
  CHECK(detect_quote("> you said X\nno I didn't"));
  CHECK_FALSE(detect_quote("5 > 3 holds"));
  CHECK_FALSE(detect_quote("```\n> inside code\n```"));
  CHECK(detect_quote("intro\n  > indented quote"));
}

TEST_CASE("top_unigrams and trigrams") {
  // Counts by hand after lemmatization and removing the default exclusions:
  // cache 3, build 2, break 2, fix 1, it 1, please 1, the -> excluded.
  const std::vector<std::string> bodies = {"The cache broke the build.", "Please fix the cache.",
                                           "It breaks the cache build."};
  const auto top = top_unigrams(bodies, 3);
  CHECK(top == std::vector<RankedTerm>{{"cache", 3}, {"break", 2}, {"build", 2}});

  const auto all = top_unigrams(bodies, 200);
  CHECK(all.size() == 6);
  CHECK(all.back() == RankedTerm{"please", 1});

  CHECK(trigrams("two words").empty());
  CHECK(trigrams("you want to") == std::vector<RankedTerm>{{"you want to", 1}});
  const std::vector<std::string> tri_bodies = {"you want to fix it", "do you want to"};
  const auto tri = top_trigrams(tri_bodies, 2);
  REQUIRE(tri.size() == 2);
  CHECK(tri[0] == RankedTerm{"you want to", 2});
}

TEST_CASE("lexicon files") {
  const auto parsed = parse_word_list("# comment\nyou\n\n  your  # trailing\n");
  CHECK(parsed == WordSet{"you", "your"});

  const auto dir = temp_dir("lex");
  {
    std::ofstream(dir / "emphasis.txt") << "totally\n";
  }
  const auto lex = LexiconSet::load(dir);
  CHECK(lex.emphasis == WordSet{"totally"});
  CHECK(lex.second_person == LexiconSet::defaults().second_person);
  std::filesystem::remove_all(dir);

  LexiconSet bad = LexiconSet::defaults();
  bad.negation.insert("Not");
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = LexiconSet::defaults();
  bad.reasoning.clear();
  CHECK_THROWS_AS(bad.validate(), Error);
}
