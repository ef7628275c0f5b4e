#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "derail/corpus.hpp"

namespace derail {

enum class Cue {
  SecondPerson,
  FirstPerson,
  WhQuestion,
  Negation,
  Reasoning,
  Emphasis,
  CommunicationVerb,
};

inline constexpr std::array<Cue, 7> kAllCues = {
    Cue::SecondPerson, Cue::FirstPerson, Cue::WhQuestion,        Cue::Negation,
    Cue::Reasoning,    Cue::Emphasis,    Cue::CommunicationVerb,
};

std::string_view to_string(Cue cue);

using WordSet = std::set<std::string, std::less<>>;

/// Cue word lists, one lowercase lemma per entry.
struct LexiconSet {
  WordSet second_person;
  WordSet first_person;
  WordSet wh_question;
  WordSet negation;
  WordSet reasoning;
  WordSet emphasis;
  WordSet communication_verbs;

  const WordSet& words(Cue cue) const;
  WordSet& words(Cue cue);

  /// Throws Errc::InvalidArgument when a set is empty or holds an entry that
  /// is not lowercase lemma form.
  void validate() const;

  /// The lexicons shipped with the library.
  static LexiconSet defaults();

  /// Reads "<category>.txt" files (second_person, first_person, wh_question,
  /// negation, reasoning, emphasis, communication_verbs) from `dir`. One lemma
  /// per line, "#" starts a comment. Missing files keep the default list.
  static LexiconSet load(const std::filesystem::path& dir);
};

/// Parses the lexicon file format.
WordSet parse_word_list(std::string_view text);

/// Articles, particles and prepositions dropped by top_unigrams.
const WordSet& default_unigram_exclusions();

/// Removes fenced code blocks, inline code spans and URLs. Line structure is
/// kept so blockquote markers stay line-initial.
std::string strip_code_and_urls(std::string_view body);

/// Lowercased word tokens with contractions split into clitics
/// ("don't" -> "do", "n't"; "you're" -> "you", "'re").
std::vector<std::string> tokenize(std::string_view text);

/// Shallow rule-based lemma for one lowercase token.
std::string lemmatize(std::string_view token);

/// strip_code_and_urls, tokenize, then lemmatize each token.
std::vector<std::string> tokenize_lemmatize(std::string_view body);

struct FeatureVector {
  bool has_second_person = false;
  bool has_first_person = false;
  bool has_wh = false;
  bool has_negation = false;
  bool has_reasoning = false;
  bool has_emphasis = false;
  bool has_comm_verb = false;
  std::vector<std::string> mentions;
  bool has_quote = false;
  std::size_t token_count = 0;

  bool has(Cue cue) const;
  bool operator==(const FeatureVector&) const = default;
};

FeatureVector extract_features(std::string_view body, const LexiconSet& lexicons);
FeatureVector extract_features(const Comment& comment, const LexiconSet& lexicons);

/// @handles outside code and e-mail addresses, in order of first appearance,
/// deduplicated case-insensitively.
std::vector<std::string> detect_mentions(std::string_view body);

/// True when a line outside fenced code starts with a ">" blockquote marker.
bool detect_quote(std::string_view body);

struct RankedTerm {
  std::string term;
  std::size_t count = 0;

  bool operator==(const RankedTerm&) const = default;
};

/// Most frequent lemmas over `bodies`, excluding `exclusions`. Ties are ordered
/// alphabetically; fewer than `n` entries when the vocabulary is smaller.
std::vector<RankedTerm> top_unigrams(std::span<const std::string> bodies, std::size_t n,
                                     const WordSet& exclusions = default_unigram_exclusions());

/// Lemma trigrams of one comment ("you want to"), ranked like top_unigrams.
std::vector<RankedTerm> trigrams(std::string_view body);

std::vector<RankedTerm> top_trigrams(std::span<const std::string> bodies, std::size_t n);

}  // namespace derail
