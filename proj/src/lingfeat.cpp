#include "derail/lingfeat.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "derail/error.hpp"
#include "resources.hpp"
#include "utf8.hpp"

namespace derail {
namespace {

constexpr std::array<std::pair<Cue, std::string_view>, 7> kCueFiles{{
    {Cue::SecondPerson, "second_person"},
    {Cue::FirstPerson, "first_person"},
    {Cue::WhQuestion, "wh_question"},
    {Cue::Negation, "negation"},
    {Cue::Reasoning, "reasoning"},
    {Cue::Emphasis, "emphasis"},
    {Cue::CommunicationVerb, "communication_verbs"},
}};

// ---------------------------------------------------------------------------
// Markdown handling

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (true) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(pos));
      break;
    }
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

struct Fence {
  char marker = 0;
  std::size_t length = 0;
};

// A line opens (or closes) a fence when, after at most three spaces, it starts
// with three or more backticks or tildes. A backtick fence may not carry
// further backticks on its line, so "```code``` text" is an inline span.
std::optional<Fence> fence_marker(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && i < 3 && line[i] == ' ') ++i;
  if (i >= line.size() || (line[i] != '`' && line[i] != '~')) return std::nullopt;
  const char marker = line[i];
  std::size_t run = 0;
  while (i + run < line.size() && line[i + run] == marker) ++run;
  if (run < 3) return std::nullopt;
  if (marker == '`' && line.substr(i + run).find('`') != std::string_view::npos) return std::nullopt;
  return Fence{marker, run};
}

bool closes(const Fence& open, std::string_view line) {
  auto f = fence_marker(line);
  if (!f || f->marker != open.marker || f->length < open.length) return false;
  const std::size_t end = line.find_first_not_of(' ', line.find(std::string(f->length, f->marker)) + f->length);
  return end == std::string_view::npos || line[end] == '\r';
}

// Calls `visit(line)` for every line outside fenced code blocks.
template <typename F>
void for_each_prose_line(std::string_view body, F&& visit) {
  std::optional<Fence> open;
  for (std::string_view line : split_lines(body)) {
    if (open) {
      if (closes(*open, line)) open.reset();
      continue;
    }
    if (auto f = fence_marker(line)) {
      open = f;
      continue;
    }
    visit(line);
  }
}

std::string remove_inline_code(std::string_view line) {
  std::string out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] != '`') {
      out.push_back(line[i++]);
      continue;
    }
    std::size_t run = 0;
    while (i + run < line.size() && line[i + run] == '`') ++run;
    // find a closing run of exactly the same length
    std::size_t j = i + run;
    std::size_t close = std::string_view::npos;
    while (j < line.size()) {
      if (line[j] != '`') {
        ++j;
        continue;
      }
      std::size_t r = 0;
      while (j + r < line.size() && line[j + r] == '`') ++r;
      if (r == run) {
        close = j;
        break;
      }
      j += r;
    }
    if (close == std::string_view::npos) {
      out.append(line.substr(i, run));
      i += run;
    } else {
      out.push_back(' ');
      i = close + run;
    }
  }
  return out;
}

bool starts_with_ci(std::string_view s, std::size_t pos, std::string_view prefix) {
  if (pos + prefix.size() > s.size()) return false;
  for (std::size_t k = 0; k < prefix.size(); ++k) {
    if (std::tolower(static_cast<unsigned char>(s[pos + k])) != prefix[k]) return false;
  }
  return true;
}

std::string remove_urls(std::string_view line) {
  std::string out;
  std::size_t i = 0;
  while (i < line.size()) {
    const bool at_word_start = i == 0 || !std::isalnum(static_cast<unsigned char>(line[i - 1]));
    if (at_word_start && (starts_with_ci(line, i, "http://") || starts_with_ci(line, i, "https://") ||
                          starts_with_ci(line, i, "www."))) {
      while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) && line[i] != ')' &&
             line[i] != '>' && line[i] != ']') {
        ++i;
      }
      out.push_back(' ');
      continue;
    }
    out.push_back(line[i++]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tokenization

bool is_word_cp(char32_t cp) {
  if (cp < 0x80) return std::isalnum(static_cast<int>(cp)) != 0;
  return detail::is_non_ascii_letter(cp);
}

bool is_apostrophe(char32_t cp) { return cp == '\'' || cp == 0x2019 || cp == 0x2018; }

constexpr std::array<std::string_view, 6> kClitics = {"'re", "'ve", "'ll", "'m", "'d", "'s"};

void emit_word(std::string word, std::vector<std::string>& out) {
  while (!word.empty() && word.front() == '\'') word.erase(word.begin());
  while (!word.empty() && word.back() == '\'') word.pop_back();
  if (word.empty()) return;
  if (word.size() > 3 && word.compare(word.size() - 3, 3, "n't") == 0) {
    out.push_back(word.substr(0, word.size() - 3));
    out.emplace_back("n't");
    return;
  }
  for (std::string_view clitic : kClitics) {
    if (word.size() > clitic.size() && word.compare(word.size() - clitic.size(), clitic.size(), clitic) == 0) {
      out.push_back(word.substr(0, word.size() - clitic.size()));
      out.emplace_back(clitic);
      return;
    }
  }
  out.push_back(std::move(word));
}

// ---------------------------------------------------------------------------
// Lemmatization

const std::unordered_map<std::string_view, std::string_view>& irregular_lemmas() {
  static const std::unordered_map<std::string_view, std::string_view> table{
      // copulas and auxiliaries
      {"am", "be"}, {"is", "be"}, {"are", "be"}, {"was", "be"}, {"were", "be"}, {"been", "be"},
      {"being", "be"}, {"'m", "be"}, {"'re", "be"}, {"'s", "be"}, {"'ve", "have"}, {"'ll", "will"},
      {"'d", "would"}, {"has", "have"}, {"had", "have"}, {"having", "have"}, {"does", "do"},
      {"did", "do"}, {"done", "do"}, {"doing", "do"}, {"ca", "can"}, {"wo", "will"}, {"sha", "shall"},
      // pronoun variants folded onto the lexicon forms
      {"thee", "you"}, {"ya", "you"}, {"u", "you"}, {"ur", "your"},
      // irregular verbs
      {"said", "say"}, {"says", "say"}, {"told", "tell"}, {"wrote", "write"}, {"written", "write"},
      {"went", "go"}, {"gone", "go"}, {"goes", "go"}, {"saw", "see"}, {"seen", "see"},
      {"made", "make"}, {"got", "get"}, {"gotten", "get"}, {"thought", "think"}, {"knew", "know"},
      {"known", "know"}, {"took", "take"}, {"taken", "take"}, {"came", "come"}, {"gave", "give"},
      {"given", "give"}, {"found", "find"}, {"ran", "run"}, {"began", "begin"}, {"begun", "begin"},
      {"kept", "keep"}, {"left", "leave"}, {"meant", "mean"}, {"felt", "feel"}, {"brought", "bring"},
      {"built", "build"}, {"sent", "send"}, {"spent", "spend"}, {"broke", "break"}, {"broken", "break"},
      {"chose", "choose"}, {"chosen", "choose"}, {"forgot", "forget"}, {"forgotten", "forget"},
      {"understood", "understand"}, {"stood", "stand"}, {"held", "hold"}, {"lost", "lose"},
      {"paid", "pay"}, {"met", "meet"}, {"led", "lead"}, {"taught", "teach"}, {"bought", "buy"},
      {"caught", "catch"}, {"fought", "fight"}, {"sought", "seek"}, {"spoke", "speak"},
      {"spoken", "speak"}, {"threw", "throw"}, {"thrown", "throw"}, {"grew", "grow"}, {"grown", "grow"},
      {"drew", "draw"}, {"drawn", "draw"}, {"wore", "wear"}, {"worn", "wear"}, {"hid", "hide"},
      {"hidden", "hide"}, {"used", "use"}, {"using", "use"}, {"agreed", "agree"},
      // irregular plurals
      {"children", "child"}, {"men", "man"}, {"women", "woman"}, {"feet", "foot"}, {"mice", "mouse"},
      {"indices", "index"}, {"matrices", "matrix"}, {"people", "people"},
  };
  return table;
}

const WordSet& protected_words() {
  static const WordSet words{
      "yours", "ours", "theirs", "hers", "its", "his", "this", "thus", "us", "yes", "always", "perhaps",
      "news", "series", "species", "whereas", "nothing", "something", "anything", "everything",
      "during", "morning", "evening", "ceiling", "embed", "hundred", "sacred", "naked", "wicked",
      "kindred", "themselves", "ourselves", "yourselves", "sometimes", "afterwards", "lens", "canvas",
      "alias", "atlas", "chaos", "bias", "gas", "bus", "plus", "minus", "christmas", "ios", "macos",
      "windows", "kubernetes", "pandas", "jenkins", "redis", "postgres", "aws", "https", "css",
  };
  return words;
}

bool is_vowel_at(std::string_view w, std::size_t i) {
  switch (w[i]) {
    case 'a': case 'e': case 'i': case 'o': case 'u': return true;
    case 'y': return i > 0 && !is_vowel_at(w, i - 1);
    default: return false;
  }
}

bool has_vowel(std::string_view w) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (is_vowel_at(w, i)) return true;
  }
  return false;
}

// Porter's measure: number of vowel-consonant sequences.
int measure(std::string_view w) {
  int m = 0;
  bool prev_vowel = false;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const bool v = is_vowel_at(w, i);
    if (prev_vowel && !v) ++m;
    prev_vowel = v;
  }
  return m;
}

bool ends_cvc(std::string_view w) {
  const std::size_t n = w.size();
  if (n < 3) return false;
  if (is_vowel_at(w, n - 3) || !is_vowel_at(w, n - 2) || is_vowel_at(w, n - 1)) return false;
  const char last = w[n - 1];
  return last != 'w' && last != 'x' && last != 'y';
}

bool ascii_word(std::string_view w) {
  return std::all_of(w.begin(), w.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

bool ends_with(std::string_view w, std::string_view suffix) {
  return w.size() >= suffix.size() && w.compare(w.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Repairs a stem after removing -ed/-ing: undoubles a final double consonant
// ("stopp" -> "stop") or restores a silent e ("writ" -> "write").
std::string repair_stem(std::string stem) {
  const std::size_t n = stem.size();
  if (n >= 4 && stem[n - 1] == stem[n - 2] && !is_vowel_at(stem, n - 1) && stem[n - 1] != 'l' &&
      stem[n - 1] != 's' && stem[n - 1] != 'z') {
    stem.pop_back();
    return stem;
  }
  if (measure(stem) == 1 && ends_cvc(stem)) stem.push_back('e');
  return stem;
}

}  // namespace

std::string_view to_string(Cue cue) {
  for (const auto& [c, name] : kCueFiles) {
    if (c == cue) return name;
  }
  return "unknown";
}

const WordSet& LexiconSet::words(Cue cue) const {
  switch (cue) {
    case Cue::SecondPerson: return second_person;
    case Cue::FirstPerson: return first_person;
    case Cue::WhQuestion: return wh_question;
    case Cue::Negation: return negation;
    case Cue::Reasoning: return reasoning;
    case Cue::Emphasis: return emphasis;
    case Cue::CommunicationVerb: return communication_verbs;
  }
  throw Error(Errc::InvalidArgument, "unknown cue");
}

WordSet& LexiconSet::words(Cue cue) {
  return const_cast<WordSet&>(std::as_const(*this).words(cue));
}

void LexiconSet::validate() const {
  for (Cue cue : kAllCues) {
    const auto& set = words(cue);
    if (set.empty()) {
      throw Error(Errc::InvalidArgument, "lexicon " + std::string(to_string(cue)) + " is empty");
    }
    for (const auto& w : set) {
      if (std::any_of(w.begin(), w.end(), [](unsigned char c) { return std::isupper(c); })) {
        throw Error(Errc::InvalidArgument,
                    "lexicon " + std::string(to_string(cue)) + " entry \"" + w + "\" is not lowercase");
      }
      if (lemmatize(w) != w) {
        throw Error(Errc::InvalidArgument, "lexicon " + std::string(to_string(cue)) + " entry \"" + w +
                                               "\" is not in lemma form (lemma: \"" + lemmatize(w) + "\")");
      }
    }
  }
}

WordSet parse_word_list(std::string_view text) {
  WordSet words;
  for (std::string_view line : split_lines(text)) {
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    std::string w(line.substr(b, e - b + 1));
    std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    words.insert(std::move(w));
  }
  return words;
}

LexiconSet LexiconSet::defaults() {
  static const LexiconSet cached = [] {
    LexiconSet s;
    for (const auto& [cue, name] : kCueFiles) {
      s.words(cue) = parse_word_list(
          resources::get(resources::table_lexicons(), "lexicons/" + std::string(name) + ".txt"));
    }
    s.validate();
    return s;
  }();
  return cached;
}

LexiconSet LexiconSet::load(const std::filesystem::path& dir) {
  LexiconSet s = defaults();
  for (const auto& [cue, name] : kCueFiles) {
    const auto file = dir / (std::string(name) + ".txt");
    if (!std::filesystem::exists(file)) continue;
    std::ifstream in(file);
    if (!in) throw Error(Errc::Io, "cannot read lexicon " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    s.words(cue) = parse_word_list(buf.str());
  }
  s.validate();
  return s;
}

const WordSet& default_unigram_exclusions() {
  static const WordSet words =
      parse_word_list(resources::get(resources::table_lexicons(), "lexicons/unigram_exclusions.txt"));
  return words;
}

std::string strip_code_and_urls(std::string_view body) {
  std::string out;
  bool first = true;
  std::optional<Fence> open;
  for (std::string_view line : split_lines(body)) {
    if (!first) out.push_back('\n');
    first = false;
    if (open) {
      if (closes(*open, line)) open.reset();
      continue;
    }
    if (auto f = fence_marker(line)) {
      open = f;
      continue;
    }
    out += remove_urls(remove_inline_code(line));
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string word;
  for (std::size_t i = 0; i < text.size();) {
    const char32_t cp = detail::next_code_point(text, i);
    if (is_word_cp(cp)) {
      detail::append_utf8(word, detail::to_lower(cp));
    } else if (is_apostrophe(cp) && !word.empty()) {
      word.push_back('\'');
    } else {
      emit_word(std::move(word), tokens);
      word.clear();
    }
  }
  emit_word(std::move(word), tokens);
  return tokens;
}

std::string lemmatize(std::string_view token) {
  if (auto it = irregular_lemmas().find(token); it != irregular_lemmas().end()) return std::string(it->second);
  std::string w(token);
  if (!ascii_word(w) || protected_words().count(w)) return w;
  const std::size_t n = w.size();

  if (ends_with(w, "ing")) {
    if (n >= 5 && has_vowel(w.substr(0, n - 3))) return repair_stem(w.substr(0, n - 3));
    return w;
  }
  if (ends_with(w, "ied") && n >= 5) return w.substr(0, n - 3) + "y";
  if (ends_with(w, "eed")) return w;
  if (ends_with(w, "ed")) {
    if (n >= 5 && has_vowel(w.substr(0, n - 2))) return repair_stem(w.substr(0, n - 2));
    return w;
  }
  if (ends_with(w, "ies") && n >= 5) return w.substr(0, n - 3) + "y";
  if (ends_with(w, "sses")) return w.substr(0, n - 2);
  if (ends_with(w, "ches") || ends_with(w, "shes") || ends_with(w, "xes") || ends_with(w, "zes")) {
    return w.substr(0, n - 2);
  }
  if (ends_with(w, "ss") || ends_with(w, "us") || ends_with(w, "is")) return w;
  if (ends_with(w, "s") && n >= 4) return w.substr(0, n - 1);
  return w;
}

std::vector<std::string> tokenize_lemmatize(std::string_view body) {
  std::vector<std::string> out;
  for (const auto& t : tokenize(strip_code_and_urls(body))) out.push_back(lemmatize(t));
  return out;
}

bool FeatureVector::has(Cue cue) const {
  switch (cue) {
    case Cue::SecondPerson: return has_second_person;
    case Cue::FirstPerson: return has_first_person;
    case Cue::WhQuestion: return has_wh;
    case Cue::Negation: return has_negation;
    case Cue::Reasoning: return has_reasoning;
    case Cue::Emphasis: return has_emphasis;
    case Cue::CommunicationVerb: return has_comm_verb;
  }
  return false;
}

FeatureVector extract_features(std::string_view body, const LexiconSet& lexicons) {
  FeatureVector f;
  const auto lemmas = tokenize_lemmatize(body);
  f.token_count = lemmas.size();
  auto any_in = [&](const WordSet& set) {
    return std::any_of(lemmas.begin(), lemmas.end(), [&](const std::string& l) { return set.count(l) > 0; });
  };
  f.has_second_person = any_in(lexicons.second_person);
  f.has_first_person = any_in(lexicons.first_person);
  f.has_wh = any_in(lexicons.wh_question);
  f.has_negation = any_in(lexicons.negation);
  f.has_reasoning = any_in(lexicons.reasoning);
  f.has_emphasis = any_in(lexicons.emphasis);
  f.has_comm_verb = any_in(lexicons.communication_verbs);
  f.mentions = detect_mentions(body);
  f.has_quote = detect_quote(body);
  return f;
}

FeatureVector extract_features(const Comment& comment, const LexiconSet& lexicons) {
  return extract_features(comment.body, lexicons);
}

std::vector<std::string> detect_mentions(std::string_view body) {
  const std::string text = strip_code_and_urls(body);
  std::vector<std::string> handles;
  std::set<std::string> seen;
  auto handle_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '-'; };
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '@') continue;
    if (i > 0) {
      const char prev = text[i - 1];
      if (std::isalnum(static_cast<unsigned char>(prev)) || prev == '.' || prev == '_' || prev == '-' ||
          prev == '+' || prev == '/' || prev == '@' || static_cast<unsigned char>(prev) >= 0x80) {
        continue;
      }
    }
    std::size_t j = i + 1;
    while (j < text.size() && handle_char(text[j])) ++j;
    std::string handle = text.substr(i + 1, j - i - 1);
    while (!handle.empty() && handle.back() == '-') handle.pop_back();
    if (handle.empty() || handle.front() == '-' || handle.size() > 39) continue;
    if (handle.find("--") != std::string::npos) continue;
    if (j < text.size() && (text[j] == '@' || text[j] == '_')) continue;
    std::string key = handle;
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (seen.insert(key).second) handles.push_back(std::move(handle));
  }
  return handles;
}

bool detect_quote(std::string_view body) {
  bool found = false;
  for_each_prose_line(body, [&](std::string_view line) {
    std::size_t i = 0;
    while (i < line.size() && i < 3 && line[i] == ' ') ++i;
    if (i < line.size() && line[i] == '>') found = true;
  });
  return found;
}

namespace {

std::vector<RankedTerm> rank(const std::map<std::string, std::size_t>& counts, std::size_t n) {
  std::vector<RankedTerm> ranked;
  ranked.reserve(counts.size());
  for (const auto& [term, count] : counts) ranked.push_back({term, count});
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedTerm& a, const RankedTerm& b) { return a.count > b.count; });
  if (ranked.size() > n) ranked.resize(n);
  return ranked;
}

void count_trigrams(std::string_view body, std::map<std::string, std::size_t>& counts) {
  const auto lemmas = tokenize_lemmatize(body);
  for (std::size_t i = 0; i + 2 < lemmas.size(); ++i) {
    ++counts[lemmas[i] + ' ' + lemmas[i + 1] + ' ' + lemmas[i + 2]];
  }
}

}  // namespace

std::vector<RankedTerm> top_unigrams(std::span<const std::string> bodies, std::size_t n, const WordSet& exclusions) {
  std::map<std::string, std::size_t> counts;
  for (const auto& body : bodies) {
    for (auto& lemma : tokenize_lemmatize(body)) {
      if (!exclusions.count(lemma)) ++counts[std::move(lemma)];
    }
  }
  return rank(counts, n);
}

std::vector<RankedTerm> trigrams(std::string_view body) {
  std::map<std::string, std::size_t> counts;
  count_trigrams(body, counts);
  return rank(counts, counts.size());
}

std::vector<RankedTerm> top_trigrams(std::span<const std::string> bodies, std::size_t n) {
  std::map<std::string, std::size_t> counts;
  for (const auto& body : bodies) count_trigrams(body, counts);
  return rank(counts, n);
}

}  // namespace derail
