#include "derail/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "derail/error.hpp"
#include "enum_names.hpp"
#include "resources.hpp"

namespace derail {
namespace {

constexpr detail::NameTable<ScdStrategy, 3> kStrategyNames{{
    {ScdStrategy::GenericScd, "generic_scd"},
    {ScdStrategy::FewShotScd, "few_shot_scd"},
    {ScdStrategy::LeastToMostScd, "least_to_most_scd"},
}};

constexpr detail::NameTable<ScdStrategy, 3> kStrategyShortNames{{
    {ScdStrategy::GenericScd, "generic"},
    {ScdStrategy::FewShotScd, "fewshot"},
    {ScdStrategy::LeastToMostScd, "ltm"},
}};

bool is_handle_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string clean_body(std::string_view body) {
  std::string out;
  out.reserve(body.size());
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] == '\r') {
      if (i + 1 < body.size() && body[i + 1] == '\n') continue;
      out.push_back('\n');
    } else {
      out.push_back(body[i]);
    }
  }
  const auto first = out.find_first_not_of(" \t\n");
  if (first == std::string::npos) return {};
  const auto last = out.find_last_not_of(" \t\n");
  return out.substr(first, last - first + 1);
}

// Replaces whole-word participant handles. `aliases` maps lowercase handle to
// "USERk" without the "@", so "@bob" keeps its "@".
std::string anonymize(std::string_view body, const std::map<std::string, std::string>& aliases) {
  std::string out;
  out.reserve(body.size());
  std::size_t i = 0;
  while (i < body.size()) {
    if (!is_handle_char(body[i])) {
      out.push_back(body[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < body.size() && is_handle_char(body[j])) ++j;
    const std::string_view word = body.substr(i, j - i);
    auto it = aliases.find(lower(word));
    if (it != aliases.end()) {
      out += it->second;
    } else {
      out += word;
    }
    i = j;
  }
  return out;
}

std::string_view role_label(const Comment& c) {
  return c.role() == AuthorRole::ProjectContributor ? "ProjectContributor" : "ExternalParticipant";
}

}  // namespace

std::string_view to_string(ScdStrategy s) { return detail::name_of(kStrategyNames, s); }
std::string_view short_name(ScdStrategy s) { return detail::name_of(kStrategyShortNames, s); }

ScdStrategy parse_strategy(std::string_view s) {
  const std::string key = detail::enum_key(s);
  for (const auto& [v, name] : kStrategyShortNames) {
    if (detail::enum_key(name) == key) return v;
  }
  return detail::parse_enum(kStrategyNames, s, "strategy");
}

RenderedTranscript render_transcript(std::span<const Comment> prefix) {
  if (prefix.empty()) throw Error(Errc::EmptyPrefix, "cannot render an empty conversation prefix");
  RenderedTranscript out;
  std::map<std::string, std::string> by_lower;  // lowercase handle -> "USERk"
  for (const auto& c : prefix) {
    const std::string key = lower(c.author_handle);
    if (by_lower.count(key)) continue;
    const std::string alias = "USER" + std::to_string(by_lower.size() + 1);
    by_lower.emplace(key, alias);
    out.alias_map.emplace(c.author_handle, "@" + alias);
  }
  for (const auto& c : prefix) {
    std::string entry = "@" + by_lower.at(lower(c.author_handle)) + " (" + std::string(role_label(c)) +
                        "): " + anonymize(clean_body(c.body), by_lower);
    if (!out.text.empty()) out.text += "\n\n";
    out.text += entry;
    out.entries.push_back(std::move(entry));
  }
  return out;
}

std::string_view template_text(const std::string& name) {
  return resources::get(resources::table_templates(), "templates/" + name);
}

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  std::set<std::string> used;
  std::size_t pos = 0;
  while (true) {
    const auto open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out += tmpl.substr(pos);
      break;
    }
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) throw Error(Errc::InvariantViolation, "unterminated template slot");
    const std::string key(tmpl.substr(open + 2, close - open - 2));
    auto it = values.find(key);
    if (it == values.end()) throw Error(Errc::InvariantViolation, "template slot has no value: " + key);
    out += tmpl.substr(pos, open - pos);
    out += it->second;
    used.insert(key);
    pos = close + 2;
  }
  for (const auto& [k, v] : values) {
    if (!used.count(k)) throw Error(Errc::InvariantViolation, "template has no slot for: " + k);
  }
  return out;
}

std::vector<std::string> few_shot_exemplars() {
  std::vector<std::string> out;
  std::istringstream in{std::string(template_text("scd_few_shot_exemplars.txt"))};
  std::string line, para;
  auto flush = [&] {
    if (!para.empty()) out.push_back(std::move(para));
    para.clear();
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') continue;
    if (line.find_first_not_of(" \t") == std::string::npos) {
      flush();
      continue;
    }
    if (!para.empty()) para += ' ';
    para += line;
  }
  flush();
  return out;
}

PromptBundle build_scd_prompt(ScdStrategy strategy, const RenderedTranscript& transcript,
                              const PromptOptions& options) {
  PromptBundle b;
  b.strategy = strategy;
  switch (strategy) {
    case ScdStrategy::LeastToMostScd:
      b.user_text = fill_template(template_text("scd_least_to_most.txt"), {{"transcript", transcript.text}});
      break;
    case ScdStrategy::GenericScd:
      b.user_text = fill_template(template_text("scd_generic.txt"), {{"transcript", transcript.text}});
      break;
    case ScdStrategy::FewShotScd: {
      const auto all = few_shot_exemplars();
      if (options.few_shot_exemplars == 0 || options.few_shot_exemplars > all.size()) {
        throw Error(Errc::InvalidArgument, "few_shot_exemplars must be between 1 and " + std::to_string(all.size()));
      }
      std::string exemplars;
      for (std::size_t i = 0; i < options.few_shot_exemplars; ++i) {
        if (i > 0) exemplars += "\n\n";
        exemplars += "Example " + std::to_string(i + 1) + ": \"" + all[i] + "\"";
      }
      b.user_text = fill_template(template_text("scd_few_shot.txt"),
                                  {{"exemplars", exemplars}, {"transcript", transcript.text}});
      break;
    }
  }
  return b;
}

PromptBundle build_predictor_prompt(std::string_view scd_summary) {
  if (scd_summary.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw Error(Errc::EmptySummary, "SCD summary is empty");
  }
  PromptBundle b;
  b.user_text = fill_template(template_text("predictor.txt"), {{"summary", std::string(scd_summary)}});
  return b;
}

PromptBundle build_toxicity_annotation_prompt(const Comment& target, std::span<const Comment> context_prefix) {
  std::vector<Comment> all(context_prefix.begin(), context_prefix.end());
  if (all.empty() || !(all.back() == target)) all.push_back(target);
  const RenderedTranscript rendered = render_transcript(all);

  std::string context;
  if (rendered.entries.size() > 1) {
    context = "\nConversation so far:\n";
    for (std::size_t i = 0; i + 1 < rendered.entries.size(); ++i) {
      if (i > 0) context += "\n\n";
      context += rendered.entries[i];
    }
    context += "\n";
  }
  PromptBundle b;
  b.user_text = fill_template(template_text("toxicity_annotation.txt"),
                              {{"context", context}, {"comment", rendered.entries.back()}});
  return b;
}

}  // namespace derail
