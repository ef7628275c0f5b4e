#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "derail/corpus.hpp"

namespace derail {

enum class ScdStrategy { GenericScd, FewShotScd, LeastToMostScd };

inline constexpr std::array<ScdStrategy, 3> kAllStrategies = {
    ScdStrategy::GenericScd,
    ScdStrategy::FewShotScd,
    ScdStrategy::LeastToMostScd,
};

std::string_view to_string(ScdStrategy s);
/// Accepts the enum names plus the CLI short forms ltm, fewshot, generic.
ScdStrategy parse_strategy(std::string_view s);
/// CLI short form: ltm, fewshot, generic.
std::string_view short_name(ScdStrategy s);

/// Bumped whenever any file under templates/ changes.
inline constexpr std::string_view kTemplateVersion = "1.0.0";

struct RenderedTranscript {
  std::string text;
  // Participant handle (as first seen) to "@USERk".
  std::map<std::string, std::string> alias_map;
  // One rendered entry per comment, same order as the input.
  std::vector<std::string> entries;
};

/// "@USERk (Role): body" per comment, entries separated by a blank line.
/// Aliases follow first appearance. Participant handles inside bodies are
/// replaced: "@bob" becomes "@USER2" and a bare "bob" becomes "USER2"
/// (case-insensitive, whole word). Other mentions are left as written.
/// Errc::EmptyPrefix when `prefix` is empty.
RenderedTranscript render_transcript(std::span<const Comment> prefix);

struct PromptBundle {
  std::optional<std::string> system_text;
  std::string user_text;
  std::optional<ScdStrategy> strategy;
  std::string template_version{kTemplateVersion};
};

struct PromptOptions {
  std::size_t few_shot_exemplars = 2;
};

/// Exemplar summaries shipped for the few-shot strategy.
std::vector<std::string> few_shot_exemplars();

PromptBundle build_scd_prompt(ScdStrategy strategy, const RenderedTranscript& transcript,
                              const PromptOptions& options = {});

/// Errc::EmptySummary when the summary is blank.
PromptBundle build_predictor_prompt(std::string_view scd_summary);

/// Binary toxicity judgment for `target`. `context_prefix` holds the earlier
/// comments and may end with the target itself; empty means `target` opens the
/// conversation.
PromptBundle build_toxicity_annotation_prompt(const Comment& target, std::span<const Comment> context_prefix);

/// Template source by file name ("predictor.txt", ...).
std::string_view template_text(const std::string& name);

/// Replaces every "{{key}}" slot. Errc::InvariantViolation when the template
/// names a slot missing from `values` or a value is never used.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

}  // namespace derail
