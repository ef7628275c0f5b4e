#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "derail/corpus.hpp"
#include "derail/error.hpp"
#include "derail/llm.hpp"
#include "derail/prompts.hpp"
#include "derail/timeutil.hpp"

namespace derail {

struct DerailmentPrediction {
  ThreadRef thread_ref;
  ScdStrategy strategy = ScdStrategy::LeastToMostScd;
  std::string scd_summary;
  double probability = 0.0;
  std::string template_version{kTemplateVersion};
  Timestamp created_at{};
  std::string model;

  std::size_t prefix_comments = 0;   // comments before the first toxic one
  std::size_t elided_comments = 0;   // dropped by truncation
  std::string scd_prompt;
  std::string scd_raw_output;
  std::string predictor_prompt;
  std::string predictor_raw_output;

  bool operator==(const DerailmentPrediction&) const = default;
};

enum class InterventionAction { NoAction, BotReminder, ModeratorAlert };

inline constexpr std::array<InterventionAction, 3> kAllActions = {
    InterventionAction::NoAction, InterventionAction::BotReminder, InterventionAction::ModeratorAlert};

std::string_view to_string(InterventionAction a);
InterventionAction parse_action(std::string_view s);

struct InterventionPolicy {
  double low_threshold = 0.4;
  double high_threshold = 0.6;

  /// Errc::InvalidArgument unless 0 <= low < high <= 1.
  void validate() const;
};

/// probability >= threshold.
bool classify(double probability, double threshold);

/// [0, low) NoAction, [low, high) BotReminder, [high, 1] ModeratorAlert.
InterventionAction recommend_action(double probability, const InterventionPolicy& policy);

/// Token cost charged per comment by truncate_transcript on top of its body.
inline constexpr std::size_t kPerCommentTokenOverhead = 10;

struct TruncatedPrefix {
  std::vector<Comment> comments;
  std::size_t elided = 0;
};

/// Keeps comments[0] and the longest run of most recent comments that fits
/// `budget_tokens`, each comment costing estimate_tokens(body) plus
/// kPerCommentTokenOverhead. Errc::ContextOverflow when comments[0] alone
/// does not fit; Errc::InvalidArgument for a zero budget.
TruncatedPrefix truncate_transcript(std::span<const Comment> prefix, std::size_t budget_tokens);

/// True for automation accounts ("name[bot]").
bool is_bot_handle(std::string_view handle);

struct PredictOptions {
  Clock clock = system_clock();
  bool drop_bot_comments = false;
  std::string model_name;  // empty: the gateway's model
  std::size_t max_context_tokens = 8192;
  PromptOptions prompt;
  ParseMode parse_mode = ParseMode::Lenient;
};

/// Renders the prefix before the first toxic comment, asks the gateway for a
/// summary of conversation dynamics, strips the surrounding double quotes,
/// then asks for a derailment probability. Failures carry step "scd" or
/// "predict".
DerailmentPrediction predict(const ConversationThread& thread, ScdStrategy strategy, Gateway& gateway,
                             const PredictOptions& options = {});

/// Removes one pair of matching surrounding double quotes (straight or curly)
/// after trimming whitespace.
std::string strip_surrounding_quotes(std::string_view text);

struct PredictionFailure {
  Errc code = Errc::InvalidArgument;
  std::string step;
  std::string message;

  bool operator==(const PredictionFailure&) const = default;
};

/// One line of a predictions file: a prediction or the reason there is none.
struct PredictionOutcome {
  ThreadRef thread_ref;
  ScdStrategy strategy = ScdStrategy::LeastToMostScd;
  std::optional<DerailmentPrediction> prediction;
  std::optional<PredictionFailure> failure;

  bool operator==(const PredictionOutcome&) const = default;
};

/// Scores every thread, in input order. Per-thread failures become outcomes
/// with `failure` set. Up to `parallelism` threads are in flight.
std::vector<PredictionOutcome> score_corpus(std::span<const ConversationThread> threads, ScdStrategy strategy,
                                            Gateway& gateway, const PredictOptions& options = {},
                                            std::size_t parallelism = 1);

json to_json(const DerailmentPrediction& p);
DerailmentPrediction prediction_from_json(const json& j);
json to_json(const PredictionOutcome& o);
PredictionOutcome outcome_from_json(const json& j);

std::string serialize_predictions(std::span<const PredictionOutcome> outcomes);
std::vector<PredictionOutcome> parse_predictions(std::string_view text);
void save_predictions(std::span<const PredictionOutcome> outcomes, const std::filesystem::path& path);
std::vector<PredictionOutcome> load_predictions(const std::filesystem::path& path);

}  // namespace derail
