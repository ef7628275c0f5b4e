#include "derail/predictor.hpp"

#include <atomic>
#include <thread>

#include "enum_names.hpp"
#include "json_util.hpp"

namespace derail {
namespace {

using detail::require;
using detail::require_int;
using detail::require_number;
using detail::require_string;

constexpr detail::NameTable<InterventionAction, 3> kActionNames{{
    {InterventionAction::NoAction, "no_action"},
    {InterventionAction::BotReminder, "bot_reminder"},
    {InterventionAction::ModeratorAlert, "moderator_alert"},
}};

std::size_t comment_cost(const Comment& c) { return estimate_tokens(c.body) + kPerCommentTokenOverhead; }

template <typename F>
auto in_step(const char* step, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (!e.step().empty()) throw;
    throw e.with_step(step);
  }
}

std::size_t size_field(const json& j, const std::string& key) {
  const auto v = require_int(j, key, "");
  if (v < 0) detail::schema_error(key, "must be non-negative");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::string_view to_string(InterventionAction a) { return detail::name_of(kActionNames, a); }
InterventionAction parse_action(std::string_view s) { return detail::parse_enum(kActionNames, s, "action"); }

void InterventionPolicy::validate() const {
  if (!(0.0 <= low_threshold && low_threshold < high_threshold && high_threshold <= 1.0)) {
    throw Error(Errc::InvalidArgument, "intervention policy needs 0 <= low < high <= 1");
  }
}

bool classify(double probability, double threshold) { return probability >= threshold; }

InterventionAction recommend_action(double probability, const InterventionPolicy& policy) {
  if (probability >= policy.high_threshold) return InterventionAction::ModeratorAlert;
  if (probability >= policy.low_threshold) return InterventionAction::BotReminder;
  return InterventionAction::NoAction;
}

TruncatedPrefix truncate_transcript(std::span<const Comment> prefix, std::size_t budget_tokens) {
  if (budget_tokens == 0) throw Error(Errc::InvalidArgument, "token budget must be positive");
  TruncatedPrefix out;
  if (prefix.empty()) return out;
  std::size_t used = comment_cost(prefix[0]);
  if (used > budget_tokens) {
    throw Error(Errc::ContextOverflow, "initiating post alone needs " + std::to_string(used) +
                                           " tokens, budget is " + std::to_string(budget_tokens));
  }
  std::size_t start = prefix.size();  // first retained index after comments[0]
  while (start > 1 && used + comment_cost(prefix[start - 1]) <= budget_tokens) {
    used += comment_cost(prefix[start - 1]);
    --start;
  }
  out.comments.push_back(prefix[0]);
  out.comments.insert(out.comments.end(), prefix.begin() + static_cast<std::ptrdiff_t>(start), prefix.end());
  out.elided = start - 1;
  return out;
}

bool is_bot_handle(std::string_view handle) {
  constexpr std::string_view kSuffix = "[bot]";
  return handle.size() > kSuffix.size() && handle.substr(handle.size() - kSuffix.size()) == kSuffix;
}

std::string strip_surrounding_quotes(std::string_view text) {
  auto trim = [](std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return std::string_view{};
    return s.substr(first, s.find_last_not_of(" \t\r\n") - first + 1);
  };
  std::string_view t = trim(text);
  constexpr std::string_view kOpen = "\xE2\x80\x9C";   // left double quotation mark
  constexpr std::string_view kClose = "\xE2\x80\x9D";  // right double quotation mark
  if (t.size() >= 2 && t.front() == '"' && t.back() == '"') {
    t = t.substr(1, t.size() - 2);
  } else if (t.size() >= kOpen.size() + kClose.size() && t.substr(0, kOpen.size()) == kOpen &&
             t.substr(t.size() - kClose.size()) == kClose) {
    t = t.substr(kOpen.size(), t.size() - kOpen.size() - kClose.size());
  }
  return std::string(trim(t));
}

DerailmentPrediction predict(const ConversationThread& thread, ScdStrategy strategy, Gateway& gateway,
                             const PredictOptions& options) {
  DerailmentPrediction p;
  p.thread_ref = thread.ref();
  p.strategy = strategy;
  p.model = options.model_name.empty() ? gateway.model_name() : options.model_name;

  std::vector<Comment> prefix = in_step("prefix", [&] { return prefix_before_toxicity(thread); });
  p.prefix_comments = prefix.size();
  if (options.drop_bot_comments) {
    std::vector<Comment> kept;
    for (auto& c : prefix) {
      if (kept.empty() || !is_bot_handle(c.author_handle)) kept.push_back(std::move(c));
    }
    prefix = std::move(kept);
  }

  auto request_for = [&](std::string text) {
    ChatRequest r;
    r.model_name = p.model;
    r.max_context_tokens = options.max_context_tokens;
    r.messages.push_back({ChatRole::User, std::move(text)});
    return r;
  };

  in_step("scd", [&] {
    const std::size_t overhead =
        estimate_tokens(build_scd_prompt(strategy, RenderedTranscript{}, options.prompt).user_text);
    if (overhead >= options.max_context_tokens) {
      throw Error(Errc::ContextOverflow, "SCD template alone exceeds the context window");
    }
    const TruncatedPrefix kept = truncate_transcript(prefix, options.max_context_tokens - overhead);
    p.elided_comments = kept.elided;
    p.scd_prompt = build_scd_prompt(strategy, render_transcript(kept.comments), options.prompt).user_text;
    p.scd_raw_output = gateway.complete(request_for(p.scd_prompt));
    p.scd_summary = strip_surrounding_quotes(p.scd_raw_output);
    if (p.scd_summary.empty()) throw Error(Errc::EmptySummary, "model returned an empty summary");
  });

  in_step("predict", [&] {
    p.predictor_prompt = build_predictor_prompt(p.scd_summary).user_text;
    p.predictor_raw_output = gateway.complete(request_for(p.predictor_prompt));
    p.probability = parse_probability(p.predictor_raw_output, options.parse_mode);
  });

  p.created_at = options.clock();
  return p;
}

std::vector<PredictionOutcome> score_corpus(std::span<const ConversationThread> threads, ScdStrategy strategy,
                                            Gateway& gateway, const PredictOptions& options,
                                            std::size_t parallelism) {
  std::vector<PredictionOutcome> out(threads.size());
  auto score_one = [&](std::size_t i) {
    PredictionOutcome& o = out[i];
    o.thread_ref = threads[i].ref();
    o.strategy = strategy;
    try {
      o.prediction = predict(threads[i], strategy, gateway, options);
    } catch (const Error& e) {
      o.failure = PredictionFailure{e.code(), e.step(), e.what()};
    }
  };
  if (parallelism <= 1 || threads.size() <= 1) {
    for (std::size_t i = 0; i < threads.size(); ++i) score_one(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < std::min(parallelism, threads.size()); ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < threads.size(); i = next++) score_one(i);
      });
    }
  }
  return out;
}

json to_json(const DerailmentPrediction& p) {
  return json{{"repo", p.thread_ref.repo},
              {"number", p.thread_ref.number},
              {"strategy", std::string(to_string(p.strategy))},
              {"scd_summary", p.scd_summary},
              {"probability", p.probability},
              {"template_version", p.template_version},
              {"created_at", format_iso8601(p.created_at)},
              {"model", p.model},
              {"prefix_comments", p.prefix_comments},
              {"elided_comments", p.elided_comments},
              {"scd_prompt", p.scd_prompt},
              {"scd_raw_output", p.scd_raw_output},
              {"predictor_prompt", p.predictor_prompt},
              {"predictor_raw_output", p.predictor_raw_output}};
}

DerailmentPrediction prediction_from_json(const json& j) {
  DerailmentPrediction p;
  p.thread_ref.repo = require_string(j, "repo", "");
  p.thread_ref.number = require_int(j, "number", "");
  p.strategy = detail::at_path("strategy", [&] { return parse_strategy(require_string(j, "strategy", "")); });
  p.scd_summary = require_string(j, "scd_summary", "");
  p.probability = require_number(j, "probability", "");
  if (!(p.probability >= 0.0 && p.probability <= 1.0)) detail::schema_error("probability", "must be in [0, 1]");
  p.template_version = require_string(j, "template_version", "");
  p.created_at = detail::at_path("created_at", [&] { return parse_iso8601(require_string(j, "created_at", "")); });
  p.model = require_string(j, "model", "");
  p.prefix_comments = size_field(j, "prefix_comments");
  p.elided_comments = size_field(j, "elided_comments");
  p.scd_prompt = require_string(j, "scd_prompt", "");
  p.scd_raw_output = require_string(j, "scd_raw_output", "");
  p.predictor_prompt = require_string(j, "predictor_prompt", "");
  p.predictor_raw_output = require_string(j, "predictor_raw_output", "");
  return p;
}

json to_json(const PredictionOutcome& o) {
  if (o.prediction) {
    json j = to_json(*o.prediction);
    j["status"] = "ok";
    return j;
  }
  json j{{"repo", o.thread_ref.repo},
         {"number", o.thread_ref.number},
         {"strategy", std::string(to_string(o.strategy))},
         {"status", "error"}};
  if (o.failure) {
    j["error"] = {{"code", std::string(to_string(o.failure->code))},
                  {"step", o.failure->step},
                  {"message", o.failure->message}};
  }
  return j;
}

PredictionOutcome outcome_from_json(const json& j) {
  PredictionOutcome o;
  const std::string status = j.contains("status") ? require_string(j, "status", "") : "ok";
  if (status == "ok") {
    o.prediction = prediction_from_json(j);
    o.thread_ref = o.prediction->thread_ref;
    o.strategy = o.prediction->strategy;
    return o;
  }
  if (status != "error") detail::schema_error("status", "expected \"ok\" or \"error\"");
  o.thread_ref.repo = require_string(j, "repo", "");
  o.thread_ref.number = require_int(j, "number", "");
  o.strategy = detail::at_path("strategy", [&] { return parse_strategy(require_string(j, "strategy", "")); });
  const json& e = require(j, "error", "");
  PredictionFailure f;
  f.code = detail::at_path("error.code", [&] { return parse_errc(require_string(e, "code", "error")); });
  f.step = require_string(e, "step", "error");
  f.message = require_string(e, "message", "error");
  o.failure = std::move(f);
  return o;
}

std::string serialize_predictions(std::span<const PredictionOutcome> outcomes) {
  std::string out;
  for (const auto& o : outcomes) out += detail::dump_line(to_json(o));
  return out;
}

std::vector<PredictionOutcome> parse_predictions(std::string_view text) {
  std::vector<PredictionOutcome> out;
  detail::for_each_jsonl(text, [&](const json& j, std::size_t) { out.push_back(outcome_from_json(j)); });
  return out;
}

void save_predictions(std::span<const PredictionOutcome> outcomes, const std::filesystem::path& path) {
  detail::write_text_file(path, serialize_predictions(outcomes), "predictions");
}

std::vector<PredictionOutcome> load_predictions(const std::filesystem::path& path) {
  return parse_predictions(detail::read_text_file(path, "predictions"));
}

}  // namespace derail
