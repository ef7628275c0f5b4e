#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "derail/analytics.hpp"
#include "derail/corpus.hpp"
#include "derail/github.hpp"
#include "derail/llm.hpp"
#include "derail/predictor.hpp"
#include "derail/timeutil.hpp"

namespace derail {

/// "owner:name:number", usable as a single URL path segment.
std::string thread_id(const ThreadRef& ref);
/// Errc::InvalidArgument when malformed.
ThreadRef parse_thread_id(std::string_view id);

enum class DispositionAction { NoAction, BotReminder, ModeratorAlert, Dismissed };
std::string_view to_string(DispositionAction a);
DispositionAction parse_disposition_action(std::string_view s);

/// Why a moderator judged a prediction wrong.
enum class ErrorCategory {
  OverestimatesEffect,
  ToneMisread,
  LockCloseConfound,
  UnderestimatedTone,
  ContextTooLong,
  CivilityJuxtaposition,
};
std::string_view to_string(ErrorCategory c);
ErrorCategory parse_error_category(std::string_view s);

struct Disposition {
  DispositionAction action_taken = DispositionAction::NoAction;
  std::optional<ErrorCategory> error_category;
  std::string note;
  std::string actor;
  Timestamp at{};

  bool operator==(const Disposition&) const = default;
};

json to_json(const Disposition& d);
/// `at` is taken from the JSON when present.
Disposition disposition_from_json(const json& j);

struct InterventionEvent {
  InterventionAction action = InterventionAction::NoAction;
  double probability = 0.0;
  std::string message;
  Timestamp at{};

  bool operator==(const InterventionEvent&) const = default;
};

struct MonitoredThread {
  ConversationThread thread;
  bool annotated = false;  // posted as full JSON carrying toxicity annotations
  std::vector<DerailmentPrediction> predictions;
  std::vector<Disposition> dispositions;
  std::vector<InterventionEvent> interventions;
  Timestamp updated_at{};

  std::string id() const { return thread_id(thread.ref()); }
  const DerailmentPrediction* latest_prediction() const;
  const Disposition* latest_disposition() const;
  bool dismissed() const;

  bool operator==(const MonitoredThread&) const = default;
};

/// Append-only event log ("events.jsonl") plus an in-memory index rebuilt by
/// replaying the log. Writes are serialized; reads return copies.
class ModerationStore {
 public:
  /// Opens or creates the store directory and replays its log.
  explicit ModerationStore(std::filesystem::path dir);

  MonitoredThread upsert_thread(const ConversationThread& thread, bool annotated, Timestamp at);
  /// Errc::NotFound for an unknown thread.
  MonitoredThread record_prediction(const DerailmentPrediction& prediction, Timestamp at);
  /// Errc::NotFound for an unknown thread, Errc::Conflict before any prediction.
  MonitoredThread add_disposition(const std::string& id, const Disposition& disposition);
  MonitoredThread record_intervention(const std::string& id, const InterventionEvent& event);

  std::optional<MonitoredThread> get(const std::string& id) const;
  std::vector<MonitoredThread> list() const;
  /// Latest probability >= threshold, not dismissed; probability descending,
  /// then most recent prediction first, then id.
  std::vector<MonitoredThread> flagged(double threshold) const;
  /// compute_stats over annotated threads. Errc::EmptyCorpus when none.
  CorpusStats stats() const;

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path events_path() const { return dir_ / "events.jsonl"; }
  std::filesystem::path audit_path() const { return dir_ / "audit.log"; }

  /// State rebuilt from an event log text, for replay checks.
  static std::map<std::string, MonitoredThread> replay(std::string_view events);
  std::map<std::string, MonitoredThread> snapshot() const;

 private:
  void append(const json& event);
  void audit(const std::string& line);

  std::filesystem::path dir_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, MonitoredThread> threads_;
};

struct ServiceOptions {
  ScdStrategy default_strategy = ScdStrategy::LeastToMostScd;
  InterventionPolicy policy;
  PredictOptions predict;
  std::string reminder_template =
      "This conversation is showing signs of rising tension. Please keep the discussion respectful and "
      "follow the project's code of conduct.";
  Clock clock = system_clock();
};

/// Service operations behind the HTTP API.
class ModerationService {
 public:
  ModerationService(ModerationStore& store, std::shared_ptr<Gateway> gateway, ServiceOptions options = {},
                    std::shared_ptr<GithubClient> github = nullptr);

  MonitoredThread register_thread(const ConversationThread& thread, bool annotated);
  /// Errc::NotFound without a GitHub client or for a missing thread.
  MonitoredThread register_remote(const std::string& repo, std::int64_t number);
  /// Errc::NotFound, Errc::Conflict when the first comment is toxic, or the
  /// pipeline error with its step.
  DerailmentPrediction score(const std::string& id, std::optional<ScdStrategy> strategy = std::nullopt);
  MonitoredThread dispose(const std::string& id, Disposition disposition);

  ModerationStore& store() { return store_; }
  const ServiceOptions& options() const { return options_; }

  /// API view: record fields plus the anonymized transcript and recommended action.
  json view(const MonitoredThread& t) const;

 private:
  std::mutex& score_lock(const std::string& id);

  ModerationStore& store_;
  std::shared_ptr<Gateway> gateway_;
  ServiceOptions options_;
  std::shared_ptr<GithubClient> github_;
  std::mutex locks_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> score_locks_;
};

struct ServerOptions {
  std::optional<std::filesystem::path> ui_dir;  // served under /ui when set
};

/// JSON-over-HTTP front end. Errors use {"error": {"code", "message", "detail"}}.
class ModerationServer {
 public:
  ModerationServer(ModerationService& service, ServerOptions options = {});
  ~ModerationServer();
  ModerationServer(const ModerationServer&) = delete;
  ModerationServer& operator=(const ModerationServer&) = delete;

  /// Binds, returning the port (an ephemeral one when `port` is 0).
  int bind(const std::string& host, int port);
  /// Serves until stop(). Call after bind().
  void run();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace derail
