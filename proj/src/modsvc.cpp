#include "derail/modsvc.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <fstream>

#include "enum_names.hpp"
#include "json_util.hpp"

namespace derail {
namespace {

using detail::require;
using detail::require_string;

constexpr detail::NameTable<DispositionAction, 4> kDispositionNames{{
    {DispositionAction::NoAction, "no_action"},
    {DispositionAction::BotReminder, "bot_reminder"},
    {DispositionAction::ModeratorAlert, "moderator_alert"},
    {DispositionAction::Dismissed, "dismissed"},
}};

constexpr detail::NameTable<ErrorCategory, 6> kErrorCategoryNames{{
    {ErrorCategory::OverestimatesEffect, "overestimates_effect"},
    {ErrorCategory::ToneMisread, "tone_misread"},
    {ErrorCategory::LockCloseConfound, "lock_close_confound"},
    {ErrorCategory::UnderestimatedTone, "underestimated_tone"},
    {ErrorCategory::ContextTooLong, "context_too_long"},
    {ErrorCategory::CivilityJuxtaposition, "civility_juxtaposition"},
}};

json to_json(const InterventionEvent& e) {
  return json{{"action", std::string(to_string(e.action))},
              {"probability", e.probability},
              {"message", e.message},
              {"at", format_iso8601(e.at)}};
}

InterventionEvent intervention_from_json(const json& j) {
  InterventionEvent e;
  e.action = parse_action(require_string(j, "action", "intervention"));
  e.probability = detail::require_number(j, "probability", "intervention");
  e.message = require_string(j, "message", "intervention");
  e.at = parse_iso8601(require_string(j, "at", "intervention"));
  return e;
}

void apply_event(std::map<std::string, MonitoredThread>& state, const json& ev) {
  const std::string type = require_string(ev, "type", "");
  if (type == "thread_upsert") {
    ConversationThread t = detail::at_path("thread", [&] { return thread_from_json(require(ev, "thread", "")); });
    const std::string id = thread_id(t.ref());
    MonitoredThread& m = state[id];
    m.thread = std::move(t);
    m.annotated = detail::require_bool(ev, "annotated", "");
    m.updated_at = parse_iso8601(require_string(ev, "at", ""));
    return;
  }
  if (type == "prediction") {
    DerailmentPrediction p =
        detail::at_path("prediction", [&] { return prediction_from_json(require(ev, "prediction", "")); });
    auto it = state.find(thread_id(p.thread_ref));
    if (it == state.end()) throw Error(Errc::NotFound, "prediction for unknown thread " + p.thread_ref.to_string());
    it->second.predictions.push_back(std::move(p));
    it->second.updated_at = parse_iso8601(require_string(ev, "at", ""));
    return;
  }
  const std::string id = require_string(ev, "id", "");
  auto it = state.find(id);
  if (it == state.end()) throw Error(Errc::NotFound, type + " for unknown thread " + id);
  if (type == "disposition") {
    Disposition d = disposition_from_json(require(ev, "disposition", ""));
    it->second.updated_at = d.at;
    it->second.dispositions.push_back(std::move(d));
  } else if (type == "intervention") {
    it->second.interventions.push_back(intervention_from_json(require(ev, "intervention", "")));
  } else {
    detail::schema_error("type", "unknown event type \"" + type + "\"");
  }
}

int http_status(Errc code) {
  switch (code) {
    case Errc::NotFound:
    case Errc::EmptyCorpus: return 404;
    case Errc::Conflict:
    case Errc::FirstCommentToxic: return 409;
    case Errc::Io: return 500;
    default: return 400;
  }
}

}  // namespace

std::string thread_id(const ThreadRef& ref) {
  std::string id = ref.repo;
  std::replace(id.begin(), id.end(), '/', ':');
  return id + ":" + std::to_string(ref.number);
}

ThreadRef parse_thread_id(std::string_view id) {
  const auto first = id.find(':');
  const auto last = id.rfind(':');
  auto bad = [&] { return Error(Errc::InvalidArgument, "malformed thread id \"" + std::string(id) + "\""); };
  if (first == std::string_view::npos || first == last || first == 0 || last == first + 1) throw bad();
  const std::string_view num = id.substr(last + 1);
  if (num.empty() || num.size() > 18 || !std::all_of(num.begin(), num.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw bad();
  }
  ThreadRef ref;
  ref.repo = std::string(id.substr(0, first)) + "/" + std::string(id.substr(first + 1, last - first - 1));
  ref.number = std::stoll(std::string(num));
  if (ref.number <= 0) throw bad();
  return ref;
}

std::string_view to_string(DispositionAction a) { return detail::name_of(kDispositionNames, a); }
DispositionAction parse_disposition_action(std::string_view s) {
  return detail::parse_enum(kDispositionNames, s, "disposition action");
}
std::string_view to_string(ErrorCategory c) { return detail::name_of(kErrorCategoryNames, c); }
ErrorCategory parse_error_category(std::string_view s) {
  return detail::parse_enum(kErrorCategoryNames, s, "error category");
}

json to_json(const Disposition& d) {
  json j{{"action_taken", std::string(to_string(d.action_taken))},
         {"error_category", d.error_category ? json(std::string(to_string(*d.error_category))) : json(nullptr)},
         {"note", d.note},
         {"actor", d.actor},
         {"at", format_iso8601(d.at)}};
  return j;
}

Disposition disposition_from_json(const json& j) {
  Disposition d;
  d.action_taken =
      detail::at_path("action_taken", [&] { return parse_disposition_action(require_string(j, "action_taken", "")); });
  if (j.contains("error_category") && !j.at("error_category").is_null()) {
    d.error_category = detail::at_path(
        "error_category", [&] { return parse_error_category(require_string(j, "error_category", "")); });
  }
  if (j.contains("note")) d.note = require_string(j, "note", "");
  if (j.contains("actor")) d.actor = require_string(j, "actor", "");
  if (j.contains("at")) d.at = detail::at_path("at", [&] { return parse_iso8601(require_string(j, "at", "")); });
  return d;
}

const DerailmentPrediction* MonitoredThread::latest_prediction() const {
  return predictions.empty() ? nullptr : &predictions.back();
}

const Disposition* MonitoredThread::latest_disposition() const {
  return dispositions.empty() ? nullptr : &dispositions.back();
}

bool MonitoredThread::dismissed() const {
  const Disposition* d = latest_disposition();
  return d && d->action_taken == DispositionAction::Dismissed;
}

ModerationStore::ModerationStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
  if (std::filesystem::exists(events_path())) {
    threads_ = replay(detail::read_text_file(events_path(), "event log"));
  }
}

std::map<std::string, MonitoredThread> ModerationStore::replay(std::string_view events) {
  std::map<std::string, MonitoredThread> state;
  detail::for_each_jsonl(events, [&](const json& ev, std::size_t) { apply_event(state, ev); });
  return state;
}

std::map<std::string, MonitoredThread> ModerationStore::snapshot() const {
  std::shared_lock lock(mutex_);
  return threads_;
}

void ModerationStore::append(const json& event) {
  std::ofstream out(events_path(), std::ios::binary | std::ios::app);
  out << detail::dump_line(event);
  out.flush();
  if (!out) throw Error(Errc::Io, "cannot append to " + events_path().string());
}

void ModerationStore::audit(const std::string& line) {
  std::ofstream out(audit_path(), std::ios::binary | std::ios::app);
  out << line << '\n';
  if (!out) throw Error(Errc::Io, "cannot append to " + audit_path().string());
}

MonitoredThread ModerationStore::upsert_thread(const ConversationThread& thread, bool annotated, Timestamp at) {
  validate(thread);
  const json ev{{"type", "thread_upsert"}, {"at", format_iso8601(at)}, {"annotated", annotated}, {"thread", to_json(thread)}};
  std::unique_lock lock(mutex_);
  append(ev);
  apply_event(threads_, ev);
  return threads_.at(thread_id(thread.ref()));
}

MonitoredThread ModerationStore::record_prediction(const DerailmentPrediction& prediction, Timestamp at) {
  const std::string id = thread_id(prediction.thread_ref);
  const json ev{{"type", "prediction"}, {"at", format_iso8601(at)}, {"prediction", to_json(prediction)}};
  std::unique_lock lock(mutex_);
  if (!threads_.count(id)) throw Error(Errc::NotFound, "unknown thread " + id);
  append(ev);
  apply_event(threads_, ev);
  return threads_.at(id);
}

MonitoredThread ModerationStore::add_disposition(const std::string& id, const Disposition& disposition) {
  const json ev{{"type", "disposition"}, {"id", id}, {"disposition", to_json(disposition)}};
  std::unique_lock lock(mutex_);
  auto it = threads_.find(id);
  if (it == threads_.end()) throw Error(Errc::NotFound, "unknown thread " + id);
  if (it->second.predictions.empty()) throw Error(Errc::Conflict, "thread " + id + " has not been scored yet");
  append(ev);
  apply_event(threads_, ev);
  audit(format_iso8601(disposition.at) + " disposition " + id + " action=" +
        std::string(to_string(disposition.action_taken)) + " category=" +
        (disposition.error_category ? std::string(to_string(*disposition.error_category)) : "none") +
        " actor=" + json(disposition.actor).dump() + " note=" + json(disposition.note).dump());
  return threads_.at(id);
}

MonitoredThread ModerationStore::record_intervention(const std::string& id, const InterventionEvent& event) {
  const json ev{{"type", "intervention"}, {"id", id}, {"intervention", to_json(event)}};
  std::unique_lock lock(mutex_);
  if (!threads_.count(id)) throw Error(Errc::NotFound, "unknown thread " + id);
  append(ev);
  apply_event(threads_, ev);
  audit(format_iso8601(event.at) + " intervention " + id + " action=" + std::string(to_string(event.action)) +
        " message=" + json(event.message).dump());
  return threads_.at(id);
}

std::optional<MonitoredThread> ModerationStore::get(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = threads_.find(id);
  if (it == threads_.end()) return std::nullopt;
  return it->second;
}

std::vector<MonitoredThread> ModerationStore::list() const {
  std::shared_lock lock(mutex_);
  std::vector<MonitoredThread> out;
  for (const auto& [id, m] : threads_) out.push_back(m);
  return out;
}

std::vector<MonitoredThread> ModerationStore::flagged(double threshold) const {
  std::vector<MonitoredThread> out;
  for (auto& m : list()) {
    const DerailmentPrediction* p = m.latest_prediction();
    if (p && !m.dismissed() && classify(p->probability, threshold)) out.push_back(std::move(m));
  }
  std::sort(out.begin(), out.end(), [](const MonitoredThread& a, const MonitoredThread& b) {
    const auto* pa = a.latest_prediction();
    const auto* pb = b.latest_prediction();
    if (pa->probability != pb->probability) return pa->probability > pb->probability;
    if (pa->created_at != pb->created_at) return pa->created_at > pb->created_at;
    return a.id() < b.id();
  });
  return out;
}

CorpusStats ModerationStore::stats() const {
  std::vector<ConversationThread> annotated;
  for (const auto& m : list()) {
    if (m.annotated) annotated.push_back(m.thread);
  }
  return compute_stats(annotated);
}

ModerationService::ModerationService(ModerationStore& store, std::shared_ptr<Gateway> gateway, ServiceOptions options,
                                     std::shared_ptr<GithubClient> github)
    : store_(store), gateway_(std::move(gateway)), options_(std::move(options)), github_(std::move(github)) {
  options_.policy.validate();
}

MonitoredThread ModerationService::register_thread(const ConversationThread& thread, bool annotated) {
  return store_.upsert_thread(thread, annotated, options_.clock());
}

MonitoredThread ModerationService::register_remote(const std::string& repo, std::int64_t number) {
  if (!github_) throw Error(Errc::NotFound, "no GitHub client configured for live fetch");
  ConversationThread t = github_->fetch_thread(repo, number);
  return register_thread(t, false);
}

std::mutex& ModerationService::score_lock(const std::string& id) {
  std::lock_guard lock(locks_mutex_);
  auto& slot = score_locks_[id];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

DerailmentPrediction ModerationService::score(const std::string& id, std::optional<ScdStrategy> strategy) {
  std::lock_guard lock(score_lock(id));
  const auto m = store_.get(id);
  if (!m) throw Error(Errc::NotFound, "unknown thread " + id);
  if (!m->thread.valid_for_derailment()) {
    throw Error(Errc::FirstCommentToxic, "thread " + id + " opens with a toxic comment and cannot be scored");
  }
  PredictOptions opts = options_.predict;
  opts.clock = options_.clock;
  DerailmentPrediction p = predict(m->thread, strategy.value_or(options_.default_strategy), *gateway_, opts);
  store_.record_prediction(p, p.created_at);

  const InterventionAction action = recommend_action(p.probability, options_.policy);
  if (action != InterventionAction::NoAction) {
    InterventionEvent ev;
    ev.action = action;
    ev.probability = p.probability;
    ev.message = action == InterventionAction::BotReminder ? options_.reminder_template
                                                           : "Flagged for moderator review.";
    ev.at = p.created_at;
    store_.record_intervention(id, ev);
    spdlog::info("{}: {} (p={:.2f})", id, to_string(action), p.probability);
  }
  return p;
}

MonitoredThread ModerationService::dispose(const std::string& id, Disposition disposition) {
  disposition.at = options_.clock();
  return store_.add_disposition(id, disposition);
}

json ModerationService::view(const MonitoredThread& m) const {
  json j;
  j["id"] = m.id();
  j["repo"] = m.thread.repo;
  j["number"] = m.thread.number;
  j["title"] = m.thread.title;
  j["annotated"] = m.annotated;
  j["updated_at"] = format_iso8601(m.updated_at);
  j["thread"] = to_json(m.thread);
  try {
    j["transcript"] = render_transcript(prefix_before_toxicity(m.thread)).text;
  } catch (const Error&) {
    j["transcript"] = nullptr;
  }
  const DerailmentPrediction* p = m.latest_prediction();
  j["latest_prediction"] = p ? to_json(*p) : json(nullptr);
  j["probability"] = p ? json(p->probability) : json(nullptr);
  j["recommended_action"] =
      p ? json(std::string(to_string(recommend_action(p->probability, options_.policy)))) : json(nullptr);
  j["predictions"] = json::array();
  for (const auto& h : m.predictions) {
    j["predictions"].push_back({{"strategy", std::string(to_string(h.strategy))},
                                {"probability", h.probability},
                                {"created_at", format_iso8601(h.created_at)}});
  }
  j["disposition"] = m.latest_disposition() ? to_json(*m.latest_disposition()) : json(nullptr);
  j["dispositions"] = json::array();
  for (const auto& d : m.dispositions) j["dispositions"].push_back(to_json(d));
  j["interventions"] = json::array();
  for (const auto& e : m.interventions) j["interventions"].push_back(to_json(e));
  return j;
}

struct ModerationServer::Impl {
  ModerationService& service;
  ServerOptions options;
  httplib::Server server;
  std::atomic<bool> running{false};

  Impl(ModerationService& s, ServerOptions o) : service(s), options(std::move(o)) { routes(); }

  static void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(2, ' ', false, json::error_handler_t::replace), "application/json");
  }

  static void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message,
                         json detail = json::object()) {
    send_json(res, status, {{"error", {{"code", std::string(code)}, {"message", message}, {"detail", detail}}}});
  }

  static void send_error(httplib::Response& res, const Error& e) {
    json detail = json::object();
    const std::string msg = e.what();
    if (e.code() == Errc::SchemaViolation) {
      if (auto colon = msg.find(": "); colon != std::string::npos) detail["field"] = msg.substr(0, colon);
    }
    int status = http_status(e.code());
    if (!e.step().empty()) {
      detail["step"] = e.step();
      status = 502;
    }
    send_error(res, status, to_string(e.code()), msg, detail);
  }

  template <typename F>
  static auto guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const Error& e) {
        send_error(res, e);
      } catch (const json::exception& e) {
        send_error(res, 400, "schema_violation", e.what());
      } catch (const std::exception& e) {
        spdlog::error("unhandled error: {}", e.what());
        send_error(res, 500, "internal", e.what());
      }
    };
  }

  static json parse_body(const httplib::Request& req) {
    json j = json::parse(req.body, nullptr, false);
    if (j.is_discarded()) throw Error(Errc::MalformedJson, "request body is not valid JSON");
    if (!j.is_object()) throw Error(Errc::SchemaViolation, "<root>: expected object");
    return j;
  }

  static double threshold_param(const httplib::Request& req, double fallback) {
    if (!req.has_param("threshold")) return fallback;
    const std::string raw = req.get_param_value("threshold");
    char* end = nullptr;
    const double t = std::strtod(raw.c_str(), &end);
    if (raw.empty() || *end != '\0' || !(t >= 0.0 && t <= 1.0)) {
      throw Error(Errc::InvalidArgument, "threshold must be a number in [0, 1]");
    }
    return t;
  }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });

    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"status", "ok"}});
    });

    server.Post("/threads", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      MonitoredThread m;
      if (body.contains("comments")) {
        ConversationThread t = thread_from_json(body);
        validate(t);
        m = service.register_thread(t, true);
      } else {
        const std::string repo = require_string(body, "repo", "");
        const std::int64_t number = detail::require_int(body, "number", "");
        try {
          m = service.register_remote(repo, number);
        } catch (const Error& e) {
          if (e.code() == Errc::NotFound) throw;
          send_error(res, 502, to_string(e.code()), e.what(), {{"step", "fetch"}});
          return;
        }
      }
      send_json(res, 200, service.view(m));
    }));

    server.Get("/threads", guarded([this](const httplib::Request&, httplib::Response& res) {
      json out = json::array();
      for (const auto& m : service.store().list()) out.push_back(service.view(m));
      send_json(res, 200, out);
    }));

    server.Get(R"(/threads/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      const auto m = service.store().get(id);
      if (!m) throw Error(Errc::NotFound, "unknown thread " + id);
      send_json(res, 200, service.view(*m));
    }));

    server.Post(R"(/threads/([^/]+)/score)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      std::optional<ScdStrategy> strategy;
      if (req.has_param("strategy")) strategy = parse_strategy(req.get_param_value("strategy"));
      const DerailmentPrediction p = service.score(req.matches[1], strategy);
      json out = to_json(p);
      out["recommended_action"] = std::string(to_string(recommend_action(p.probability, service.options().policy)));
      send_json(res, 200, out);
    }));

    server.Post(R"(/threads/([^/]+)/disposition)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const Disposition d = disposition_from_json(parse_body(req));
                  const MonitoredThread m = service.dispose(req.matches[1], d);
                  send_json(res, 200, to_json(*m.latest_disposition()));
                }));

    server.Get("/flagged", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const double threshold = threshold_param(req, 0.5);
      json out = json::array();
      for (const auto& m : service.store().flagged(threshold)) out.push_back(service.view(m));
      send_json(res, 200, out);
    }));

    server.Get("/stats", guarded([this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, to_json(service.store().stats()));
    }));

    if (options.ui_dir) {
      if (!server.set_mount_point("/ui", options.ui_dir->string())) {
        throw Error(Errc::Io, "cannot serve UI from " + options.ui_dir->string());
      }
    }
  }
};

ModerationServer::ModerationServer(ModerationService& service, ServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {}

ModerationServer::~ModerationServer() { stop(); }

int ModerationServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(Errc::Io, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(Errc::Io, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void ModerationServer::run() {
  impl_->running = true;
  impl_->server.listen_after_bind();
  impl_->running = false;
}

void ModerationServer::stop() {
  if (impl_) impl_->server.stop();
}

bool ModerationServer::running() const { return impl_->running; }

}  // namespace derail
