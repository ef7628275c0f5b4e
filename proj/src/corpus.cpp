#include "derail/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "derail/error.hpp"
#include "enum_names.hpp"
#include "json_util.hpp"

namespace derail {
namespace {

using detail::NameTable;

constexpr NameTable<AuthorRole, 2> kRoleNames{{
    {AuthorRole::ProjectContributor, "project_contributor"},
    {AuthorRole::ExternalParticipant, "external_participant"},
}};

constexpr NameTable<Tbdf, 9> kTbdfNames{{
    {Tbdf::BitterFrustration, "bitter_frustration"},
    {Tbdf::Impatience, "impatience"},
    {Tbdf::Mocking, "mocking"},
    {Tbdf::Irony, "irony"},
    {Tbdf::Vulgarity, "vulgarity"},
    {Tbdf::Threat, "threat"},
    {Tbdf::Entitlement, "entitlement"},
    {Tbdf::Insulting, "insulting"},
    {Tbdf::IdentityAttackNameCalling, "identity_attack_name_calling"},
}};

constexpr NameTable<TriggerType, 5> kTriggerNames{{
    {TriggerType::FailedToolCodeError, "failed_tool_code_error"},
    {TriggerType::TechnicalDisagreement, "technical_disagreement"},
    {TriggerType::CommunicationBreakdown, "communication_breakdown"},
    {TriggerType::PoliticsIdeology, "politics_ideology"},
    {TriggerType::Other, "other"},
}};

constexpr NameTable<ThreadKind, 2> kKindNames{{
    {ThreadKind::Issue, "issue"},
    {ThreadKind::PullRequest, "pull_request"},
}};

constexpr NameTable<CorpusPartition, 4> kPartitionNames{{
    {CorpusPartition::Toxic, "toxic"},
    {CorpusPartition::DerailedToxic, "derailed_toxic"},
    {CorpusPartition::AbruptToxic, "abrupt_toxic"},
    {CorpusPartition::NonToxic, "non_toxic"},
}};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

[[noreturn]] void violation(const ConversationThread& t, const std::string& what) {
  throw Error(Errc::InvariantViolation, t.ref().to_string() + ": " + what);
}

}  // namespace

std::string_view to_string(AuthorRole v) { return detail::name_of(kRoleNames, v); }
std::string_view to_string(Tbdf v) { return detail::name_of(kTbdfNames, v); }
std::string_view to_string(TriggerType v) { return detail::name_of(kTriggerNames, v); }
std::string_view to_string(ThreadKind v) { return detail::name_of(kKindNames, v); }
std::string_view to_string(CorpusPartition v) { return detail::name_of(kPartitionNames, v); }

Tbdf parse_tbdf(std::string_view s) { return detail::parse_enum(kTbdfNames, s, "TBDF"); }
TriggerType parse_trigger(std::string_view s) { return detail::parse_enum(kTriggerNames, s, "trigger"); }
ThreadKind parse_thread_kind(std::string_view s) { return detail::parse_enum(kKindNames, s, "thread kind"); }

AuthorRole classify_role(std::string_view author_association) {
  const std::string a = lower(author_association);
  if (a == "owner" || a == "collaborator" || a == "member" || a == "contributor") {
    return AuthorRole::ProjectContributor;
  }
  if (a == "none") return AuthorRole::ExternalParticipant;
  throw Error(Errc::UnknownAssociation,
              "unknown author association \"" + std::string(author_association) + "\"");
}

bool ConversationThread::is_toxic_thread() const { return first_toxic_index().has_value(); }

std::optional<std::size_t> ConversationThread::first_toxic_index() const {
  for (std::size_t i = 0; i < comments.size(); ++i) {
    if (comments[i].is_toxic) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> ConversationThread::derailment_index() const {
  for (std::size_t i = 0; i < comments.size(); ++i) {
    if (comments[i].is_derailment_point) return i;
  }
  return std::nullopt;
}

bool ConversationThread::valid_for_derailment() const {
  return !comments.empty() && !comments.front().is_toxic;
}

bool ConversationThread::has_author_info() const {
  return std::any_of(comments.begin(), comments.end(), [](const Comment& c) { return !c.is_ghost(); });
}

void validate(const ConversationThread& t) {
  if (t.comments.empty()) {
    throw Error(Errc::EmptyThread, t.ref().to_string() + ": thread has no comments");
  }
  const auto slash = t.repo.find('/');
  if (slash == std::string::npos || slash == 0 || slash + 1 == t.repo.size() ||
      t.repo.find('/', slash + 1) != std::string::npos) {
    violation(t, "repo must be \"owner/name\"");
  }
  if (t.number <= 0) violation(t, "number must be positive");
  for (std::size_t i = 1; i < t.comments.size(); ++i) {
    if (t.comments[i].created_at < t.comments[i - 1].created_at) {
      violation(t, "comments[" + std::to_string(i) + "] is earlier than its predecessor");
    }
  }
  for (std::size_t i = 0; i < t.comments.size(); ++i) {
    if (t.comments[i].is_derailment_point && t.comments[i].tbdfs.empty()) {
      violation(t, "comments[" + std::to_string(i) + "] is a derailment point without TBDFs");
    }
  }
  const auto toxic = t.first_toxic_index();
  if (toxic) {
    for (std::size_t i = *toxic; i < t.comments.size(); ++i) {
      if (t.comments[i].is_derailment_point) {
        violation(t, "derailment point comments[" + std::to_string(i) +
                         "] does not precede the first toxic comment");
      }
    }
  }
}

std::vector<Comment> prefix_before_toxicity(const ConversationThread& thread) {
  if (thread.comments.empty()) {
    throw Error(Errc::EmptyThread, thread.ref().to_string() + ": thread has no comments");
  }
  if (thread.comments.front().is_toxic) {
    throw Error(Errc::FirstCommentToxic,
                thread.ref().to_string() + ": initiating comment is toxic; no prefix exists");
  }
  const std::size_t end = thread.first_toxic_index().value_or(thread.comments.size());
  return {thread.comments.begin(), thread.comments.begin() + static_cast<std::ptrdiff_t>(end)};
}

CorpusPartition partition(const ConversationThread& thread) {
  const auto toxic = thread.first_toxic_index();
  if (!toxic) return CorpusPartition::NonToxic;
  const auto derail = thread.derailment_index();
  return derail && *derail < *toxic ? CorpusPartition::DerailedToxic : CorpusPartition::AbruptToxic;
}

void normalize_comment_order(ConversationThread& thread) {
  if (thread.comments.size() < 3) return;
  std::stable_sort(thread.comments.begin() + 1, thread.comments.end(),
                   [](const Comment& a, const Comment& b) {
                     if (a.created_at != b.created_at) return a.created_at < b.created_at;
                     return a.id < b.id;
                   });
}

json to_json(const Comment& c) {
  json tbdfs = json::array();
  for (Tbdf t : c.tbdfs) tbdfs.push_back(std::string(to_string(t)));
  return json{{"id", c.id},
              {"author_handle", c.author_handle},
              {"author_association", c.author_association},
              {"body", c.body},
              {"created_at", format_iso8601(c.created_at)},
              {"is_toxic", c.is_toxic},
              {"tbdfs", std::move(tbdfs)},
              {"is_derailment_point", c.is_derailment_point}};
}

json to_json(const ConversationThread& t) {
  json comments = json::array();
  for (const auto& c : t.comments) comments.push_back(to_json(c));
  return json{{"repo", t.repo},
              {"number", t.number},
              {"kind", std::string(to_string(t.kind))},
              {"title", t.title},
              {"labels", t.labels},
              {"locked_reason", t.locked_reason ? json(*t.locked_reason) : json(nullptr)},
              {"trigger", t.trigger ? json(std::string(to_string(*t.trigger))) : json(nullptr)},
              {"comments", std::move(comments)}};
}

Comment comment_from_json(const json& j, const std::string& path) {
  using namespace detail;
  Comment c;
  c.id = require_string(j, "id", path);
  c.author_handle = require_string(j, "author_handle", path);
  c.author_association = require_string(j, "author_association", path);
  c.body = require_string(j, "body", path);
  const std::string ts = require_string(j, "created_at", path);
  c.created_at = at_path(field_path(path, "created_at"), [&] { return parse_iso8601(ts); });
  c.is_toxic = require_bool(j, "is_toxic", path);
  const auto& tbdfs = require(j, "tbdfs", path);
  if (!tbdfs.is_array()) schema_error(field_path(path, "tbdfs"), "expected array");
  for (std::size_t i = 0; i < tbdfs.size(); ++i) {
    const std::string p = field_path(path, "tbdfs") + "[" + std::to_string(i) + "]";
    if (!tbdfs[i].is_string()) schema_error(p, "expected string");
    c.tbdfs.insert(at_path(p, [&] { return parse_tbdf(tbdfs[i].get<std::string>()); }));
  }
  c.is_derailment_point = require_bool(j, "is_derailment_point", path);
  return c;
}

ConversationThread thread_from_json(const json& j) {
  using namespace detail;
  ConversationThread t;
  t.repo = require_string(j, "repo", "");
  t.number = require_int(j, "number", "");
  const std::string kind = require_string(j, "kind", "");
  t.kind = at_path("kind", [&] { return parse_thread_kind(kind); });
  t.title = require_string(j, "title", "");
  const auto& labels = require(j, "labels", "");
  if (!labels.is_array()) schema_error("labels", "expected array");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i].is_string()) schema_error("labels[" + std::to_string(i) + "]", "expected string");
    t.labels.push_back(labels[i].get<std::string>());
  }
  const auto& locked = require(j, "locked_reason", "");
  if (!locked.is_null()) {
    if (!locked.is_string()) schema_error("locked_reason", "expected string or null");
    t.locked_reason = locked.get<std::string>();
  }
  const auto& trigger = require(j, "trigger", "");
  if (!trigger.is_null()) {
    if (!trigger.is_string()) schema_error("trigger", "expected string or null");
    t.trigger = at_path("trigger", [&] { return parse_trigger(trigger.get<std::string>()); });
  }
  const auto& comments = require(j, "comments", "");
  if (!comments.is_array()) schema_error("comments", "expected array");
  for (std::size_t i = 0; i < comments.size(); ++i) {
    t.comments.push_back(comment_from_json(comments[i], "comments[" + std::to_string(i) + "]"));
  }
  return t;
}

std::vector<ConversationThread> parse_corpus(std::string_view text) {
  std::vector<ConversationThread> threads;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(Errc::MalformedJson, where + "malformed JSON");
    try {
      ConversationThread t = thread_from_json(j);
      validate(t);
      threads.push_back(std::move(t));
    } catch (const Error& e) {
      throw Error(e.code(), where + e.what());
    }
  }
  return threads;
}

std::vector<ConversationThread> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open corpus " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str());
}

std::string serialize_corpus(std::span<const ConversationThread> threads) {
  std::string out;
  for (const auto& t : threads) {
    out += to_json(t).dump(-1, ' ', false, json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

void save_corpus(std::span<const ConversationThread> threads, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write corpus " + path.string());
  out << serialize_corpus(threads);
  if (!out) throw Error(Errc::Io, "write failed for " + path.string());
}

}  // namespace derail
