#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "derail/timeutil.hpp"

namespace derail {

using json = nlohmann::json;

enum class AuthorRole { ProjectContributor, ExternalParticipant };

/// Tone-bearing discussion features marking an uncivil comment.
enum class Tbdf {
  BitterFrustration,
  Impatience,
  Mocking,
  Irony,
  Vulgarity,
  Threat,
  Entitlement,
  Insulting,
  IdentityAttackNameCalling,
};

/// What set off the incivility at a derailment point.
enum class TriggerType {
  FailedToolCodeError,
  TechnicalDisagreement,
  CommunicationBreakdown,
  PoliticsIdeology,
  Other,
};

enum class ThreadKind { Issue, PullRequest };

enum class CorpusPartition { Toxic, DerailedToxic, AbruptToxic, NonToxic };

inline constexpr Tbdf kAllTbdfs[] = {
    Tbdf::BitterFrustration, Tbdf::Impatience, Tbdf::Mocking,
    Tbdf::Irony,             Tbdf::Vulgarity,  Tbdf::Threat,
    Tbdf::Entitlement,       Tbdf::Insulting,  Tbdf::IdentityAttackNameCalling,
};

inline constexpr TriggerType kAllTriggers[] = {
    TriggerType::FailedToolCodeError, TriggerType::TechnicalDisagreement,
    TriggerType::CommunicationBreakdown, TriggerType::PoliticsIdeology, TriggerType::Other,
};

// Serialized names are snake_case. Parsing ignores case and any of "_- /",
// so "BitterFrustration", "bitter_frustration" and "Bitter Frustration" agree.
std::string_view to_string(AuthorRole v);
std::string_view to_string(Tbdf v);
std::string_view to_string(TriggerType v);
std::string_view to_string(ThreadKind v);
std::string_view to_string(CorpusPartition v);

Tbdf parse_tbdf(std::string_view s);
TriggerType parse_trigger(std::string_view s);
ThreadKind parse_thread_kind(std::string_view s);

/// Maps a raw GitHub author association onto the contributor/external
/// dichotomy. OWNER, COLLABORATOR, MEMBER and CONTRIBUTOR are project
/// contributors, NONE is an external participant. Case-insensitive; any other
/// value raises Errc::UnknownAssociation.
AuthorRole classify_role(std::string_view author_association);

inline constexpr std::string_view kGhostHandle = "ghost";

struct Comment {
  std::string id;
  std::string author_handle;
  std::string author_association;
  std::string body;
  Timestamp created_at{};
  bool is_toxic = false;
  std::set<Tbdf> tbdfs;
  bool is_derailment_point = false;

  AuthorRole role() const { return classify_role(author_association); }
  bool is_ghost() const { return author_handle == kGhostHandle; }

  bool operator==(const Comment&) const = default;
};

struct ThreadRef {
  std::string repo;
  std::int64_t number = 0;

  std::string to_string() const { return repo + "#" + std::to_string(number); }
  auto operator<=>(const ThreadRef&) const = default;
};

struct ConversationThread {
  std::string repo;
  std::int64_t number = 0;
  ThreadKind kind = ThreadKind::Issue;
  std::string title;
  std::vector<std::string> labels;
  std::optional<std::string> locked_reason;
  std::vector<Comment> comments;  // comments[0] is the initiating post
  std::optional<TriggerType> trigger;

  ThreadRef ref() const { return {repo, number}; }
  bool is_toxic_thread() const;
  std::optional<std::size_t> first_toxic_index() const;
  // Earliest derailment point, if annotated.
  std::optional<std::size_t> derailment_index() const;
  // False when the initiating post itself is toxic.
  bool valid_for_derailment() const;
  // False for deleted threads whose every author is the ghost placeholder.
  bool has_author_info() const;

  bool operator==(const ConversationThread&) const = default;
};

/// Throws Errc::InvariantViolation (or EmptyThread) describing the first
/// broken invariant.
void validate(const ConversationThread& thread);

/// Comments strictly before the first toxic comment; the whole thread when
/// none is toxic.
std::vector<Comment> prefix_before_toxicity(const ConversationThread& thread);

CorpusPartition partition(const ConversationThread& thread);

/// Sorts comments[1..] by (created_at, id). The initiating post stays first.
void normalize_comment_order(ConversationThread& thread);

json to_json(const Comment& c);
json to_json(const ConversationThread& t);
// Schema errors name the offending field path, e.g. "comments[2].created_at".
Comment comment_from_json(const json& j, const std::string& path = "");
ConversationThread thread_from_json(const json& j);

/// Reads a JSONL corpus. Every error message is prefixed with "line N:".
std::vector<ConversationThread> load_corpus(const std::filesystem::path& path);
std::vector<ConversationThread> parse_corpus(std::string_view text);
void save_corpus(std::span<const ConversationThread> threads, const std::filesystem::path& path);
std::string serialize_corpus(std::span<const ConversationThread> threads);

}  // namespace derail
