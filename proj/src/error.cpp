#include "derail/error.hpp"

namespace derail {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return "invalid_argument";
    case Errc::UnknownAssociation: return "unknown_association";
    case Errc::UnknownEnumValue: return "unknown_enum_value";
    case Errc::EmptyThread: return "empty_thread";
    case Errc::FirstCommentToxic: return "first_comment_toxic";
    case Errc::InvariantViolation: return "invariant_violation";
    case Errc::MalformedJson: return "malformed_json";
    case Errc::SchemaViolation: return "schema_violation";
    case Errc::Io: return "io";
    case Errc::NotFound: return "not_found";
    case Errc::RateLimited: return "rate_limited";
    case Errc::Forbidden: return "forbidden";
    case Errc::Transient: return "transient";
    case Errc::HttpStatus: return "http_status";
    case Errc::EmptyCorpus: return "empty_corpus";
    case Errc::NonPositiveDelta: return "non_positive_delta";
    case Errc::EmptyPrefix: return "empty_prefix";
    case Errc::EmptySummary: return "empty_summary";
    case Errc::ContextOverflow: return "context_overflow";
    case Errc::ParseFailure: return "parse_failure";
    case Errc::ScriptExhausted: return "script_exhausted";
    case Errc::MissingLabel: return "missing_label";
    case Errc::DuplicateThread: return "duplicate_thread";
    case Errc::LengthMismatch: return "length_mismatch";
    case Errc::Conflict: return "conflict";
  }
  return "unknown";
}

Errc parse_errc(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(Errc::Conflict); ++i) {
    const auto code = static_cast<Errc>(i);
    if (to_string(code) == s) return code;
  }
  throw Error(Errc::UnknownEnumValue, "unknown error code: \"" + std::string(s) + "\"");
}

Error::Error(Errc code, const std::string& message, std::string step)
    : std::runtime_error(message), code_(code), step_(std::move(step)) {}

Error Error::with_step(std::string step) const {
  return Error(code_, what(), std::move(step));
}

}  // namespace derail
