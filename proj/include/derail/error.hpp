#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace derail {

enum class Errc {
  InvalidArgument,
  UnknownAssociation,
  UnknownEnumValue,
  EmptyThread,
  FirstCommentToxic,
  InvariantViolation,
  MalformedJson,
  SchemaViolation,
  Io,
  NotFound,
  RateLimited,
  Forbidden,
  Transient,
  HttpStatus,
  EmptyCorpus,
  NonPositiveDelta,
  EmptyPrefix,
  EmptySummary,
  ContextOverflow,
  ParseFailure,
  ScriptExhausted,
  MissingLabel,
  DuplicateThread,
  LengthMismatch,
  Conflict,
};

std::string_view to_string(Errc code);
// Inverse of to_string. Errc::UnknownEnumValue otherwise.
Errc parse_errc(std::string_view s);

// Every failure surfaced by the library. `step()` names the pipeline stage
// ("scd", "predict", ...) for errors raised inside a multi-step operation.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::string step = {});

  Errc code() const noexcept { return code_; }
  const std::string& step() const noexcept { return step_; }

  Error with_step(std::string step) const;

 private:
  Errc code_;
  std::string step_;
};

}  // namespace derail
