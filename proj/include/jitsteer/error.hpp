#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace jitsteer {

enum class ErrorCode {
  // provider gateway
  ProviderUnreachable,
  StructureParseFailure,
  RoleNotConfigured,
  TranscriptExhausted,
  TranscriptMismatch,
  ImageNotSupported,
  NoStructureFound,
  SchemaMismatch,
  // context model
  EmptyContext,
  OversizedAttachment,
  InvalidObjective,
  // induction
  ObjectiveValidationFailure,
  EmptySet,
  // steering
  DoubleApplication,
  MissingPlaceholder,
  ScoreParseFailure,
  ScoreOutOfRange,
  AllCandidatesFailed,
  // pipelines
  ExpertValidationFailure,
  ToolValidationFailure,
  CodegenFailure,
  PipelineFailed,
  // service
  NotFound,
  Conflict,
  InvalidArgument,
  Internal,
};

/// Stable wire name of an error code, used in HTTP error bodies and job records.
std::string_view to_string(ErrorCode code) noexcept;

/// Inverse of to_string; nullopt for unknown names.
std::optional<ErrorCode> parse_error_code(std::string_view name) noexcept;

/// HTTP status an error maps to when surfaced through the service API.
int http_status(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code),
        detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace jitsteer
