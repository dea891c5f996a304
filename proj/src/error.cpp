#include "jitsteer/error.hpp"

namespace jitsteer {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ProviderUnreachable: return "ProviderUnreachable";
    case ErrorCode::StructureParseFailure: return "StructureParseFailure";
    case ErrorCode::RoleNotConfigured: return "RoleNotConfigured";
    case ErrorCode::TranscriptExhausted: return "TranscriptExhausted";
    case ErrorCode::TranscriptMismatch: return "TranscriptMismatch";
    case ErrorCode::ImageNotSupported: return "ImageNotSupported";
    case ErrorCode::NoStructureFound: return "NoStructureFound";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::EmptyContext: return "EmptyContext";
    case ErrorCode::OversizedAttachment: return "OversizedAttachment";
    case ErrorCode::InvalidObjective: return "InvalidObjective";
    case ErrorCode::ObjectiveValidationFailure: return "ObjectiveValidationFailure";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::DoubleApplication: return "DoubleApplication";
    case ErrorCode::MissingPlaceholder: return "MissingPlaceholder";
    case ErrorCode::ScoreParseFailure: return "ScoreParseFailure";
    case ErrorCode::ScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorCode::AllCandidatesFailed: return "AllCandidatesFailed";
    case ErrorCode::ExpertValidationFailure: return "ExpertValidationFailure";
    case ErrorCode::ToolValidationFailure: return "ToolValidationFailure";
    case ErrorCode::CodegenFailure: return "CodegenFailure";
    case ErrorCode::PipelineFailed: return "PipelineFailed";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::Conflict: return "Conflict";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Internal: return "Internal";
  }
  return "Internal";
}

std::optional<ErrorCode> parse_error_code(std::string_view name) noexcept {
  for (int i = 0; i <= static_cast<int>(ErrorCode::Internal); ++i) {
    const auto code = static_cast<ErrorCode>(i);
    if (to_string(code) == name) return code;
  }
  return std::nullopt;
}

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotFound:
      return 404;
    case ErrorCode::Conflict:
      return 409;
    case ErrorCode::EmptyContext:
    case ErrorCode::OversizedAttachment:
    case ErrorCode::InvalidObjective:
    case ErrorCode::InvalidArgument:
    case ErrorCode::ImageNotSupported:
      return 422;
    case ErrorCode::ProviderUnreachable:
    case ErrorCode::RoleNotConfigured:
      return 502;
    default:
      return 500;
  }
}

}  // namespace jitsteer
