#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jitsteer/context.hpp"
#include "jitsteer/run_context.hpp"

namespace jitsteer {

enum class OutputFormat { Feedback, Brainstorm, LineEditor };

/// Display name: "Feedback", "Brainstorm", "Line Editor".
std::string_view to_string(OutputFormat format) noexcept;
/// Key used for prompt files and the CLI: "feedback", "brainstorm", "line_editor".
std::string_view format_key(OutputFormat format) noexcept;
/// Accepts display names and keys, case-insensitive, with '-', '_' or ' '
/// between words. Throws Error(InvalidArgument).
OutputFormat parse_output_format(std::string_view text);
/// The format whose name occurs earliest in a free-text reply.
std::optional<OutputFormat> find_output_format(std::string_view reply);

inline constexpr std::string_view kNoRetrievalMarker = "[no retrieval]";
inline constexpr std::string_view kParagraphTruncationMarker = "[…truncated…]";

struct ExpertSpec {
  std::string name;
  std::string description;
  std::string background;
  std::optional<double> relevance_score;
  std::string entity_kind;  // free tag: person, community, concept, style, ...
  bool degraded = false;    // background is the description plus kNoRetrievalMarker
};

void to_json(Json& j, const ExpertSpec& e);
void from_json(const Json& j, ExpertSpec& e);

/// Reply shape for entity proposals: {entities: [{name, description, entity_kind?}]}.
Schema expert_list_schema();

/// Entities for the snapshot under the objective. More than `limit`
/// entities after one corrective retry is Error(ExpertValidationFailure).
std::vector<ExpertSpec> propose_experts(const RunContext& ctx, const ContextSnapshot& snapshot,
                                        const Objective& objective, int limit = 3);

/// Splits on blank lines; paragraphs are trimmed and non-empty.
std::vector<std::string> split_paragraphs(std::string_view text);

/// Text unchanged when it has at most `max` paragraphs, otherwise the first
/// `max` followed by kParagraphTruncationMarker.
std::string cap_paragraphs(std::string_view text, std::size_t max = 3);

/// Fills the background from the search role. An unconfigured or unreachable
/// search role degrades to the description plus kNoRetrievalMarker and a
/// warning instead of failing.
ExpertSpec enrich_expert(const RunContext& ctx, ExpertSpec expert, const Objective& objective);
std::vector<ExpertSpec> enrich_experts(const RunContext& ctx, std::vector<ExpertSpec> experts,
                                       const Objective& objective);

/// What the scorer sees for one expert.
std::string expert_component_description(const ExpertSpec& expert);

/// Stable sort by relevance (descending, proposal order on ties), then the
/// first `keep`. Unscored entries are dropped.
std::vector<ExpertSpec> keep_top(std::vector<ExpertSpec> scored, std::size_t keep);

/// Scores every candidate and keeps the top `keep`. A candidate whose score
/// call fails is left out with a warning.
std::vector<ExpertSpec> select_experts(const RunContext& ctx, std::vector<ExpertSpec> candidates,
                                       const Objective& objective, std::size_t keep = 3);

/// Objective-conditioned choice of output format. A reply naming no format,
/// twice, falls back to Feedback with a warning.
OutputFormat select_output_format(const RunContext& ctx, const ContextSnapshot& snapshot, const Objective& objective);

struct ExpertRunInput {
  /// Content the experts respond to; the snapshot's context block when empty.
  std::string user_input;
  /// Line Editor scope; the snapshot text when absent.
  std::optional<std::string> highlight;
};

struct LineEdit {
  std::string original;
  std::string replacement;
  std::string rationale;
};

struct ExpertSection {
  std::string expert;
  std::string text;
  std::string status = "ok";  // ok | failed
  std::string error;
  std::vector<std::string> ideas;  // Brainstorm
  std::vector<LineEdit> edits;     // Line Editor
};

struct ExpertOutput {
  std::vector<ExpertSpec> experts;
  OutputFormat format = OutputFormat::Feedback;
  std::vector<ExpertSection> sections;
  std::optional<std::string> synthesis;  // Feedback only
};

Json to_json(const ExpertOutput& out);

/// One generator call per expert (concurrently), then for Feedback a
/// synthesis call over the successful sections. A failed expert yields a
/// failed section; all failing is Error(PipelineFailed).
ExpertOutput run_experts(const RunContext& ctx, const ContextSnapshot& snapshot, const Objective& objective,
                         const std::vector<ExpertSpec>& experts, OutputFormat format, const ExpertRunInput& input = {});

struct ExpertsConfig {
  int propose_limit = 3;
  std::size_t keep = 3;
  std::optional<OutputFormat> format;  // chosen by the evaluator when absent
  ExpertRunInput input;
};

/// propose → enrich → select → format → run.
ExpertOutput run_expertise_pipeline(const RunContext& ctx, const ContextSnapshot& snapshot,
                                    const Objective& objective, const ExpertsConfig& config = {});

}  // namespace jitsteer
