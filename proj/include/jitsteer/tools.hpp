#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "jitsteer/context.hpp"
#include "jitsteer/experts.hpp"
#include "jitsteer/run_context.hpp"

namespace jitsteer {

struct ToolDesign {
  std::string name;
  std::string description;
  std::string input_type;
  std::string output_type;
  std::vector<std::string> interface_features;
  std::vector<std::string> expected_user_behavior;
  std::string design_guidelines;
  std::optional<double> relevance_score;
};

void to_json(Json& j, const ToolDesign& d);
void from_json(const Json& j, ToolDesign& d);

struct CritiqueEntry {
  std::string critique;
  std::string code_before_hash;
  std::string code_after_hash;  // equals code_before_hash when the round was rejected
  bool accepted = false;
  std::vector<std::string> rejection_reasons;
};

void to_json(Json& j, const CritiqueEntry& c);
void from_json(const Json& j, CritiqueEntry& c);

struct GeneratedTool {
  ToolDesign design;
  std::vector<ExpertSpec> experts;
  std::string code;
  std::vector<CritiqueEntry> critique_history;
  std::string helper_contract_version;
};

void to_json(Json& j, const GeneratedTool& t);
void from_json(const Json& j, GeneratedTool& t);

/// Component framework named in the codegen prompt.
inline constexpr std::string_view kComponentType = "single-file HTML (markup with an inline <script>)";

/// Reply shape for design proposals: {patterns: [ToolDesign fields]}.
Schema tool_list_schema();

/// Design patterns for the snapshot under the objective. Designs without a
/// name, description or interface feature, or more than `limit` of them, get
/// one corrective retry before Error(ToolValidationFailure).
std::vector<ToolDesign> propose_tools(const RunContext& ctx, const ContextSnapshot& snapshot,
                                      const Objective& objective, int limit = 3);

/// What the scorer sees for one design.
std::string tool_component_description(const ToolDesign& design);

/// Scores every candidate in place and returns the argmax index (proposal
/// order on ties).
std::size_t select_tool(const RunContext& ctx, std::vector<ToolDesign>& candidates, const Objective& objective);

/// Generates the tool code. Replies failing the static gates get one
/// corrective retry listing the findings, then Error(CodegenFailure).
GeneratedTool synthesize_ui(const RunContext& ctx, const ToolDesign& design, const std::vector<ExpertSpec>& experts,
                            const Objective& objective);

/// Evaluator-driven refinement. Each round appends a history entry; a round
/// whose code drops an id/class token or helper call site, or fails the
/// static gates, keeps the previous code. An unparseable reply skips the
/// round with a warning.
GeneratedTool critique_and_refine(const RunContext& ctx, GeneratedTool tool, const Objective& objective,
                                  int rounds = 1);

struct ToolsConfig {
  int propose_limit = 3;
  bool with_experts = false;
  ExpertsConfig experts;
  int rounds = 1;
};

struct ToolRunResult {
  std::vector<ToolDesign> candidates;
  std::size_t selected = 0;
  GeneratedTool tool;
};

Json to_json(const ToolRunResult& r);

/// propose → select → (experts) → synthesize → critique.
ToolRunResult run_tool_pipeline(const RunContext& ctx, const ContextSnapshot& snapshot, const Objective& objective,
                                const ToolsConfig& config = {});

/// design.json, tool.html, critique_history.json and tool.json under `dir`.
void write_tool_outputs(const std::filesystem::path& dir, const ToolRunResult& result);

/// Entities as getExperts() returns them: [{id, name, description}].
Json helper_experts(const std::vector<ExpertSpec>& experts);

/// Serves one helper call from a generated tool. getExperts returns the
/// entity list; the prompt helpers return text. promptEntity is an alias of
/// promptExpert. Throws Error(NotFound) for unknown helpers or experts and
/// Error(InvalidArgument) for malformed args.
Json invoke_helper(const RunContext& ctx, const GeneratedTool& tool, const Objective& objective, std::string_view name,
                   const Json& args);

}  // namespace jitsteer
