#pragma once

#include <string_view>
#include <vector>

#include "jitsteer/prompt_template.hpp"

/// Prompt library. Texts live under prompts/ in the source tree and are
/// embedded at build time.
namespace jitsteer::prompts {

inline constexpr std::string_view kFormatTemplatesVersion = "formats-v1";
inline constexpr std::string_view kHelperContractVersion = "helpers-v1";

// Core prompts, stored verbatim.
PromptTemplate objective_induction();
PromptTemplate expertise_generation();
PromptTemplate background_retrieval();
PromptTemplate tool_generation();
PromptTemplate relevance_evaluation();
PromptTemplate ui_codegen();
PromptTemplate ui_critique();

// Authored prompts.
PromptTemplate format_selection();
/// Expert persona joined with the instructions for one output format:
/// "feedback", "brainstorm" or "line_editor".
PromptTemplate expert_response(std::string_view format_key);
PromptTemplate feedback_synthesis();
/// Plain feedback generator used as the baseline and best-of-N generator.
PromptTemplate feedback_generator();
PromptTemplate pairwise_judge();
PromptTemplate helper_expert();

/// museService.js source attached to UI code generation requests.
std::string_view helper_contract_source();

/// Generator-side templates accepted by best-of-N and replay evaluation,
/// keyed "feedback", "expertise", "tools".
PromptTemplate generator_by_name(std::string_view name);

/// Every template in the library.
std::vector<PromptTemplate> all();

}  // namespace jitsteer::prompts
