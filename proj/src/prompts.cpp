#include "jitsteer/prompts.hpp"

#include <string>

#include "jitsteer/prompt_data.hpp"

namespace jitsteer::prompts {

namespace pd = prompt_data;

PromptTemplate objective_induction() { return make_template("objective_induction", std::string(pd::kPrompt_objective_induction)); }
PromptTemplate expertise_generation() { return make_template("expertise_generation", std::string(pd::kPrompt_expertise_generation)); }
PromptTemplate background_retrieval() { return make_template("background_retrieval", std::string(pd::kPrompt_background_retrieval)); }
PromptTemplate tool_generation() { return make_template("tool_generation", std::string(pd::kPrompt_tool_generation)); }
PromptTemplate relevance_evaluation() { return make_template("relevance_evaluation", std::string(pd::kPrompt_relevance_evaluation)); }
PromptTemplate ui_codegen() { return make_template("ui_codegen", std::string(pd::kPrompt_ui_codegen)); }
PromptTemplate ui_critique() { return make_template("ui_critique", std::string(pd::kPrompt_ui_critique)); }

PromptTemplate format_selection() { return make_template("format_selection", std::string(pd::kPrompt_format_selection)); }

PromptTemplate expert_response(std::string_view format_key) {
  std::string_view instructions;
  if (format_key == "feedback") instructions = pd::kPrompt_format_feedback;
  else if (format_key == "brainstorm") instructions = pd::kPrompt_format_brainstorm;
  else if (format_key == "line_editor") instructions = pd::kPrompt_format_line_editor;
  else throw Error(ErrorCode::InvalidArgument, "unknown output format '" + std::string(format_key) + "'");
  return make_template("expert_" + std::string(format_key),
                       std::string(pd::kPrompt_expert_persona) + std::string(instructions));
}

PromptTemplate feedback_synthesis() { return make_template("feedback_synthesis", std::string(pd::kPrompt_feedback_synthesis)); }
PromptTemplate feedback_generator() { return make_template("feedback_generator", std::string(pd::kPrompt_feedback_generator)); }
PromptTemplate pairwise_judge() { return make_template("pairwise_judge", std::string(pd::kPrompt_pairwise_judge)); }
PromptTemplate helper_expert() { return make_template("helper_expert", std::string(pd::kPrompt_helper_expert)); }

std::string_view helper_contract_source() { return pd::kPrompt_helper_contract; }

PromptTemplate generator_by_name(std::string_view name) {
  if (name == "feedback") return feedback_generator();
  if (name == "expertise") return expertise_generation();
  if (name == "tools") return tool_generation();
  throw Error(ErrorCode::InvalidArgument, "unknown generator template '" + std::string(name) + "'");
}

std::vector<PromptTemplate> all() {
  return {objective_induction(),        expertise_generation(),          background_retrieval(),
          tool_generation(),            relevance_evaluation(),          ui_codegen(),
          ui_critique(),                format_selection(),              expert_response("feedback"),
          expert_response("brainstorm"), expert_response("line_editor"), feedback_synthesis(),
          feedback_generator(),         pairwise_judge(),                helper_expert()};
}

}  // namespace jitsteer::prompts
