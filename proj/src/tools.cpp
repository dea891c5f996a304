#include "jitsteer/tools.hpp"

#include "jitsteer/fs_util.hpp"
#include "jitsteer/hash.hpp"
#include "jitsteer/prompts.hpp"
#include "jitsteer/steering.hpp"
#include "jitsteer/ui_gates.hpp"

namespace jitsteer {

namespace {

bool blank(std::string_view s) { return s.find_first_not_of(" \t\r\n") == std::string_view::npos; }

std::vector<std::string> string_list(const Json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  const Json& v = j.at(key);
  if (v.is_string()) {
    out.push_back(v.get<std::string>());
  } else if (v.is_array()) {
    for (const auto& item : v) {
      if (item.is_string()) out.push_back(item.get<std::string>());
    }
  }
  return out;
}

std::string text_field(const Json& j, const char* key) {
  if (!j.contains(key)) return {};
  const Json& v = j.at(key);
  return v.is_string() ? v.get<std::string>() : v.dump();
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += sep;
    out += s;
  }
  return out;
}

}  // namespace

void to_json(Json& j, const ToolDesign& d) {
  j = Json{{"name", d.name},
           {"description", d.description},
           {"input_type", d.input_type},
           {"output_type", d.output_type},
           {"interface_features", d.interface_features},
           {"expected_user_behavior", d.expected_user_behavior},
           {"design_guidelines", d.design_guidelines}};
  j["relevance_score"] = d.relevance_score ? Json(*d.relevance_score) : Json();
}

void from_json(const Json& j, ToolDesign& d) {
  d.name = text_field(j, "name");
  d.description = text_field(j, "description");
  d.input_type = text_field(j, "input_type");
  d.output_type = text_field(j, "output_type");
  d.interface_features = string_list(j, "interface_features");
  d.expected_user_behavior = string_list(j, "expected_user_behavior");
  d.design_guidelines = text_field(j, "design_guidelines");
  d.relevance_score.reset();
  if (j.contains("relevance_score") && j.at("relevance_score").is_number()) {
    d.relevance_score = j.at("relevance_score").get<double>();
  }
}

void to_json(Json& j, const CritiqueEntry& c) {
  j = Json{{"critique", c.critique},
           {"code_before_hash", c.code_before_hash},
           {"code_after_hash", c.code_after_hash},
           {"accepted", c.accepted},
           {"rejection_reasons", c.rejection_reasons}};
}

void from_json(const Json& j, CritiqueEntry& c) {
  c.critique = j.at("critique").get<std::string>();
  c.code_before_hash = j.at("code_before_hash").get<std::string>();
  c.code_after_hash = j.at("code_after_hash").get<std::string>();
  c.accepted = j.value("accepted", false);
  c.rejection_reasons = j.value("rejection_reasons", std::vector<std::string>{});
}

void to_json(Json& j, const GeneratedTool& t) {
  j = Json{{"design", t.design},
           {"experts", t.experts},
           {"code", t.code},
           {"critique_history", t.critique_history},
           {"helper_contract_version", t.helper_contract_version}};
}

void from_json(const Json& j, GeneratedTool& t) {
  t.design = j.at("design").get<ToolDesign>();
  t.experts = j.value("experts", std::vector<ExpertSpec>{});
  t.code = j.at("code").get<std::string>();
  t.critique_history = j.value("critique_history", std::vector<CritiqueEntry>{});
  t.helper_contract_version = j.value("helper_contract_version", "");
}

Schema tool_list_schema() {
  auto text_list = [](const char* d) { return Schema::array(Schema::string(), d); };
  return Schema::object({{"patterns",
                          Schema::array(Schema::object({
                              {"name", Schema::string("name of the design pattern"), true},
                              {"description", Schema::string("what the tool does for the user"), true},
                              {"input_type", Schema::any("what the user provides"), false},
                              {"output_type", Schema::any("what the tool returns"), false},
                              {"interface_features", text_list("interface elements the tool offers"), false},
                              {"expected_user_behavior", text_list("how the user is expected to interact"), false},
                              {"design_guidelines", Schema::any("guidelines for the interface design"), false},
                          })),
                          true}});
}

std::vector<ToolDesign> propose_tools(const RunContext& ctx, const ContextSnapshot& snapshot,
                                      const Objective& objective, int limit) {
  if (limit < 1) throw Error(ErrorCode::InvalidArgument, "tool limit must be >= 1");
  const auto t = gen_objective(prompts::tool_generation(), objective);
  CompletionRequest req;
  req.role = ProviderRole::Generator;
  req.parts = render_parts(t, {{"limit", std::to_string(limit)}, {"json_schema", tool_list_schema().to_json_schema().dump(2)}},
                           {{"context", render_context_block(snapshot)}});
  req.mode = ResponseMode::Structured;
  req.structure = tool_list_schema();
  req.validation_failure = ErrorCode::ToolValidationFailure;
  req.validator = [limit](const CompletionResult& r) -> std::optional<std::string> {
    const auto& patterns = r.parsed->at("patterns");
    if (patterns.empty()) return "no design patterns returned";
    if (patterns.size() > static_cast<std::size_t>(limit)) {
      return std::to_string(patterns.size()) + " design patterns returned, at most " + std::to_string(limit) +
             " allowed";
    }
    for (std::size_t i = 0; i < patterns.size(); ++i) {
      const auto d = patterns[i].get<ToolDesign>();
      const auto where = "pattern " + std::to_string(i);
      if (blank(d.name)) return where + " has an empty name";
      if (blank(d.description)) return where + " has an empty description";
      if (std::none_of(d.interface_features.begin(), d.interface_features.end(),
                       [](const std::string& f) { return !blank(f); })) {
        return where + " lists no interface_features";
      }
    }
    return std::nullopt;
  };
  const auto result = ctx.complete(std::move(req));
  std::vector<ToolDesign> out;
  for (const auto& p : result.parsed->at("patterns")) out.push_back(p.get<ToolDesign>());
  return out;
}

std::string tool_component_description(const ToolDesign& d) {
  std::string out = "Name: " + d.name + "\nDescription: " + d.description;
  if (!d.input_type.empty()) out += "\nInput: " + d.input_type;
  if (!d.output_type.empty()) out += "\nOutput: " + d.output_type;
  if (!d.interface_features.empty()) out += "\nInterface features: " + join(d.interface_features, "; ");
  if (!d.expected_user_behavior.empty()) out += "\nExpected user behavior: " + join(d.expected_user_behavior, "; ");
  if (!d.design_guidelines.empty()) out += "\nDesign guidelines: " + d.design_guidelines;
  return out;
}

std::size_t select_tool(const RunContext& ctx, std::vector<ToolDesign>& candidates, const Objective& objective) {
  if (candidates.empty()) throw Error(ErrorCode::EmptySet, "no tool designs to select from");
  parallel_for(candidates.size(), ctx.fan_out(ProviderRole::Evaluator), [&](std::size_t i) {
    candidates[i].relevance_score = score(ctx, tool_component_description(candidates[i]), objective);
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (*candidates[i].relevance_score > *candidates[best].relevance_score) best = i;
  }
  return best;
}

namespace {

std::string render_entities(const std::vector<ExpertSpec>& experts) {
  if (experts.empty()) return "(none)";
  std::string out;
  for (std::size_t i = 0; i < experts.size(); ++i) {
    out += "- id: " + std::to_string(i) + "\n  name: " + experts[i].name + "\n  description: " +
           experts[i].description + "\n";
  }
  return out;
}

std::string render_pattern(const ToolDesign& design) {
  Json j = design;
  j.erase("relevance_score");
  return j.dump(2);
}

std::string findings_text(const std::vector<std::string>& findings) { return join(findings, "; "); }

}  // namespace

GeneratedTool synthesize_ui(const RunContext& ctx, const ToolDesign& design, const std::vector<ExpertSpec>& experts,
                            const Objective& objective) {
  const auto t = gen_objective(prompts::ui_codegen(), objective);
  CompletionRequest req;
  req.role = ProviderRole::UiCodegen;
  req.parts = render_parts(t, {{"entities", render_entities(experts)},
                               {"patterns", render_pattern(design)},
                               {"component_type", std::string(kComponentType)}});
  append_text(req.parts, "\n\nATTACHED FILE museService.js:\n" + std::string(prompts::helper_contract_source()));
  req.max_retries = 1;
  req.max_validation_retries = 1;
  req.validation_failure = ErrorCode::CodegenFailure;
  req.contract = "one renderable " + std::string(kComponentType) +
                 " that reaches models only through the museService helpers";
  req.validator = [](const CompletionResult& r) -> std::optional<std::string> {
    const auto findings = ui::run_static_gates(ui::extract_code(r.raw_text));
    if (findings.empty()) return std::nullopt;
    return "static checks failed: " + findings_text(findings);
  };
  const auto result = ctx.complete(std::move(req));

  GeneratedTool tool;
  tool.design = design;
  tool.experts = experts;
  tool.code = ui::extract_code(result.raw_text);
  tool.helper_contract_version = std::string(prompts::kHelperContractVersion);
  return tool;
}

GeneratedTool critique_and_refine(const RunContext& ctx, GeneratedTool tool, const Objective& objective, int rounds) {
  if (rounds < 0) throw Error(ErrorCode::InvalidArgument, "rounds must be >= 0");
  const auto t = eval_objective(prompts::ui_critique(), objective);
  const Schema schema = Schema::object({{"critique", Schema::string(), true}, {"improved_html", Schema::string(), true}});
  for (int round = 1; round <= rounds; ++round) {
    CompletionRequest req;
    req.role = ProviderRole::Evaluator;
    req.parts = render_parts(t, {{"result", tool.code}});
    req.mode = ResponseMode::Structured;
    req.structure = schema;
    req.max_retries = 1;
    CompletionResult result;
    try {
      result = ctx.complete(std::move(req));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::StructureParseFailure) throw;
      ctx.warn("critique round " + std::to_string(round) + " skipped: " + e.detail());
      continue;
    }
    CritiqueEntry entry;
    entry.critique = result.parsed->at("critique").get<std::string>();
    entry.code_before_hash = sha256_hex(tool.code);
    const std::string improved = ui::extract_code(result.parsed->at("improved_html").get<std::string>());
    entry.rejection_reasons = ui::check_preservation(tool.code, improved);
    for (auto& f : ui::run_static_gates(improved)) entry.rejection_reasons.push_back(std::move(f));
    entry.accepted = entry.rejection_reasons.empty();
    if (entry.accepted) {
      tool.code = improved;
    } else {
      ctx.warn("critique round " + std::to_string(round) + " rejected: " + findings_text(entry.rejection_reasons));
    }
    entry.code_after_hash = sha256_hex(tool.code);
    tool.critique_history.push_back(std::move(entry));
  }
  return tool;
}

Json to_json(const ToolRunResult& r) {
  return Json{{"candidates", r.candidates}, {"selected", r.selected}, {"tool", r.tool}};
}

ToolRunResult run_tool_pipeline(const RunContext& ctx, const ContextSnapshot& snapshot, const Objective& objective,
                                const ToolsConfig& config) {
  ToolRunResult out;
  out.candidates = propose_tools(ctx, snapshot, objective, config.propose_limit);
  out.selected = select_tool(ctx, out.candidates, objective);
  std::vector<ExpertSpec> experts;
  if (config.with_experts) {
    auto proposed = propose_experts(ctx, snapshot, objective, config.experts.propose_limit);
    auto enriched = enrich_experts(ctx, std::move(proposed), objective);
    experts = select_experts(ctx, std::move(enriched), objective, config.experts.keep);
  }
  auto tool = synthesize_ui(ctx, out.candidates[out.selected], experts, objective);
  out.tool = critique_and_refine(ctx, std::move(tool), objective, config.rounds);
  return out;
}

void write_tool_outputs(const std::filesystem::path& dir, const ToolRunResult& result) {
  std::filesystem::create_directories(dir);
  write_json_atomic(dir / "design.json", Json(result.tool.design));
  write_json_atomic(dir / "candidates.json", Json(result.candidates));
  write_file_atomic(dir / "tool.html", result.tool.code);
  write_json_atomic(dir / "critique_history.json", Json(result.tool.critique_history));
  write_json_atomic(dir / "tool.json", Json(result.tool));
}

Json helper_experts(const std::vector<ExpertSpec>& experts) {
  Json out = Json::array();
  for (std::size_t i = 0; i < experts.size(); ++i) {
    out.push_back({{"id", std::to_string(i)}, {"name", experts[i].name}, {"description", experts[i].description}});
  }
  return out;
}

namespace {

const ExpertSpec& find_expert(const std::vector<ExpertSpec>& experts, const Json& id) {
  if (id.is_number_integer()) {
    const auto i = id.get<long long>();
    if (i >= 0 && static_cast<std::size_t>(i) < experts.size()) return experts[static_cast<std::size_t>(i)];
  } else if (id.is_string()) {
    const auto s = id.get<std::string>();
    for (std::size_t i = 0; i < experts.size(); ++i) {
      if (s == std::to_string(i) || s == experts[i].name) return experts[i];
    }
  }
  throw Error(ErrorCode::NotFound, "no expert with id " + id.dump());
}

std::string prompt_arg(const Json& args, std::size_t index) {
  if (!args.is_array() || args.size() <= index || !args[index].is_string()) {
    throw Error(ErrorCode::InvalidArgument, "argument " + std::to_string(index) + " must be a prompt string");
  }
  return args[index].get<std::string>();
}

}  // namespace

Json invoke_helper(const RunContext& ctx, const GeneratedTool& tool, const Objective& objective, std::string_view name,
                   const Json& args) {
  if (!args.is_array()) throw Error(ErrorCode::InvalidArgument, "args must be an array");
  if (name == "getExperts") return helper_experts(tool.experts);
  CompletionRequest req;
  req.role = ProviderRole::Generator;
  if (name == "promptExpert" || name == "promptEntity") {
    if (args.empty()) throw Error(ErrorCode::InvalidArgument, "missing expert id");
    const auto& expert = find_expert(tool.experts, args[0]);
    const auto t = gen_objective(prompts::helper_expert(), objective);
    req.parts = render_parts(t, {{"expert_name", expert.name},
                                 {"expert_description", expert.description},
                                 {"expert_background", expert.background.empty() ? expert.description : expert.background},
                                 {"request", prompt_arg(args, 1)}});
  } else if (name == "promptGeneral") {
    const auto t = gen_objective(make_template("helper_general", escape_braces(prompt_arg(args, 0))), objective);
    req.parts = render_parts(t, {});
  } else {
    throw Error(ErrorCode::NotFound, "unknown helper '" + std::string(name) + "'");
  }
  return ctx.complete(std::move(req)).raw_text;
}

}  // namespace jitsteer
