#include "jitsteer/experts.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "jitsteer/prompts.hpp"
#include "jitsteer/steering.hpp"

namespace jitsteer {

namespace {

constexpr std::array<OutputFormat, 3> kFormats = {OutputFormat::Feedback, OutputFormat::Brainstorm,
                                                  OutputFormat::LineEditor};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool blank(std::string_view s) { return s.find_first_not_of(" \t\r\n") == std::string_view::npos; }

PromptParts user_content(const ContextSnapshot& snapshot, const ExpertRunInput& input) {
  if (!blank(input.user_input)) return {input.user_input};
  return render_context_block(snapshot);
}

Schema ideas_schema() {
  return Schema::object({{"ideas", Schema::array(Schema::string()), true}});
}

Schema edits_schema() {
  return Schema::object({{"edits",
                          Schema::array(Schema::object({{"original", Schema::string(), true},
                                                        {"replacement", Schema::string(), true},
                                                        {"rationale", Schema::string(), false}})),
                          true}});
}

}  // namespace

std::string_view to_string(OutputFormat format) noexcept {
  switch (format) {
    case OutputFormat::Feedback: return "Feedback";
    case OutputFormat::Brainstorm: return "Brainstorm";
    case OutputFormat::LineEditor: return "Line Editor";
  }
  return "Feedback";
}

std::string_view format_key(OutputFormat format) noexcept {
  switch (format) {
    case OutputFormat::Feedback: return "feedback";
    case OutputFormat::Brainstorm: return "brainstorm";
    case OutputFormat::LineEditor: return "line_editor";
  }
  return "feedback";
}

OutputFormat parse_output_format(std::string_view text) {
  std::string key = lower(trim(text));
  std::replace(key.begin(), key.end(), '-', '_');
  std::replace(key.begin(), key.end(), ' ', '_');
  for (auto f : kFormats) {
    if (key == format_key(f)) return f;
  }
  if (key == "lineeditor") return OutputFormat::LineEditor;
  throw Error(ErrorCode::InvalidArgument, "unknown output format '" + std::string(text) + "'");
}

std::optional<OutputFormat> find_output_format(std::string_view reply) {
  const std::string text = lower(reply);
  std::optional<OutputFormat> best;
  std::size_t best_pos = std::string::npos;
  for (auto f : kFormats) {
    for (std::string_view name : {to_string(f), format_key(f)}) {
      const auto pos = text.find(lower(name));
      if (pos < best_pos) {
        best_pos = pos;
        best = f;
      }
    }
  }
  return best;
}

void to_json(Json& j, const ExpertSpec& e) {
  j = Json{{"name", e.name}, {"description", e.description}, {"background", e.background}};
  j["relevance_score"] = e.relevance_score ? Json(*e.relevance_score) : Json();
  if (!e.entity_kind.empty()) j["entity_kind"] = e.entity_kind;
  if (e.degraded) j["degraded"] = true;
}

void from_json(const Json& j, ExpertSpec& e) {
  e.name = j.at("name").get<std::string>();
  e.description = j.at("description").get<std::string>();
  e.background = j.value("background", "");
  if (j.contains("relevance_score") && !j.at("relevance_score").is_null()) {
    e.relevance_score = j.at("relevance_score").get<double>();
  }
  e.entity_kind = j.value("entity_kind", "");
  e.degraded = j.value("degraded", false);
}

Schema expert_list_schema() {
  return Schema::object({{"entities",
                          Schema::array(Schema::object({
                              {"name", Schema::string("name of the entity"), true},
                              {"description", Schema::string("who or what the entity is and why it helps"), true},
                              {"entity_kind",
                               Schema::string("person, community, school-of-thought, fictional, concept or style"),
                               false},
                          })),
                          true}});
}

std::vector<ExpertSpec> propose_experts(const RunContext& ctx, const ContextSnapshot& snapshot,
                                        const Objective& objective, int limit) {
  if (limit < 1) throw Error(ErrorCode::InvalidArgument, "expert limit must be >= 1");
  const auto t = gen_objective(prompts::expertise_generation(), objective);
  CompletionRequest req;
  req.role = ProviderRole::Generator;
  req.parts = render_parts(t, {{"limit", std::to_string(limit)}, {"json_schema", expert_list_schema().to_json_schema().dump(2)}},
                           {{"context", render_context_block(snapshot)}});
  req.mode = ResponseMode::Structured;
  req.structure = expert_list_schema();
  req.validation_failure = ErrorCode::ExpertValidationFailure;
  req.validator = [limit](const CompletionResult& r) -> std::optional<std::string> {
    const auto& entities = r.parsed->at("entities");
    if (entities.empty()) return "no entities returned";
    if (entities.size() > static_cast<std::size_t>(limit)) {
      return std::to_string(entities.size()) + " entities returned, at most " + std::to_string(limit) + " allowed";
    }
    for (std::size_t i = 0; i < entities.size(); ++i) {
      if (blank(entities[i].at("name").get<std::string>())) return "entity " + std::to_string(i) + " has an empty name";
      if (blank(entities[i].at("description").get<std::string>())) {
        return "entity " + std::to_string(i) + " has an empty description";
      }
    }
    return std::nullopt;
  };
  const auto result = ctx.complete(std::move(req));
  std::vector<ExpertSpec> out;
  for (const auto& e : result.parsed->at("entities")) {
    ExpertSpec spec;
    spec.name = trim(e.at("name").get<std::string>());
    spec.description = trim(e.at("description").get<std::string>());
    if (e.contains("entity_kind") && e.at("entity_kind").is_string()) spec.entity_kind = e.at("entity_kind");
    out.push_back(std::move(spec));
  }
  return out;
}

std::vector<std::string> split_paragraphs(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  std::size_t pos = 0;
  auto flush = [&] {
    if (!blank(current)) out.push_back(trim(current));
    current.clear();
  };
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    if (blank(line)) {
      flush();
    } else {
      if (!current.empty()) current += '\n';
      current += line;
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  flush();
  return out;
}

std::string cap_paragraphs(std::string_view text, std::size_t max) {
  const auto paragraphs = split_paragraphs(text);
  if (paragraphs.size() <= max) return std::string(text);
  std::string out;
  for (std::size_t i = 0; i < max; ++i) out += paragraphs[i] + "\n\n";
  out += kParagraphTruncationMarker;
  return out;
}

ExpertSpec enrich_expert(const RunContext& ctx, ExpertSpec expert, const Objective& objective) {
  if (blank(expert.name) || blank(expert.description)) {
    throw Error(ErrorCode::InvalidArgument, "expert needs a name and description before enrichment");
  }
  auto degrade = [&](const std::string& why) {
    expert.background = expert.description + "\n\n" + std::string(kNoRetrievalMarker);
    expert.degraded = true;
    ctx.warn("background retrieval for '" + expert.name + "' unavailable: " + why);
    return expert;
  };
  const auto t = gen_objective(prompts::background_retrieval(), objective);
  CompletionRequest req;
  req.role = ProviderRole::Search;
  req.parts = render_parts(t, {{"entity_name", expert.name}, {"entity_desc", expert.description}});
  std::string reply;
  try {
    reply = ctx.complete(std::move(req)).raw_text;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::RoleNotConfigured || e.code() == ErrorCode::ProviderUnreachable) return degrade(e.what());
    throw;
  }
  if (blank(reply)) return degrade("empty reply");
  expert.background = cap_paragraphs(reply, 3);
  expert.degraded = false;
  return expert;
}

std::vector<ExpertSpec> enrich_experts(const RunContext& ctx, std::vector<ExpertSpec> experts,
                                       const Objective& objective) {
  const std::size_t workers = ctx.gateway->configured(ProviderRole::Search) ? ctx.fan_out(ProviderRole::Search) : 1;
  parallel_for(experts.size(), workers,
               [&](std::size_t i) { experts[i] = enrich_expert(ctx, std::move(experts[i]), objective); });
  return experts;
}

std::string expert_component_description(const ExpertSpec& expert) {
  std::string out = "Name: " + expert.name + "\nDescription: " + expert.description;
  if (!expert.background.empty()) out += "\nBackground: " + expert.background;
  return out;
}

std::vector<ExpertSpec> keep_top(std::vector<ExpertSpec> scored, std::size_t keep) {
  std::erase_if(scored, [](const ExpertSpec& e) { return !e.relevance_score; });
  std::stable_sort(scored.begin(), scored.end(),
                   [](const ExpertSpec& a, const ExpertSpec& b) { return *a.relevance_score > *b.relevance_score; });
  if (scored.size() > keep) scored.resize(keep);
  return scored;
}

std::vector<ExpertSpec> select_experts(const RunContext& ctx, std::vector<ExpertSpec> candidates,
                                       const Objective& objective, std::size_t keep) {
  std::vector<std::optional<Error>> failures(candidates.size());
  parallel_for(candidates.size(), ctx.fan_out(ProviderRole::Evaluator), [&](std::size_t i) {
    try {
      candidates[i].relevance_score = score(ctx, expert_component_description(candidates[i]), objective);
    } catch (const Error& e) {
      failures[i] = e;
    }
  });
  std::size_t failed = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!failures[i]) continue;
    ++failed;
    ctx.warn("could not score expert '" + candidates[i].name + "': " + failures[i]->what());
  }
  if (!candidates.empty() && failed == candidates.size()) throw *failures.front();
  return keep_top(std::move(candidates), keep);
}

OutputFormat select_output_format(const RunContext& ctx, const ContextSnapshot& snapshot, const Objective& objective) {
  const auto t = eval_objective(prompts::format_selection(), objective);
  CompletionRequest req;
  req.role = ProviderRole::Evaluator;
  req.parts = render_parts(t, {}, {{"context", render_context_block(snapshot)}});
  req.max_retries = 1;
  req.contract = "the name of one output format (Feedback, Brainstorm, or Line Editor)";
  req.validator = [](const CompletionResult& r) -> std::optional<std::string> {
    if (find_output_format(r.raw_text)) return std::nullopt;
    return "reply names no output format";
  };
  try {
    return *find_output_format(ctx.complete(std::move(req)).raw_text);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SchemaMismatch) throw;
    ctx.warn("output format selection unparseable, using Feedback: " + e.detail());
    return OutputFormat::Feedback;
  }
}

namespace {

std::string render_ideas(const std::vector<std::string>& ideas) {
  std::string out;
  for (const auto& idea : ideas) out += "- " + idea + "\n";
  return out;
}

std::string render_edits(const std::vector<LineEdit>& edits) {
  std::string out;
  for (const auto& e : edits) {
    out += "- \"" + e.original + "\" -> \"" + e.replacement + "\"";
    if (!e.rationale.empty()) out += ": " + e.rationale;
    out += "\n";
  }
  return out;
}

ExpertSection run_one(const RunContext& ctx, const PromptTemplate& steered, const ExpertSpec& expert,
                      OutputFormat format, const PromptParts& content, const std::string& highlight) {
  ExpertSection section;
  section.expert = expert.name;
  CompletionRequest req;
  req.role = ProviderRole::Generator;
  TemplateValues values{{"expert_name", expert.name},
                        {"expert_description", expert.description},
                        {"expert_background", expert.background.empty() ? expert.description : expert.background}};
  if (format == OutputFormat::LineEditor) values["highlight"] = highlight;
  req.parts = render_parts(steered, values, {{"user_input", content}});
  if (format == OutputFormat::Brainstorm) {
    req.mode = ResponseMode::Structured;
    req.structure = ideas_schema();
  } else if (format == OutputFormat::LineEditor) {
    req.mode = ResponseMode::Structured;
    req.structure = edits_schema();
  }
  try {
    const auto result = ctx.complete(std::move(req));
    switch (format) {
      case OutputFormat::Feedback:
        section.text = trim(result.raw_text);
        break;
      case OutputFormat::Brainstorm:
        for (const auto& idea : result.parsed->at("ideas")) {
          if (!blank(idea.get<std::string>())) section.ideas.push_back(trim(idea.get<std::string>()));
        }
        section.text = render_ideas(section.ideas);
        break;
      case OutputFormat::LineEditor:
        for (const auto& e : result.parsed->at("edits")) {
          LineEdit edit{e.at("original"), e.at("replacement"), e.value("rationale", "")};
          if (edit.original.empty() || highlight.find(edit.original) == std::string::npos) {
            ctx.warn("dropped an edit from '" + expert.name + "' outside the highlighted text");
            continue;
          }
          section.edits.push_back(std::move(edit));
        }
        section.text = render_edits(section.edits);
        break;
    }
  } catch (const Error& e) {
    section.status = "failed";
    section.error = e.what();
    section.text.clear();
  }
  return section;
}

}  // namespace

ExpertOutput run_experts(const RunContext& ctx, const ContextSnapshot& snapshot, const Objective& objective,
                         const std::vector<ExpertSpec>& experts, OutputFormat format, const ExpertRunInput& input) {
  if (experts.empty()) throw Error(ErrorCode::InvalidArgument, "no experts to run");
  std::string highlight;
  if (format == OutputFormat::LineEditor) {
    if (input.highlight && !blank(*input.highlight)) {
      highlight = *input.highlight;
    } else if (snapshot.text) {
      highlight = *snapshot.text;
    } else {
      throw Error(ErrorCode::InvalidArgument, "line editing needs highlighted text or a text snapshot");
    }
  }
  const auto steered = gen_objective(prompts::expert_response(format_key(format)), objective);
  const auto content = user_content(snapshot, input);

  ExpertOutput out;
  out.experts = experts;
  out.format = format;
  out.sections.resize(experts.size());
  parallel_for(experts.size(), ctx.fan_out(ProviderRole::Generator), [&](std::size_t i) {
    out.sections[i] = run_one(ctx, steered, experts[i], format, content, highlight);
  });

  std::size_t failed = 0;
  for (const auto& s : out.sections) {
    if (s.status != "ok") {
      ++failed;
      ctx.warn("expert '" + s.expert + "' failed: " + s.error);
    }
  }
  if (failed == out.sections.size()) throw Error(ErrorCode::PipelineFailed, "every expert call failed");

  if (format == OutputFormat::Feedback) {
    std::string sections;
    for (const auto& s : out.sections) {
      if (s.status == "ok") sections += "EXPERT: " + s.expert + "\n" + s.text + "\n\n";
    }
    const auto t = gen_objective(prompts::feedback_synthesis(), objective);
    CompletionRequest req;
    req.role = ProviderRole::Generator;
    req.parts = render_parts(t, {{"sections", sections}});
    try {
      out.synthesis = trim(ctx.complete(std::move(req)).raw_text);
    } catch (const Error& e) {
      ctx.warn(std::string("synthesis failed: ") + e.what());
    }
  }
  return out;
}

Json to_json(const ExpertOutput& out) {
  Json doc;
  doc["experts"] = out.experts;
  doc["format"] = to_string(out.format);
  doc["sections"] = Json::array();
  Json ideas = Json::array();
  for (const auto& s : out.sections) {
    Json section = {{"expert", s.expert}, {"text", s.text}, {"status", s.status}};
    if (!s.error.empty()) section["error"] = s.error;
    if (out.format == OutputFormat::Brainstorm) {
      section["ideas"] = s.ideas;
      for (const auto& idea : s.ideas) ideas.push_back({{"expert", s.expert}, {"idea", idea}});
    }
    if (out.format == OutputFormat::LineEditor) {
      section["edits"] = Json::array();
      for (const auto& e : s.edits) {
        section["edits"].push_back({{"original", e.original}, {"replacement", e.replacement}, {"rationale", e.rationale}});
      }
    }
    doc["sections"].push_back(std::move(section));
  }
  if (out.format == OutputFormat::Brainstorm) doc["ideas"] = std::move(ideas);
  if (out.synthesis) doc["synthesis"] = *out.synthesis;
  return doc;
}

ExpertOutput run_expertise_pipeline(const RunContext& ctx, const ContextSnapshot& snapshot,
                                    const Objective& objective, const ExpertsConfig& config) {
  auto proposed = propose_experts(ctx, snapshot, objective, config.propose_limit);
  auto enriched = enrich_experts(ctx, std::move(proposed), objective);
  auto selected = select_experts(ctx, std::move(enriched), objective, config.keep);
  if (selected.empty()) throw Error(ErrorCode::PipelineFailed, "no expert survived selection");
  const OutputFormat format = config.format ? *config.format : select_output_format(ctx, snapshot, objective);
  return run_experts(ctx, snapshot, objective, selected, format, config.input);
}

}  // namespace jitsteer
