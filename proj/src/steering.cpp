#include "jitsteer/steering.hpp"

#include <sstream>

#include "jitsteer/fs_util.hpp"
#include "jitsteer/hash.hpp"
#include "jitsteer/prompts.hpp"

namespace jitsteer {

std::string objective_block(const Objective& o) {
  return "Name: " + o.name + "\nDescription: " + o.description + "\nWeight: " + std::to_string(o.weight);
}

namespace {

void require_unsteered(const PromptTemplate& base) {
  if (base.objective_applied) {
    throw Error(ErrorCode::DoubleApplication, "template '" + base.id + "' already carries an objective block");
  }
}

PromptTemplate prepend_literal(const PromptTemplate& base, std::string_view literal) {
  PromptTemplate out = base;
  out.body = escape_braces(literal) + base.body;
  return out;
}

}  // namespace

PromptTemplate gen_objective(const PromptTemplate& base, const Objective& objective) {
  require_unsteered(base);
  PromptTemplate out = base.goals_slot.empty() || !base.placeholders.contains(base.goals_slot)
                           ? prepend_literal(base, "GOALS:\n" + objective_block(objective) + "\n\n")
                           : fill_placeholder(base, base.goals_slot, objective_block(objective));
  out.goals_slot.clear();
  out.objective_applied = true;
  out.id = base.id + "+gen_objective";
  return out;
}

PromptTemplate eval_objective(const PromptTemplate& base, const Objective& objective) {
  require_unsteered(base);
  PromptTemplate out;
  if (base.placeholders.contains("goal.name")) {
    out = fill_placeholder(base, "goal.name", objective.name);
    if (out.placeholders.contains("goal.description")) {
      out = fill_placeholder(out, "goal.description", objective.description);
    }
  } else {
    out = prepend_literal(base,
                          "GOAL:\nName: " + objective.name + "\nDescription: " + objective.description + "\n\n");
  }
  out.objective_applied = true;
  out.id = base.id + "+eval_objective";
  return out;
}

double score(const RunContext& ctx, std::string_view component_description, const Objective& objective) {
  if (component_description.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw Error(ErrorCode::InvalidArgument, "component description is empty");
  }
  const auto t = eval_objective(prompts::relevance_evaluation(), objective);
  CompletionRequest req;
  req.role = ProviderRole::Evaluator;
  req.parts = render_parts(t, {{"component_description", std::string(component_description)}});
  req.mode = ResponseMode::Structured;
  req.structure = Schema::number("relevance score between 0 and 1");
  req.max_retries = 1;
  req.max_validation_retries = 1;
  req.validation_failure = ErrorCode::ScoreOutOfRange;
  req.validator = [](const CompletionResult& r) -> std::optional<std::string> {
    const double v = r.parsed->get<double>();
    if (v < 0.0 || v > 1.0) {
      std::ostringstream ss;
      ss << "score " << v << " is outside 0-1";
      return ss.str();
    }
    return std::nullopt;
  };
  try {
    return ctx.complete(std::move(req)).parsed->get<double>();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::StructureParseFailure) throw Error(ErrorCode::ScoreParseFailure, e.detail());
    throw;
  }
}

std::optional<std::size_t> select_best(std::span<const CandidateRecord> candidates) {
  std::optional<std::size_t> best;
  std::size_t usable = 0;
  std::optional<std::size_t> sole_unscored;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (c.status != "ok") continue;
    ++usable;
    if (!c.score) {
      sole_unscored = i;
      continue;
    }
    if (!best || *c.score > *candidates[*best].score) best = i;
  }
  if (best) return best;
  if (usable == 1) return sole_unscored;
  return std::nullopt;
}

std::vector<CandidateRecord> generate_candidates(const RunContext& ctx, const PromptTemplate& steered,
                                                 const TemplateValues& values, const TemplatePartValues& part_values,
                                                 int n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
  const auto parts = render_parts(steered, values, part_values);
  const auto hash = sha256_hex(assemble_prompt(steered.system_text, parts));
  std::vector<CandidateRecord> out(static_cast<std::size_t>(n));
  parallel_for(out.size(), ctx.fan_out(ProviderRole::Generator), [&](std::size_t i) {
    auto& rec = out[i];
    rec.index = static_cast<int>(i);
    rec.prompt_hash = hash;
    CompletionRequest req;
    req.role = ProviderRole::Generator;
    req.system_text = steered.system_text;
    req.parts = parts;
    req.variant = static_cast<int>(i);
    try {
      rec.content = ctx.complete(std::move(req)).raw_text;
    } catch (const Error& e) {
      rec.status = "generation_failed";
      rec.error = e.what();
    }
  });
  return out;
}

void score_candidates(const RunContext& ctx, std::vector<CandidateRecord>& candidates, const Objective& objective) {
  parallel_for(candidates.size(), ctx.fan_out(ProviderRole::Evaluator), [&](std::size_t i) {
    auto& rec = candidates[i];
    if (rec.status != "ok") return;
    try {
      rec.score = score(ctx, rec.content, objective);
    } catch (const Error& e) {
      rec.status = "score_failed";
      rec.error = e.what();
    }
  });
}

BestOfNResult best_of_n(const RunContext& ctx, const PromptTemplate& generator, const TemplateValues& values,
                        const TemplatePartValues& part_values, const Objective& objective, int n) {
  const auto steered = gen_objective(generator, objective);
  BestOfNResult result;
  result.candidates = generate_candidates(ctx, steered, values, part_values, n);
  if (n > 1) score_candidates(ctx, result.candidates, objective);
  if (!ctx.audit_dir.empty()) write_audit_log(ctx.audit_dir / "best_of_n.jsonl", result.candidates);

  const auto best = select_best(result.candidates);
  if (!best) {
    throw Error(ErrorCode::AllCandidatesFailed, "none of " + std::to_string(n) + " candidates could be selected");
  }
  const auto& c = result.candidates[*best];
  result.selected = {c.index, c.content, c.score};
  return result;
}

void write_audit_log(const std::filesystem::path& path, std::span<const CandidateRecord> candidates) {
  std::string out;
  for (const auto& c : candidates) {
    Json line = {{"index", c.index},
                 {"prompt_hash", c.prompt_hash},
                 {"content", c.content},
                 {"score", c.score ? Json(*c.score) : Json()},
                 {"status", c.status}};
    if (!c.error.empty()) line["error"] = c.error;
    out += line.dump() + "\n";
  }
  write_file_atomic(path, out);
}

std::vector<CandidateRecord> read_audit_log(const std::filesystem::path& path) {
  std::vector<CandidateRecord> out;
  std::istringstream in(read_file(path));
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    const auto j = Json::parse(line);
    CandidateRecord c;
    c.index = j.at("index").get<int>();
    c.prompt_hash = j.value("prompt_hash", "");
    c.content = j.value("content", "");
    if (!j.at("score").is_null()) c.score = j.at("score").get<double>();
    c.status = j.value("status", "ok");
    c.error = j.value("error", "");
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace jitsteer
