#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jitsteer/context.hpp"
#include "jitsteer/prompt_template.hpp"
#include "jitsteer/run_context.hpp"

namespace jitsteer {

/// "Name: …\nDescription: …\nWeight: …" as inserted by gen_objective.
std::string objective_block(const Objective& objective);

/// Steers a generator toward the objective. The GOALS block fills the
/// template's goals slot when it has one (after CONTEXT, before the task
/// instructions) and is prepended otherwise. Braces in the objective are
/// escaped. Throws Error(DoubleApplication) on an already-steered template.
PromptTemplate gen_objective(const PromptTemplate& base, const Objective& objective);

/// Steers an evaluator. Fills {goal.name}/{goal.description} when present,
/// otherwise prepends a GOAL block. Same errors as gen_objective.
PromptTemplate eval_objective(const PromptTemplate& base, const Objective& objective);

/// Relevance of a component to the objective in [0, 1], from one evaluator
/// call (plus at most one corrective retry). Out-of-range scores are rejected,
/// never clamped: Error(ScoreOutOfRange) / Error(ScoreParseFailure).
double score(const RunContext& ctx, std::string_view component_description, const Objective& objective);

struct ScoredCandidate {
  int index = 0;
  std::string content;
  std::optional<double> score;  // absent for n = 1, where no evaluation runs
};

/// One audit-log line per generated candidate.
struct CandidateRecord {
  int index = 0;
  std::string prompt_hash;
  std::string content;
  std::optional<double> score;
  std::string status = "ok";  // ok | generation_failed | score_failed
  std::string error;
};

struct BestOfNResult {
  ScoredCandidate selected;
  std::vector<CandidateRecord> candidates;  // by index
};

/// Argmax over usable candidates, lowest index on ties. With a single usable
/// unscored candidate, that candidate. nullopt when nothing is usable.
std::optional<std::size_t> select_best(std::span<const CandidateRecord> candidates);

/// Generates n candidates from an already-steered template, concurrently,
/// each tagged with its sample index.
std::vector<CandidateRecord> generate_candidates(const RunContext& ctx, const PromptTemplate& steered,
                                                 const TemplateValues& values, const TemplatePartValues& part_values,
                                                 int n);

/// Scores every ok candidate concurrently; failures mark the candidate.
void score_candidates(const RunContext& ctx, std::vector<CandidateRecord>& candidates, const Objective& objective);

/// gen_objective → n samples → eval_objective scoring → argmax (lowest index
/// on ties). n = 1 skips scoring. Writes best_of_n.jsonl to ctx.audit_dir when
/// set. Throws Error(AllCandidatesFailed) if no candidate survives.
BestOfNResult best_of_n(const RunContext& ctx, const PromptTemplate& generator, const TemplateValues& values,
                        const TemplatePartValues& part_values, const Objective& objective, int n);

void write_audit_log(const std::filesystem::path& path, std::span<const CandidateRecord> candidates);
std::vector<CandidateRecord> read_audit_log(const std::filesystem::path& path);

}  // namespace jitsteer
