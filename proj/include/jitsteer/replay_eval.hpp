#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "jitsteer/context.hpp"
#include "jitsteer/prompt_template.hpp"
#include "jitsteer/run_context.hpp"
#include "jitsteer/steering.hpp"

namespace jitsteer {

/// An unsteered generator template plus the values that render it for one
/// snapshot.
struct GeneratorInputs {
  PromptTemplate generator;
  TemplateValues values;
  TemplatePartValues part_values;
};

/// "feedback", "expertise" or "tools" for a snapshot. Throws
/// Error(InvalidArgument) for other names.
GeneratorInputs generator_inputs(std::string_view name, const ContextSnapshot& snapshot, int limit = 3);

/// The judge's reply reduced to 'A' or 'B'.
std::optional<char> parse_judge_letter(std::string_view reply);

enum class Verdict { Jit, Baseline, Invalid };
std::string_view to_string(Verdict v) noexcept;

struct CompareResult {
  std::string jit_output;
  std::string baseline_output;
  bool jit_shown_first = false;  // JIT output presented as response A
  std::string judge_reply;
  Verdict verdict = Verdict::Invalid;  // de-randomized
};

/// Baseline (no objective) vs JIT-steered generation, judged pairwise with
/// the presentation order drawn from `rng`. The judge sees the context only.
CompareResult compare(const RunContext& ctx, const ContextSnapshot& snapshot, const Objective& objective,
                      const GeneratorInputs& inputs, std::mt19937_64& rng);

struct BonRow {
  int n = 0;
  std::optional<std::size_t> selected;  // pool index
  std::optional<double> selected_score;
};

/// Best-of-n over the first n candidates of one pool, for each n ascending.
std::vector<BonRow> prefix_selection(std::span<const CandidateRecord> pool, std::vector<int> n_values);

struct PairVerdict {
  int n_low = 0;
  int n_high = 0;
  std::string outcome;  // higher | lower | same | invalid
};

struct BonCurve {
  std::vector<CandidateRecord> pool;
  std::vector<BonRow> rows;
  std::vector<PairVerdict> pairs;
};

/// One pool of max(n) steered candidates (scored when max(n) > 1), prefix
/// selection per n, then a judge comparison for every pair of rows.
BonCurve bon_curve(const RunContext& ctx, const ContextSnapshot& snapshot, const Objective& objective,
                   const GeneratorInputs& inputs, std::vector<int> n_values, std::mt19937_64& rng);

struct EvalConfig {
  std::string template_name = "feedback";
  std::uint64_t seed = 7;
  std::vector<int> n_values{1, 10};
  std::size_t workers = 4;
};

/// A corpus is a directory of item directories. Each item holds text.txt
/// and/or image.{png,jpg,jpeg,webp,gif}, optionally source_hint.txt and
/// objective.json ({name, description, weight}). Items without an objective
/// are induced and use the top objective.
struct CorpusItem {
  std::string name;
  ContextSnapshot snapshot;
  std::optional<Objective> objective;
};

std::vector<CorpusItem> load_corpus(const std::filesystem::path& dir);

/// Report JSON for the whole corpus, with win rates over valid verdicts.
Json evaluate_compare(const RunContext& ctx, const std::vector<CorpusItem>& corpus, const EvalConfig& config);
Json evaluate_bon(const RunContext& ctx, const std::vector<CorpusItem>& corpus, const EvalConfig& config);

/// Writes the JSON report and a CSV next to it (same stem, .csv).
void write_report(const std::filesystem::path& path, const Json& report);

}  // namespace jitsteer
