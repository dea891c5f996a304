#include "jitsteer/replay_eval.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "jitsteer/experts.hpp"
#include "jitsteer/fs_util.hpp"
#include "jitsteer/induction.hpp"
#include "jitsteer/prompts.hpp"
#include "jitsteer/tools.hpp"

namespace jitsteer {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kJudgeLabel = "model judge (stand-in for human raters)";

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string generate(const RunContext& ctx, const PromptTemplate& t, const GeneratorInputs& inputs,
                     const TemplateValues& values) {
  CompletionRequest req;
  req.role = ProviderRole::Generator;
  req.system_text = t.system_text;
  req.parts = render_parts(t, values, inputs.part_values);
  return ctx.complete(std::move(req)).raw_text;
}

/// True when response A wins, false for B, nullopt for an unusable reply.
std::optional<bool> judge(const RunContext& ctx, const ContextSnapshot& snapshot, const std::string& a,
                          const std::string& b, std::string* reply_out) {
  CompletionRequest req;
  req.role = ProviderRole::Evaluator;
  req.parts = render_parts(prompts::pairwise_judge(), {{"response_a", a}, {"response_b", b}},
                           {{"context", render_context_block(snapshot)}});
  std::string reply;
  try {
    reply = ctx.complete(std::move(req)).raw_text;
  } catch (const Error& e) {
    ctx.warn(std::string("judge call failed: ") + e.what());
    if (reply_out) *reply_out = e.what();
    return std::nullopt;
  }
  if (reply_out) *reply_out = reply;
  const auto letter = parse_judge_letter(reply);
  if (!letter) return std::nullopt;
  return *letter == 'A';
}

std::mt19937_64 item_rng(std::uint64_t seed, std::size_t index) {
  return std::mt19937_64(seed + 0x9E3779B97F4A7C15ull * (index + 1));
}

Objective item_objective(const RunContext& ctx, const CorpusItem& item) {
  if (item.objective) return *item.objective;
  return top_objective(induce(ctx, item.snapshot));
}

Json score_json(const std::optional<double>& s) { return s ? Json(*s) : Json(); }

std::string csv_field(const Json& v) {
  std::string s = v.is_string() ? v.get<std::string>() : (v.is_null() ? std::string() : v.dump());
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

GeneratorInputs generator_inputs(std::string_view name, const ContextSnapshot& snapshot, int limit) {
  GeneratorInputs in;
  in.generator = prompts::generator_by_name(name);
  in.part_values = {{"context", render_context_block(snapshot)}};
  if (name == "expertise") {
    in.values = {{"limit", std::to_string(limit)}, {"json_schema", expert_list_schema().to_json_schema().dump(2)}};
  } else if (name == "tools") {
    in.values = {{"limit", std::to_string(limit)}, {"json_schema", tool_list_schema().to_json_schema().dump(2)}};
  }
  return in;
}

std::optional<char> parse_judge_letter(std::string_view reply) {
  const std::string t = trim(reply);
  auto letter = [](char c) -> std::optional<char> {
    c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (c == 'A' || c == 'B') return c;
    return std::nullopt;
  };
  if (t.size() == 1) return letter(t[0]);
  // "A", "B.", "Response A", "**B**": the first standalone A or B.
  for (std::size_t i = 0; i < t.size(); ++i) {
    const char c = t[i];
    if (c != 'A' && c != 'B') continue;
    const bool left = i == 0 || !std::isalnum(static_cast<unsigned char>(t[i - 1]));
    const bool right = i + 1 == t.size() || !std::isalnum(static_cast<unsigned char>(t[i + 1]));
    if (left && right) return c;
  }
  return std::nullopt;
}

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Jit: return "jit";
    case Verdict::Baseline: return "baseline";
    case Verdict::Invalid: return "invalid";
  }
  return "invalid";
}

CompareResult compare(const RunContext& ctx, const ContextSnapshot& snapshot, const Objective& objective,
                      const GeneratorInputs& inputs, std::mt19937_64& rng) {
  CompareResult r;
  // Baseline: the same template with an empty goals slot.
  TemplateValues baseline_values = inputs.values;
  if (!inputs.generator.goals_slot.empty()) baseline_values[inputs.generator.goals_slot] = "";
  r.baseline_output = generate(ctx, inputs.generator, inputs, baseline_values);
  r.jit_output = generate(ctx, gen_objective(inputs.generator, objective), inputs, inputs.values);

  r.jit_shown_first = (rng() & 1u) == 0;
  const auto& a = r.jit_shown_first ? r.jit_output : r.baseline_output;
  const auto& b = r.jit_shown_first ? r.baseline_output : r.jit_output;
  const auto a_wins = judge(ctx, snapshot, a, b, &r.judge_reply);
  if (!a_wins) {
    r.verdict = Verdict::Invalid;
  } else {
    r.verdict = (*a_wins == r.jit_shown_first) ? Verdict::Jit : Verdict::Baseline;
  }
  return r;
}

std::vector<BonRow> prefix_selection(std::span<const CandidateRecord> pool, std::vector<int> n_values) {
  std::sort(n_values.begin(), n_values.end());
  n_values.erase(std::unique(n_values.begin(), n_values.end()), n_values.end());
  std::vector<BonRow> rows;
  for (int n : n_values) {
    if (n < 1 || static_cast<std::size_t>(n) > pool.size()) {
      throw Error(ErrorCode::InvalidArgument, "n=" + std::to_string(n) + " outside the pool of " +
                                                  std::to_string(pool.size()));
    }
    BonRow row;
    row.n = n;
    row.selected = select_best(pool.first(static_cast<std::size_t>(n)));
    if (row.selected) row.selected_score = pool[*row.selected].score;
    rows.push_back(row);
  }
  return rows;
}

BonCurve bon_curve(const RunContext& ctx, const ContextSnapshot& snapshot, const Objective& objective,
                   const GeneratorInputs& inputs, std::vector<int> n_values, std::mt19937_64& rng) {
  if (n_values.empty()) throw Error(ErrorCode::InvalidArgument, "no n values");
  const int max_n = *std::max_element(n_values.begin(), n_values.end());
  if (max_n < 1) throw Error(ErrorCode::InvalidArgument, "n values must be >= 1");
  BonCurve curve;
  curve.pool = generate_candidates(ctx, gen_objective(inputs.generator, objective), inputs.values, inputs.part_values,
                                   max_n);
  if (max_n > 1) score_candidates(ctx, curve.pool, objective);
  curve.rows = prefix_selection(curve.pool, std::move(n_values));

  for (std::size_t i = 0; i < curve.rows.size(); ++i) {
    for (std::size_t j = i + 1; j < curve.rows.size(); ++j) {
      const auto& lo = curve.rows[i];
      const auto& hi = curve.rows[j];
      PairVerdict p{lo.n, hi.n, "invalid"};
      if (lo.selected && hi.selected) {
        if (*lo.selected == *hi.selected) {
          p.outcome = "same";
        } else {
          const bool high_first = (rng() & 1u) == 0;
          const auto& hi_text = curve.pool[*hi.selected].content;
          const auto& lo_text = curve.pool[*lo.selected].content;
          const auto a_wins = judge(ctx, snapshot, high_first ? hi_text : lo_text, high_first ? lo_text : hi_text,
                                    nullptr);
          if (a_wins) p.outcome = (*a_wins == high_first) ? "higher" : "lower";
        }
      }
      curve.pairs.push_back(std::move(p));
    }
  }
  return curve;
}

std::vector<CorpusItem> load_corpus(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::NotFound, "corpus directory " + dir.string() + " not found");
  std::vector<fs::path> items;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory()) items.push_back(entry.path());
  }
  std::sort(items.begin(), items.end());
  std::vector<CorpusItem> out;
  for (const auto& item : items) {
    IngestInput input;
    if (fs::exists(item / "text.txt")) input.text = read_file(item / "text.txt");
    if (fs::exists(item / "source_hint.txt")) input.source_hint = trim(read_file(item / "source_hint.txt"));
    for (const char* ext : {"png", "jpg", "jpeg", "webp", "gif"}) {
      const auto file = item / (std::string("image.") + ext);
      if (fs::exists(file)) {
        input.image = ImagePart{media_type_for_path(file), read_file(file)};
        break;
      }
    }
    CorpusItem ci;
    ci.name = item.filename().string();
    ci.snapshot = ingest(std::move(input), {}, std::string("corpus"));
    if (fs::exists(item / "objective.json")) {
      ci.objective = read_json(item / "objective.json").get<Objective>();
      if (auto problem = objective_problem(*ci.objective)) {
        throw Error(ErrorCode::InvalidObjective, ci.name + "/objective.json: " + *problem);
      }
    }
    out.push_back(std::move(ci));
  }
  return out;
}

Json evaluate_compare(const RunContext& ctx, const std::vector<CorpusItem>& corpus, const EvalConfig& config) {
  std::vector<Json> rows(corpus.size());
  parallel_for(corpus.size(), config.workers, [&](std::size_t i) {
    const auto& item = corpus[i];
    Json row = {{"item", item.name}, {"snapshot", item.snapshot.id}};
    try {
      const auto objective = item_objective(ctx, item);
      row["objective"] = objective;
      auto rng = item_rng(config.seed, i);
      const auto r = compare(ctx, item.snapshot, objective,
                             generator_inputs(config.template_name, item.snapshot), rng);
      row["jit_position"] = r.jit_shown_first ? "A" : "B";
      row["verdict"] = to_string(r.verdict);
      row["judge_reply"] = r.judge_reply;
      row["jit_output"] = r.jit_output;
      row["baseline_output"] = r.baseline_output;
    } catch (const Error& e) {
      row["verdict"] = "error";
      row["error"] = e.what();
    }
    rows[i] = std::move(row);
  });

  int jit = 0, baseline = 0, invalid = 0, errors = 0;
  for (const auto& r : rows) {
    const auto v = r.at("verdict").get<std::string>();
    jit += v == "jit";
    baseline += v == "baseline";
    invalid += v == "invalid";
    errors += v == "error";
  }
  const int valid = jit + baseline;
  return {{"kind", "compare"},
          {"judge", kJudgeLabel},
          {"template", config.template_name},
          {"seed", config.seed},
          {"items", rows},
          {"summary",
           {{"items", rows.size()},
            {"valid", valid},
            {"invalid", invalid},
            {"errors", errors},
            {"jit_wins", jit},
            {"baseline_wins", baseline},
            {"jit_win_rate", valid > 0 ? Json(static_cast<double>(jit) / valid) : Json()}}}};
}

Json evaluate_bon(const RunContext& ctx, const std::vector<CorpusItem>& corpus, const EvalConfig& config) {
  std::vector<Json> rows(corpus.size());
  parallel_for(corpus.size(), config.workers, [&](std::size_t i) {
    const auto& item = corpus[i];
    Json row = {{"item", item.name}, {"snapshot", item.snapshot.id}};
    try {
      const auto objective = item_objective(ctx, item);
      row["objective"] = objective;
      auto rng = item_rng(config.seed, i);
      const auto curve = bon_curve(ctx, item.snapshot, objective,
                                   generator_inputs(config.template_name, item.snapshot), config.n_values, rng);
      row["pool"] = Json::array();
      for (const auto& c : curve.pool) {
        row["pool"].push_back({{"index", c.index}, {"score", score_json(c.score)}, {"status", c.status}});
      }
      row["rows"] = Json::array();
      for (const auto& r : curve.rows) {
        row["rows"].push_back({{"n", r.n},
                               {"selected_index", r.selected ? Json(*r.selected) : Json()},
                               {"selected_score", score_json(r.selected_score)}});
      }
      row["pairs"] = Json::array();
      for (const auto& p : curve.pairs) {
        row["pairs"].push_back({{"n_low", p.n_low}, {"n_high", p.n_high}, {"outcome", p.outcome}});
      }
    } catch (const Error& e) {
      row["error"] = e.what();
    }
    rows[i] = std::move(row);
  });

  std::map<std::pair<int, int>, std::map<std::string, int>> tallies;
  for (const auto& r : rows) {
    if (!r.contains("pairs")) continue;
    for (const auto& p : r.at("pairs")) {
      ++tallies[{p.at("n_low").get<int>(), p.at("n_high").get<int>()}][p.at("outcome").get<std::string>()];
    }
  }
  Json pairs = Json::array();
  for (const auto& [key, counts] : tallies) {
    const int higher = counts.contains("higher") ? counts.at("higher") : 0;
    const int lower = counts.contains("lower") ? counts.at("lower") : 0;
    const int decided = higher + lower;
    pairs.push_back({{"n_low", key.first},
                     {"n_high", key.second},
                     {"higher", higher},
                     {"lower", lower},
                     {"same", counts.contains("same") ? counts.at("same") : 0},
                     {"invalid", counts.contains("invalid") ? counts.at("invalid") : 0},
                     {"higher_win_rate", decided > 0 ? Json(static_cast<double>(higher) / decided) : Json()}});
  }
  return {{"kind", "bon"},
          {"judge", kJudgeLabel},
          {"template", config.template_name},
          {"seed", config.seed},
          {"n_values", config.n_values},
          {"items", rows},
          {"summary", {{"items", rows.size()}, {"pairs", pairs}}}};
}

void write_report(const fs::path& path, const Json& report) {
  write_json_atomic(path, report);
  std::ostringstream csv;
  const auto kind = report.value("kind", "");
  if (kind == "compare") {
    csv << "item,snapshot,objective,jit_position,verdict\n";
    for (const auto& r : report.at("items")) {
      csv << csv_field(r.at("item")) << ',' << csv_field(r.at("snapshot")) << ','
          << csv_field(r.contains("objective") ? r.at("objective").at("name") : Json()) << ','
          << csv_field(r.value("jit_position", "")) << ',' << csv_field(r.at("verdict")) << '\n';
    }
  } else {
    csv << "item,snapshot,n,selected_index,selected_score\n";
    for (const auto& r : report.at("items")) {
      if (!r.contains("rows")) continue;
      for (const auto& row : r.at("rows")) {
        csv << csv_field(r.at("item")) << ',' << csv_field(r.at("snapshot")) << ',' << row.at("n").get<int>() << ','
            << csv_field(row.at("selected_index")) << ',' << csv_field(row.at("selected_score")) << '\n';
      }
    }
  }
  auto csv_path = path;
  csv_path.replace_extension(".csv");
  write_file_atomic(csv_path, csv.str());
}

}  // namespace jitsteer
