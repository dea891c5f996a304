#include <random>
#include <set>

#include <gtest/gtest.h>

#include "jitsteer/fs_util.hpp"
#include "jitsteer/prompts.hpp"
#include "jitsteer/replay_eval.hpp"
#include "jitsteer/steering.hpp"
#include "test_support.hpp"

using namespace jitsteer;
using namespace jitsteer::testing;

namespace {

const Objective kClarity{"Enhance technical clarity", "Make each component easy to follow.", 9};

/// Independent placeholder scanner: `{{` and `}}` are escapes, `{name}`
/// is a placeholder.
std::set<std::string> scan_names(std::string_view s) {
  std::set<std::string> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((s[i] == '{' || s[i] == '}') && i + 1 < s.size() && s[i + 1] == s[i]) {
      ++i;
    } else if (s[i] == '{') {
      const auto close = s.find('}', i);
      out.insert(std::string(s.substr(i + 1, close - i - 1)));
      i = close;
    }
  }
  return out;
}

TemplateValues fill_all(const PromptTemplate& t, std::string value = "v") {
  TemplateValues v;
  for (const auto& p : t.placeholders) v[p] = value;
  return v;
}

/// [begin, end) of the region where `a` and `b` differ, in `b`'s coordinates,
/// plus the matching region length in `a`.
struct DiffRegion {
  std::size_t begin = 0, end_b = 0, end_a = 0;
};

DiffRegion diff_region(std::string_view a, std::string_view b) {
  std::size_t p = 0;
  while (p < a.size() && p < b.size() && a[p] == b[p]) ++p;
  std::size_t s = 0;
  while (s < a.size() - p && s < b.size() - p && a[a.size() - 1 - s] == b[b.size() - 1 - s]) ++s;
  return {p, b.size() - s, a.size() - s};
}

std::string sample_prompt(const std::string& name) { return "Give feedback.\n" + name; }

}  // namespace

TEST(GenObjective, ExpertiseTemplateGoalsSectionHoldsNameAndDescriptionOnce) {
  const auto base = prompts::expertise_generation();
  const auto steered = gen_objective(base, kClarity);
  EXPECT_TRUE(steered.objective_applied);
  EXPECT_FALSE(base.objective_applied);
  EXPECT_EQ(count_occurrences(steered.body, kClarity.name), 1u);
  EXPECT_EQ(count_occurrences(steered.body, kClarity.description), 1u);
  const auto goals = steered.body.find("GOALS:\n" + objective_block(kClarity));
  ASSERT_NE(goals, std::string::npos);
  EXPECT_LT(steered.body.find("CONTEXT:"), goals);
  EXPECT_LT(goals, steered.body.find("What {limit} entities"));
  EXPECT_EQ(objective_block(kClarity), "Name: Enhance technical clarity\nDescription: Make each component easy to follow.\nWeight: 9");
}

TEST(GenObjective, TemplateWithoutSlotGetsThePrependedBlock) {
  const auto base = prompts::feedback_generator();
  const auto steered = gen_objective(base, kClarity);
  EXPECT_TRUE(steered.body.starts_with("GOALS:\n" + objective_block(kClarity) + "\n\n"));
  EXPECT_TRUE(steered.body.ends_with(base.body));
}

TEST(GenObjective, DoubleApplicationInAnyOrder) {
  const auto base = prompts::feedback_generator();
  EXPECT_EQ(error_of([&] { gen_objective(gen_objective(base, kClarity), kClarity); }), ErrorCode::DoubleApplication);
  EXPECT_EQ(error_of([&] { eval_objective(gen_objective(base, kClarity), kClarity); }), ErrorCode::DoubleApplication);
  EXPECT_EQ(error_of([&] { gen_objective(eval_objective(base, kClarity), kClarity); }), ErrorCode::DoubleApplication);
  EXPECT_EQ(error_of([&] { eval_objective(eval_objective(prompts::relevance_evaluation(), kClarity), kClarity); }),
            ErrorCode::DoubleApplication);
}

TEST(GenObjective, BracedObjectivesRenderVerbatim) {
  std::mt19937 rng(5);
  const std::string alphabet = "ab {}{{}}x_ {name} }{";
  for (int i = 0; i < 300; ++i) {
    std::string desc = "d";
    const int len = std::uniform_int_distribution<int>(1, 30)(rng);
    for (int k = 0; k < len; ++k) desc += alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)];
    const Objective o{"N{" + std::to_string(i) + "}", desc, 5};
    for (const auto& base : {prompts::expertise_generation(), prompts::feedback_generator()}) {
      const auto steered = gen_objective(base, o);
      auto expected_placeholders = base.placeholders;
      expected_placeholders.erase(base.goals_slot);
      EXPECT_EQ(steered.placeholders, expected_placeholders);
      EXPECT_EQ(scan_names(steered.body), expected_placeholders);

      // Oracle: the block substituted as a plain value, or prepended to the
      // rendered base.
      const auto values = fill_all(steered);
      std::string expected;
      if (base.goals_slot.empty()) {
        expected = "GOALS:\n" + objective_block(o) + "\n\n" + render(base, values);
      } else {
        auto with_goals = values;
        with_goals[base.goals_slot] = objective_block(o);
        expected = render(base, with_goals);
      }
      EXPECT_EQ(render(steered, values), expected) << desc;
    }
  }
}

TEST(EvalObjective, RelevanceTemplateCarriesTheGoal) {
  const Objective narrative{"Strengthen the narrative argument", "Walk through a user scenario.", 8};
  const auto t = eval_objective(prompts::relevance_evaluation(), narrative);
  const auto text = render(t, {{"component_description", "some feedback"}});
  EXPECT_NE(text.find("Name: Strengthen the narrative argument"), std::string::npos);
  EXPECT_NE(text.find("Description: Walk through a user scenario."), std::string::npos);
  EXPECT_EQ(t.placeholders, std::set<std::string>{"component_description"});
}

TEST(EvalObjective, TwoObjectivesDifferOnlyInsideTheGoalBlock) {
  const Objective a{"Goal alpha", "First description.", 3};
  const Objective b{"Goal beta", "Second description here.", 8};
  for (const auto& base : {prompts::relevance_evaluation(), prompts::ui_critique(), prompts::format_selection()}) {
    const auto va = render(eval_objective(base, a), fill_all(eval_objective(base, a)));
    const auto vb = render(eval_objective(base, b), fill_all(eval_objective(base, b)));
    const auto d = diff_region(va, vb);
    // The differing span in each must sit inside that objective's block.
    const auto block_b_begin = vb.find(b.name);
    const auto block_b_end = vb.find(b.description) + b.description.size();
    EXPECT_GE(d.begin, block_b_begin - std::min<std::size_t>(block_b_begin, 6));
    EXPECT_LE(d.end_b, block_b_end);
    const auto block_a_end = va.find(a.description) + a.description.size();
    EXPECT_LE(d.end_a, block_a_end);
  }
}

TEST(Operators, PureAndDeterministic) {
  const auto base = prompts::tool_generation();
  const auto copy = base;
  EXPECT_EQ(gen_objective(base, kClarity), gen_objective(base, kClarity));
  EXPECT_EQ(eval_objective(base, kClarity), eval_objective(base, kClarity));
  EXPECT_EQ(base, copy);
}

TEST(Score, ParsesPlainAndPrefixedNumbers) {
  auto s = scripted({reply("COMPONENT:\nplain", "0.85"), reply("COMPONENT:\nprefixed", "Score: 0.7")});
  EXPECT_DOUBLE_EQ(score(s.ctx, "plain", kClarity), 0.85);
  EXPECT_DOUBLE_EQ(score(s.ctx, "prefixed", kClarity), 0.7);
}

TEST(Score, OutOfRangeTwiceIsAnErrorNotAClamp) {
  auto s = scripted({reply("COMPONENT", "1.3", true)});
  EXPECT_EQ(error_of([&] { score(s.ctx, "c", kClarity); }), ErrorCode::ScoreOutOfRange);
  EXPECT_EQ(s.provider->received().size(), 2u);
  auto once = scripted({reply("COMPONENT", "1.3"), reply("COMPONENT", "0.4")}, TranscriptMode::Ordered);
  EXPECT_DOUBLE_EQ(score(once.ctx, "c", kClarity), 0.4);
}

TEST(Score, NoNumberIsAParseFailure) {
  auto s = scripted({reply("COMPONENT", "very relevant", true)});
  EXPECT_EQ(error_of([&] { score(s.ctx, "c", kClarity); }), ErrorCode::ScoreParseFailure);
  EXPECT_EQ(error_of([&] { score(s.ctx, "  ", kClarity); }), ErrorCode::InvalidArgument);
}

TEST(Score, UsesTheEvaluatorRoleWithTheGoalFilledIn) {
  auto s = scripted({reply("COMPONENT", "0.5")});
  score(s.ctx, "c", kClarity);
  EXPECT_NE(s.provider->received()[0].find("Name: " + kClarity.name), std::string::npos);
}

namespace {

/// Candidates "cand-<i>" with the given scores, fed through the feedback generator.
ScriptedSetup bon_setup(const std::vector<std::string>& scores, int cap = 8) {
  std::vector<TranscriptEntry> entries;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    entries.push_back(reply("[sample " + std::to_string(i) + "]", sample_prompt("cand-" + std::to_string(i)), true));
    entries.push_back(reply("COMPONENT:\n" + sample_prompt("cand-" + std::to_string(i)) + "\n", scores[i], true));
  }
  return scripted(ScriptedTranscript{entries, TranscriptMode::Matched}, cap);
}

BestOfNResult run_bon(ScriptedSetup& s, int n) {
  const auto in = generator_inputs("feedback", text_snapshot("draft"));
  return best_of_n(s.ctx, in.generator, in.values, in.part_values, kClarity, n);
}

}  // namespace

TEST(BestOfN, SingleCandidateNeedsNoScoring) {
  auto s = bon_setup({"0.1"});
  const auto r = run_bon(s, 1);
  EXPECT_EQ(r.selected.index, 0);
  EXPECT_FALSE(r.selected.score);
  EXPECT_EQ(s.provider->received().size(), 1u);
}

TEST(BestOfN, TieGoesToTheLowestIndex) {
  auto s = bon_setup({"0.2", "0.9", "0.9"});
  const auto r = run_bon(s, 3);
  EXPECT_EQ(r.selected.index, 1);
  EXPECT_DOUBLE_EQ(*r.selected.score, 0.9);
}

TEST(BestOfN, MonotoneScoresPickTheLastAndReplayMatches) {
  std::vector<std::string> scores;
  for (int i = 0; i < 10; ++i) scores.push_back(std::to_string(0.05 + 0.09 * i));
  TempDir dir;
  auto s = bon_setup(scores, 3);
  s.ctx.audit_dir = dir.path();
  const auto r = run_bon(s, 10);
  EXPECT_EQ(r.selected.index, 9);
  EXPECT_LE(s.gateway->peak_in_flight(ProviderRole::Generator), 3);

  // Oracle: independent max-scan over the persisted audit log.
  const auto log = read_audit_log(dir / "best_of_n.jsonl");
  ASSERT_EQ(log.size(), 10u);
  int best = -1;
  double best_score = -1;
  for (const auto& c : log) {
    if (c.score && *c.score > best_score) {
      best_score = *c.score;
      best = c.index;
    }
  }
  EXPECT_EQ(best, r.selected.index);
  for (const auto& c : log) EXPECT_EQ(c.prompt_hash, log[0].prompt_hash);

  auto again = bon_setup(scores, 3);
  EXPECT_EQ(run_bon(again, 10).selected.index, 9);
}

TEST(BestOfN, SelectionNeverBeatenByAPrefixSubset) {
  std::mt19937 rng(17);
  std::vector<std::string> scores;
  for (int i = 0; i < 12; ++i) scores.push_back(std::to_string(std::uniform_int_distribution<int>(0, 20)(rng) / 20.0));
  auto s = bon_setup(scores);
  const auto r = run_bon(s, 12);
  for (std::size_t j = 1; j <= r.candidates.size(); ++j) {
    const auto best = select_best(std::span(r.candidates).first(j));
    ASSERT_TRUE(best);
    const double sub = r.candidates[*best].score.value_or(0);
    EXPECT_LE(sub, *r.selected.score);
  }
}

TEST(BestOfN, FailedGenerationsAreSkippedAndAllFailedIsAnError) {
  auto s = scripted({failure("[sample 0]", ErrorCode::ProviderUnreachable, true),
                     reply("[sample 1]", sample_prompt("cand-1"), true),
                     reply("COMPONENT", "0.3", true)});
  const auto r = run_bon(s, 2);
  EXPECT_EQ(r.selected.index, 1);
  EXPECT_EQ(r.candidates[0].status, "generation_failed");

  auto all = scripted({failure("[sample", ErrorCode::ProviderUnreachable, true)});
  EXPECT_EQ(error_of([&] { run_bon(all, 3); }), ErrorCode::AllCandidatesFailed);
  EXPECT_EQ(error_of([&] { run_bon(all, 0); }), ErrorCode::InvalidArgument);
}

TEST(SelectBest, Cases) {
  std::vector<CandidateRecord> c(3);
  c[0].score = 0.5;
  c[1].score = 0.5;
  c[2].status = "score_failed";
  EXPECT_EQ(select_best(c), 0u);
  c[0].status = "generation_failed";
  EXPECT_EQ(select_best(c), 1u);
  EXPECT_EQ(select_best(std::span<const CandidateRecord>{}), std::nullopt);
}
