#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "jitsteer/context.hpp"
#include "jitsteer/fs_util.hpp"
#include "test_support.hpp"

using namespace jitsteer;
using namespace jitsteer::testing;

TEST(Ingest, TextOnly) {
  const auto s = text_snapshot("Overleaf System-section draft");
  ASSERT_TRUE(s.text);
  EXPECT_EQ(*s.text, "Overleaf System-section draft");
  EXPECT_FALSE(s.image);
  EXPECT_FALSE(s.truncated);
  EXPECT_FALSE(s.id.empty());
}

TEST(Ingest, EmptyInputsAreRejected) {
  EXPECT_EQ(error_of([] { ingest({}); }), ErrorCode::EmptyContext);
  IngestInput blank;
  blank.text = " \n\t ";
  EXPECT_EQ(error_of([&] { ingest(blank); }), ErrorCode::EmptyContext);
  IngestInput hint_only;
  hint_only.source_hint = "Figma";
  EXPECT_EQ(error_of([&] { ingest(hint_only); }), ErrorCode::EmptyContext);
}

TEST(Ingest, WhitespaceTextWithImageDropsTheText) {
  IngestInput in;
  in.text = "   ";
  in.image = ImagePart{"image/png", "png-bytes"};
  const auto s = ingest(in);
  EXPECT_FALSE(s.text);
  EXPECT_TRUE(s.image);
}

TEST(Ingest, LongTextKeepsHeadAndTail) {
  // Oracle: plain length arithmetic on a generated string of distinct lines.
  std::string text;
  for (int i = 0; text.size() < 500'000; ++i) text += "line " + std::to_string(i) + "\n";
  text.resize(500'000);
  const auto s = ingest({text, std::nullopt, {}, std::nullopt});
  ASSERT_TRUE(s.text);
  EXPECT_TRUE(s.truncated);
  EXPECT_EQ(s.original_text_chars, 500'000u);
  const std::string expected = text.substr(0, 40'000) + std::string(kTruncationMarker) + text.substr(500'000 - 10'000);
  EXPECT_EQ(*s.text, expected);
}

TEST(Ingest, TruncationCountsCodePoints) {
  std::string text;
  for (int i = 0; i < 60'000; ++i) text += "é";  // 2 bytes each
  const auto out = truncate_middle(text, 40'000, 10'000);
  EXPECT_EQ(utf8_length(out), 50'000 + utf8_length(kTruncationMarker));
  EXPECT_EQ(truncate_middle("short", 3, 3), "short");
  EXPECT_EQ(truncate_middle("abcdefgh", 2, 2), std::string("ab") + std::string(kTruncationMarker) + "gh");
}

TEST(Ingest, AttachmentCaps) {
  IngestLimits limits;
  limits.max_attachment_bytes = 10;
  limits.max_attachments = 2;
  IngestInput in;
  in.attachments.push_back({"a.txt", "text/plain", std::string(11, 'x')});
  EXPECT_EQ(error_of([&] { ingest(in, limits); }), ErrorCode::OversizedAttachment);
  in.attachments = {{"a.txt", "text/plain", "1"}, {"b.txt", "text/plain", "2"}, {"c.txt", "text/plain", "3"}};
  EXPECT_EQ(error_of([&] { ingest(in, limits); }), ErrorCode::OversizedAttachment);
  in.attachments.pop_back();
  EXPECT_EQ(ingest(in, limits).attachments.size(), 2u);
}

TEST(Ingest, IdsAreContentAddressed) {
  const auto a = ingest({"same", std::nullopt, {}, std::nullopt}, {}, std::string("t1"));
  const auto b = ingest({"same", std::nullopt, {}, std::nullopt}, {}, std::string("t2"));
  const auto c = ingest({"same", std::nullopt, {}, std::string("hint")}, {}, std::string("t1"));
  EXPECT_EQ(a.id, b.id);
  EXPECT_NE(a.id, c.id);
  EXPECT_TRUE(is_safe_id(a.id));
}

TEST(RenderContext, TextOnlyIsOnePart) {
  const auto parts = render_context_block(text_snapshot("hello"));
  ASSERT_EQ(parts.size(), 1u);
  EXPECT_EQ(std::get<std::string>(parts[0]), "hello");
}

TEST(RenderContext, OrderingAndDeterminism) {
  IngestInput in;
  in.text = "body";
  in.source_hint = "Overleaf";
  in.image = ImagePart{"image/png", "img"};
  in.attachments = {{"notes.txt", "text/plain", "note text"}, {"fig.png", "image/png", "fig"}};
  const auto s = ingest(in);
  const auto parts = render_context_block(s);
  ASSERT_GE(parts.size(), 3u);
  const auto& first = std::get<std::string>(parts[0]);
  EXPECT_LT(first.find("Overleaf"), first.find("body"));
  ASSERT_TRUE(std::holds_alternative<ImagePart>(parts[1]));
  EXPECT_EQ(std::get<ImagePart>(parts[1]).bytes, "img");
  const auto flat = assemble_prompt("", parts);
  EXPECT_LT(flat.find("[image image/png 3 bytes"), flat.find("note text"));
  EXPECT_EQ(assemble_prompt("", render_context_block(s)), flat);
}

TEST(SnapshotStore, RoundTripKeepsBlobs) {
  TempDir dir;
  SnapshotStore store(dir.path());
  IngestInput in;
  in.text = "t";
  in.image = ImagePart{"image/png", std::string("\x89PNG\0\1", 6)};
  in.attachments = {{"x.bin", "application/octet-stream", std::string("\0\0\1", 3)}};
  const auto s = ingest(in);
  store.save(s);
  EXPECT_TRUE(store.exists(s.id));
  const auto back = store.load(s.id);
  EXPECT_EQ(back.id, s.id);
  EXPECT_EQ(back.image->bytes, s.image->bytes);
  EXPECT_EQ(back.attachments[0].bytes, s.attachments[0].bytes);
  EXPECT_EQ(back.captured_at, s.captured_at);
  EXPECT_EQ(error_of([&] { store.load("nope"); }), ErrorCode::NotFound);
  EXPECT_EQ(error_of([&] { store.load("../etc"); }), ErrorCode::NotFound);
}

TEST(Objective, WeightBoundsUnderFuzz) {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> w(-50, 60);
  for (int i = 0; i < 2000; ++i) {
    const int weight = w(rng);
    const bool ok = weight >= 1 && weight <= 10;
    EXPECT_EQ(!objective_problem({"n", "d", weight}), ok) << weight;
  }
  EXPECT_TRUE(objective_problem({"n", "d", 0}));
  EXPECT_TRUE(objective_problem({"n", "d", 11}));
  EXPECT_EQ(error_of([] { make_objective("n", "d", 11); }), ErrorCode::InvalidObjective);
}

TEST(Objective, TextLimits) {
  EXPECT_FALSE(objective_problem({std::string(120, 'n'), "d", 5}));
  EXPECT_TRUE(objective_problem({std::string(121, 'n'), "d", 5}));
  std::string accented;
  for (int i = 0; i < 120; ++i) accented += "é";
  EXPECT_FALSE(objective_problem({accented, "d", 5}));
  EXPECT_FALSE(objective_problem({"n", std::string(600, 'd'), 5}));
  EXPECT_TRUE(objective_problem({"n", std::string(601, 'd'), 5}));
  EXPECT_TRUE(objective_problem({"  ", "d", 5}));
  EXPECT_TRUE(objective_problem({"n", "\n", 5}));
}

TEST(ObjectiveSet, SortIsAStablePermutation) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Objective> in;
    const int n = std::uniform_int_distribution<int>(0, 8)(rng);
    for (int i = 0; i < n; ++i) in.push_back({"o" + std::to_string(i), "d", std::uniform_int_distribution<int>(1, 4)(rng)});
    auto out = in;
    sort_by_weight(out);
    // Oracle: bucket by weight from high to low, keeping input order in each bucket.
    std::vector<Objective> expected;
    for (int w = 10; w >= 1; --w) {
      for (const auto& o : in) {
        if (o.weight == w) expected.push_back(o);
      }
    }
    EXPECT_EQ(out, expected);
  }
}

TEST(MediaType, FromExtension) {
  EXPECT_EQ(media_type_for_path("a/b.PNG"), "image/png");
  EXPECT_EQ(media_type_for_path("x.jpeg"), "image/jpeg");
  EXPECT_EQ(media_type_for_path("notes.md"), "text/markdown");
  EXPECT_EQ(media_type_for_path("blob"), "application/octet-stream");
}
