#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jitsteer/provider.hpp"

namespace jitsteer {

// ---------------------------------------------------------------------------
// Context snapshots

struct Attachment {
  std::string filename;
  std::string media_type;
  std::string bytes;
};

/// One capture of user state. Immutable once ingested; the id is a content
/// hash, so identical captures share an id.
struct ContextSnapshot {
  std::string id;
  std::optional<std::string> text;
  std::optional<ImagePart> image;
  std::vector<Attachment> attachments;
  std::optional<std::string> source_hint;
  std::string captured_at;
  bool truncated = false;
  std::size_t original_text_chars = 0;  // code points before truncation
};

struct IngestInput {
  std::optional<std::string> text;
  std::optional<ImagePart> image;
  std::vector<Attachment> attachments;
  std::optional<std::string> source_hint;
};

struct IngestLimits {
  std::size_t head_chars = 40'000;
  std::size_t tail_chars = 10'000;
  std::size_t max_attachment_bytes = 8u << 20;
  std::size_t max_attachments = 5;
};

inline constexpr std::string_view kTruncationMarker = "\n[…truncated…]\n";

/// Number of UTF-8 code points.
std::size_t utf8_length(std::string_view text);

/// Keeps the first `head` and last `tail` code points joined by
/// kTruncationMarker when the text is longer than head + tail.
std::string truncate_middle(std::string_view text, std::size_t head, std::size_t tail);

/// Media type guessed from a file extension; application/octet-stream when unknown.
std::string media_type_for_path(const std::filesystem::path& path);

/// Throws Error(EmptyContext) when no content is supplied (whitespace-only text
/// counts as absent) and Error(OversizedAttachment) past the caps.
ContextSnapshot ingest(IngestInput input, const IngestLimits& limits = {},
                       std::optional<std::string> captured_at = std::nullopt);

/// CONTEXT block substituted into prompt templates: source-hint line and text
/// in one text part, then the image, then attachments in upload order.
PromptParts render_context_block(const ContextSnapshot& snapshot);

/// Directory-per-snapshot persistence: meta.json plus raw blobs.
class SnapshotStore {
 public:
  explicit SnapshotStore(std::filesystem::path root);

  void save(const ContextSnapshot& snapshot) const;
  ContextSnapshot load(std::string_view id) const;
  bool exists(std::string_view id) const;
  std::filesystem::path dir(std::string_view id) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
};

// ---------------------------------------------------------------------------
// Objectives

inline constexpr int kMinWeight = 1;
inline constexpr int kMaxWeight = 10;
inline constexpr std::size_t kMaxObjectiveNameChars = 120;
inline constexpr std::size_t kMaxObjectiveDescriptionChars = 600;

/// A named, weighted operationalization of an inferred user goal.
struct Objective {
  std::string name;
  std::string description;
  int weight = kMinWeight;

  bool operator==(const Objective&) const = default;
};

/// First violated invariant, or nullopt when the objective is valid.
std::optional<std::string> objective_problem(const Objective& objective);

/// Validating constructor; throws Error(InvalidObjective).
Objective make_objective(std::string name, std::string description, int weight);

struct ObjectiveSet {
  std::string set_id;
  std::vector<Objective> objectives;  // weight descending, model order on ties
  std::string reasoning;
  std::string source_snapshot;
};

/// Stable sort by weight, descending.
void sort_by_weight(std::vector<Objective>& objectives);

void to_json(Json& j, const Objective& o);
void from_json(const Json& j, Objective& o);
void to_json(Json& j, const ObjectiveSet& s);
void from_json(const Json& j, ObjectiveSet& s);

}  // namespace jitsteer
