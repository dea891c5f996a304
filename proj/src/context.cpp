#include "jitsteer/context.hpp"

#include <algorithm>
#include <cctype>

#include "jitsteer/fs_util.hpp"
#include "jitsteer/hash.hpp"

namespace jitsteer {

namespace {

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

bool is_continuation(char c) { return (static_cast<unsigned char>(c) & 0xC0) == 0x80; }

// Byte offset of code point `n`, or text.size() past the end.
std::size_t offset_of(std::string_view text, std::size_t n) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (is_continuation(text[i])) continue;
    if (seen == n) return i;
    ++seen;
  }
  return text.size();
}

bool is_textual(std::string_view media_type) {
  return media_type.starts_with("text/") || media_type == "application/json" || media_type == "application/xml" ||
         media_type == "application/x-yaml";
}

std::string content_id(const ContextSnapshot& s) {
  Json doc = {{"text", s.text ? Json(*s.text) : Json()}, {"hint", s.source_hint ? Json(*s.source_hint) : Json()}};
  if (s.image) doc["image"] = {{"media_type", s.image->media_type}, {"sha256", sha256_hex(s.image->bytes)}};
  Json atts = Json::array();
  for (const auto& a : s.attachments) {
    atts.push_back({{"filename", a.filename}, {"media_type", a.media_type}, {"sha256", sha256_hex(a.bytes)}});
  }
  doc["attachments"] = std::move(atts);
  return "snap-" + sha256_hex(doc.dump()).substr(0, 16);
}

std::size_t char_count(std::string_view s) { return utf8_length(s); }

}  // namespace

std::size_t utf8_length(std::string_view text) {
  return static_cast<std::size_t>(std::count_if(text.begin(), text.end(), [](char c) { return !is_continuation(c); }));
}

std::string truncate_middle(std::string_view text, std::size_t head, std::size_t tail) {
  const std::size_t total = utf8_length(text);
  if (total <= head + tail) return std::string(text);
  const auto head_end = offset_of(text, head);
  const auto tail_begin = offset_of(text, total - tail);
  std::string out;
  out.reserve(head_end + kTruncationMarker.size() + (text.size() - tail_begin));
  out.append(text.substr(0, head_end));
  out.append(kTruncationMarker);
  out.append(text.substr(tail_begin));
  return out;
}

std::string media_type_for_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  static const std::pair<const char*, const char*> kTypes[] = {
      {".png", "image/png"},   {".jpg", "image/jpeg"},      {".jpeg", "image/jpeg"},        {".webp", "image/webp"},
      {".gif", "image/gif"},   {".txt", "text/plain"},      {".md", "text/markdown"},       {".html", "text/html"},
      {".csv", "text/csv"},    {".json", "application/json"}, {".xml", "application/xml"}, {".yaml", "application/x-yaml"},
      {".yml", "application/x-yaml"}, {".pdf", "application/pdf"}};
  for (const auto& [e, type] : kTypes) {
    if (ext == e) return type;
  }
  return "application/octet-stream";
}

ContextSnapshot ingest(IngestInput input, const IngestLimits& limits, std::optional<std::string> captured_at) {
  if (input.text && is_blank(*input.text)) input.text.reset();
  if (input.source_hint && is_blank(*input.source_hint)) input.source_hint.reset();
  if (input.image && input.image->bytes.empty()) input.image.reset();
  if (!input.text && !input.image && input.attachments.empty()) {
    throw Error(ErrorCode::EmptyContext, "supply at least one of text, image, or attachments");
  }
  if (input.attachments.size() > limits.max_attachments) {
    throw Error(ErrorCode::OversizedAttachment, std::to_string(input.attachments.size()) +
                                                    " attachments exceed the limit of " +
                                                    std::to_string(limits.max_attachments));
  }
  for (const auto& a : input.attachments) {
    if (a.bytes.size() > limits.max_attachment_bytes) {
      throw Error(ErrorCode::OversizedAttachment, "attachment '" + a.filename + "' is " +
                                                      std::to_string(a.bytes.size()) + " bytes, cap is " +
                                                      std::to_string(limits.max_attachment_bytes));
    }
  }
  if (input.image && input.image->bytes.size() > limits.max_attachment_bytes) {
    throw Error(ErrorCode::OversizedAttachment, "image is " + std::to_string(input.image->bytes.size()) +
                                                    " bytes, cap is " + std::to_string(limits.max_attachment_bytes));
  }

  ContextSnapshot s;
  if (input.text) {
    s.original_text_chars = char_count(*input.text);
    s.text = truncate_middle(*input.text, limits.head_chars, limits.tail_chars);
    s.truncated = s.original_text_chars > limits.head_chars + limits.tail_chars;
  }
  s.image = std::move(input.image);
  s.attachments = std::move(input.attachments);
  s.source_hint = std::move(input.source_hint);
  s.captured_at = captured_at ? *captured_at : utc_now_iso();
  s.id = content_id(s);
  return s;
}

PromptParts render_context_block(const ContextSnapshot& snapshot) {
  PromptParts parts;
  std::string lead;
  if (snapshot.source_hint) lead = "Source: " + *snapshot.source_hint + (snapshot.text ? "\n" : "");
  if (snapshot.text) lead += *snapshot.text;
  append_text(parts, lead);
  if (snapshot.image) parts.emplace_back(*snapshot.image);
  for (const auto& a : snapshot.attachments) {
    if (a.media_type.starts_with("image/")) {
      parts.emplace_back(ImagePart{a.media_type, a.bytes});
    } else if (is_textual(a.media_type)) {
      append_text(parts, "\n\nATTACHMENT " + a.filename + ":\n" + a.bytes);
    } else {
      append_text(parts, "\n\n[attachment " + a.filename + " (" + a.media_type + ", " + std::to_string(a.bytes.size()) +
                             " bytes)]");
    }
  }
  return parts;
}

// ---------------------------------------------------------------------------
// SnapshotStore

SnapshotStore::SnapshotStore(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path SnapshotStore::dir(std::string_view id) const {
  if (!is_safe_id(id)) throw Error(ErrorCode::NotFound, "invalid snapshot id '" + std::string(id) + "'");
  return root_ / std::string(id);
}

bool SnapshotStore::exists(std::string_view id) const {
  return is_safe_id(id) && std::filesystem::exists(dir(id) / "meta.json");
}

void SnapshotStore::save(const ContextSnapshot& s) const {
  const auto d = dir(s.id);
  Json meta = {{"id", s.id},
               {"captured_at", s.captured_at},
               {"truncated", s.truncated},
               {"original_text_chars", s.original_text_chars},
               {"has_text", s.text.has_value()}};
  if (s.source_hint) meta["source_hint"] = *s.source_hint;
  if (s.text) write_file_atomic(d / "text.txt", *s.text);
  if (s.image) {
    write_file_atomic(d / "image.bin", s.image->bytes);
    meta["image"] = {{"media_type", s.image->media_type}, {"file", "image.bin"}};
  }
  Json atts = Json::array();
  for (std::size_t i = 0; i < s.attachments.size(); ++i) {
    const auto file = "attachments/" + std::to_string(i) + ".bin";
    write_file_atomic(d / file, s.attachments[i].bytes);
    atts.push_back({{"filename", s.attachments[i].filename}, {"media_type", s.attachments[i].media_type}, {"file", file}});
  }
  meta["attachments"] = std::move(atts);
  // meta.json last: its presence marks a complete snapshot.
  write_json_atomic(d / "meta.json", meta);
}

ContextSnapshot SnapshotStore::load(std::string_view id) const {
  if (!exists(id)) throw Error(ErrorCode::NotFound, "unknown snapshot '" + std::string(id) + "'");
  const auto d = dir(id);
  const Json meta = read_json(d / "meta.json");
  ContextSnapshot s;
  s.id = meta.at("id").get<std::string>();
  s.captured_at = meta.value("captured_at", "");
  s.truncated = meta.value("truncated", false);
  s.original_text_chars = meta.value("original_text_chars", std::size_t{0});
  if (meta.value("has_text", false)) s.text = read_file(d / "text.txt");
  if (meta.contains("source_hint")) s.source_hint = meta.at("source_hint").get<std::string>();
  if (meta.contains("image")) {
    s.image = ImagePart{meta.at("image").at("media_type").get<std::string>(),
                        read_file(d / meta.at("image").at("file").get<std::string>())};
  }
  for (const auto& a : meta.value("attachments", Json::array())) {
    s.attachments.push_back({a.at("filename").get<std::string>(), a.at("media_type").get<std::string>(),
                             read_file(d / a.at("file").get<std::string>())});
  }
  return s;
}

// ---------------------------------------------------------------------------
// Objectives

std::optional<std::string> objective_problem(const Objective& o) {
  if (o.weight < kMinWeight || o.weight > kMaxWeight) {
    return "weight " + std::to_string(o.weight) + " outside 1-10";
  }
  if (is_blank(o.name)) return std::string("empty objective name");
  if (utf8_length(o.name) > kMaxObjectiveNameChars) return "objective name longer than 120 characters";
  if (is_blank(o.description)) return "objective '" + o.name + "' has an empty description";
  if (utf8_length(o.description) > kMaxObjectiveDescriptionChars) {
    return "objective '" + o.name + "' description longer than 600 characters";
  }
  return std::nullopt;
}

Objective make_objective(std::string name, std::string description, int weight) {
  Objective o{std::move(name), std::move(description), weight};
  if (auto problem = objective_problem(o)) throw Error(ErrorCode::InvalidObjective, *problem);
  return o;
}

void sort_by_weight(std::vector<Objective>& objectives) {
  std::stable_sort(objectives.begin(), objectives.end(),
                   [](const Objective& a, const Objective& b) { return a.weight > b.weight; });
}

void to_json(Json& j, const Objective& o) {
  j = Json{{"name", o.name}, {"description", o.description}, {"weight", o.weight}};
}

void from_json(const Json& j, Objective& o) {
  o.name = j.at("name").get<std::string>();
  o.description = j.at("description").get<std::string>();
  o.weight = j.at("weight").get<int>();
}

void to_json(Json& j, const ObjectiveSet& s) {
  j = Json{{"set_id", s.set_id}, {"objectives", s.objectives}, {"reasoning", s.reasoning},
           {"source_snapshot", s.source_snapshot}};
}

void from_json(const Json& j, ObjectiveSet& s) {
  s.set_id = j.value("set_id", "");
  s.objectives = j.at("objectives").get<std::vector<Objective>>();
  s.reasoning = j.value("reasoning", "");
  s.source_snapshot = j.value("source_snapshot", "");
}

}  // namespace jitsteer
