#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

namespace jitsteer {

/// Writes through a sibling temp file and rename, so readers never observe a
/// partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// Throws Error(NotFound) for a missing file, Error(InvalidArgument) for bad JSON.
nlohmann::json read_json(const std::filesystem::path& path);

void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& doc);

/// Appends one line and flushes. Callers serialize concurrent appends.
void append_line(const std::filesystem::path& path, std::string_view line);

/// Current UTC time, ISO-8601 with milliseconds.
std::string utc_now_iso();

/// Rejects ids that could escape a storage directory.
bool is_safe_id(std::string_view id);

}  // namespace jitsteer
