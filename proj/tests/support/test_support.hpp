#pragma once

#include <cstdlib>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "jitsteer/context.hpp"
#include "jitsteer/error.hpp"
#include "jitsteer/provider.hpp"
#include "jitsteer/run_context.hpp"

namespace jitsteer::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "jitsteer-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(std::string_view sub) const { return path_ / sub; }

 private:
  std::filesystem::path path_;
};

inline TranscriptEntry reply(std::string match, std::string response, bool repeat = false) {
  TranscriptEntry e;
  e.match = std::move(match);
  e.response = std::move(response);
  e.repeat = repeat;
  return e;
}

inline TranscriptEntry regex_reply(std::string pattern, std::string response, bool repeat = false) {
  auto e = reply(std::move(pattern), std::move(response), repeat);
  e.regex = true;
  return e;
}

inline TranscriptEntry failure(std::string match, ErrorCode code, bool repeat = false) {
  auto e = reply(std::move(match), "", repeat);
  e.error = code;
  return e;
}

/// Gateway whose every role (or the listed ones) is served by one scripted
/// provider.
struct ScriptedSetup {
  std::shared_ptr<ScriptedProvider> provider;
  std::shared_ptr<Gateway> gateway;
  RunContext ctx;
};

inline ScriptedSetup scripted(ScriptedTranscript transcript, int cap = 8,
                              std::vector<ProviderRole> roles = {std::begin(kAllRoles), std::end(kAllRoles)}) {
  ScriptedSetup s;
  s.provider = std::make_shared<ScriptedProvider>(std::move(transcript));
  GatewayConfig config;
  for (auto role : roles) {
    RoleConfig rc;
    rc.provider = "scripted";
    rc.model = "script";
    rc.transcript = "memory";
    rc.multimodal = true;
    rc.in_flight_cap = cap;
    config[role] = rc;
  }
  s.gateway = std::make_shared<Gateway>(config, std::map<std::string, std::shared_ptr<Provider>>{
                                                    {"scripted:memory", s.provider}});
  s.ctx.gateway = s.gateway.get();
  s.ctx.job_id = "test";
  return s;
}

inline ScriptedSetup scripted(std::vector<TranscriptEntry> entries, TranscriptMode mode = TranscriptMode::Matched,
                              int cap = 8) {
  return scripted(ScriptedTranscript{std::move(entries), mode}, cap);
}

inline ContextSnapshot text_snapshot(std::string text, std::optional<std::string> hint = std::nullopt) {
  IngestInput in;
  in.text = std::move(text);
  in.source_hint = std::move(hint);
  return ingest(std::move(in), {}, std::string("test"));
}

inline std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return 0;
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos; pos = haystack.find(needle, pos + 1)) ++n;
  return n;
}

inline std::filesystem::path data_path(std::string_view rel) {
  return std::filesystem::path(JITSTEER_TEST_DATA_DIR) / rel;
}

/// Runs `fn` and returns the jitsteer error code it threw, or nullopt.
template <typename Fn>
std::optional<ErrorCode> error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace jitsteer::testing
