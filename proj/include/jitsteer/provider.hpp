#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "jitsteer/error.hpp"
#include "jitsteer/structure.hpp"

namespace jitsteer {

enum class ProviderRole { Inducer, Generator, UiCodegen, Evaluator, Search };

inline constexpr ProviderRole kAllRoles[] = {ProviderRole::Inducer, ProviderRole::Generator, ProviderRole::UiCodegen,
                                             ProviderRole::Evaluator, ProviderRole::Search};

std::string_view to_string(ProviderRole role) noexcept;
/// Accepts "inducer", "generator", "ui_codegen", "evaluator", "search".
ProviderRole parse_role(std::string_view name);

struct ImagePart {
  std::string media_type;
  std::string bytes;
};

/// One user-turn part: plain text or an image payload.
using PromptPart = std::variant<std::string, ImagePart>;
using PromptParts = std::vector<PromptPart>;

/// Appends text, merging with a trailing text part.
void append_text(PromptParts& parts, std::string_view text);

/// Deterministic flattening used for scripted matching and prompt hashes.
/// Images render as "[image <media-type> <n> bytes sha256:<12 hex>]".
std::string assemble_prompt(std::string_view system_text, const PromptParts& parts);

enum class ResponseMode { FreeText, Structured };

struct CompletionResult {
  std::string raw_text;
  std::optional<Json> parsed;
  int attempts_used = 0;
};

struct CompletionRequest {
  ProviderRole role = ProviderRole::Generator;
  std::string system_text;
  PromptParts parts;
  ResponseMode mode = ResponseMode::FreeText;
  std::optional<Schema> structure;
  int max_retries = 2;

  /// Semantic check run after parsing; returns a problem description or
  /// nullopt. Failures trigger a corrective retry, at most
  /// `max_validation_retries` times, then throw `validation_failure`.
  std::function<std::optional<std::string>(const CompletionResult&)> validator;
  int max_validation_retries = 1;
  ErrorCode validation_failure = ErrorCode::SchemaMismatch;

  /// Output contract restated on retries; derived from the descriptor if empty.
  std::string contract;

  /// Sample index for repeated identical prompts (best-of-N fan-out). It does
  /// not change the prompt; scripted transcripts can key on it.
  std::optional<int> variant;

  /// Job attribution for the call log.
  std::string job_id;
};

struct RoleConfig {
  std::string provider;  // "anthropic", "openai", "scripted"
  std::string model;
  std::string endpoint;
  std::string api_key_env;
  bool multimodal = false;
  int in_flight_cap = 8;
  std::chrono::seconds timeout{120};
  std::size_t max_image_bytes = 4u << 20;
  std::string transcript;  // scripted provider only
};

/// Role -> RoleConfig. Roles absent from the map are unconfigured.
using GatewayConfig = std::map<ProviderRole, RoleConfig>;

/// Default per-role models: a Claude 3.7 Sonnet class model
/// for induction and generation, Claude Sonnet 4 for UI code, GPT-4o mini for
/// evaluation and its search-preview variant for retrieval.
GatewayConfig default_gateway_config();

/// Parses the provider configuration document: an object keyed by role name,
/// each value {provider, model, endpoint, api_key_env, multimodal,
/// in_flight_cap, timeout_s?, max_image_bytes?, transcript?}. Relative
/// transcript paths resolve against `base_dir`.
GatewayConfig parse_gateway_config(const Json& doc, const std::filesystem::path& base_dir = {});
GatewayConfig load_gateway_config(const std::filesystem::path& path);

/// Everything a backend sees for one attempt.
struct ProviderCall {
  ProviderRole role;
  const RoleConfig* config;
  std::string_view system_text;
  const PromptParts* parts;
  std::string_view assembled;
  std::optional<int> variant;
};

class Provider {
 public:
  virtual ~Provider() = default;
  /// Returns the model's reply text or throws Error.
  virtual std::string send(const ProviderCall& call) = 0;
};

enum class TranscriptMode { Ordered, Matched };

struct TranscriptEntry {
  std::string match;  // substring, or ECMAScript regex when `regex`
  bool regex = false;
  std::string response;
  std::optional<ErrorCode> error;  // simulate a failing call instead of replying
  std::chrono::milliseconds delay{0};
  bool repeat = false;  // matched mode: never consumed
};

struct ScriptedTranscript {
  std::vector<TranscriptEntry> entries;
  TranscriptMode mode = TranscriptMode::Matched;
};

/// Accepts either an array of {match, response, ...} (matched mode) or
/// {mode: "ordered"|"matched", entries: [...]}.
ScriptedTranscript parse_transcript(const Json& doc);
ScriptedTranscript load_transcript(const std::filesystem::path& path);

/// Deterministic transcript-replaying model stand-in.
///
/// The string matched against is the assembled prompt, followed by
/// "\n[sample <i>]" when the request carries a variant. Ordered mode consumes
/// entries strictly in sequence and serializes calls; matched mode takes the
/// first unconsumed entry whose matcher hits.
class ScriptedProvider : public Provider {
 public:
  explicit ScriptedProvider(ScriptedTranscript transcript);

  std::string send(const ProviderCall& call) override;

  /// Match keys of every request received, in arrival order.
  std::vector<std::string> received() const;
  std::size_t remaining() const;

  static std::string match_key(std::string_view assembled, std::optional<int> variant);

 private:
  bool matches(std::size_t index, const std::string& key) const;

  ScriptedTranscript transcript_;
  std::vector<bool> consumed_;
  std::vector<std::shared_ptr<const std::regex>> patterns_;
  std::size_t cursor_ = 0;
  std::vector<std::string> received_;
  mutable std::mutex mu_;
  std::mutex ordered_mu_;
};

/// Anthropic Messages API or OpenAI Chat Completions over HTTPS.
class HttpProvider : public Provider {
 public:
  enum class Dialect { Anthropic, OpenAI };
  explicit HttpProvider(Dialect dialect) : dialect_(dialect) {}
  std::string send(const ProviderCall& call) override;

  /// Request body for the dialect; exposed for tests.
  static Json build_body(Dialect dialect, const ProviderCall& call);
  /// Extracts reply text from a response body.
  static std::string parse_reply(Dialect dialect, const Json& body);

 private:
  Dialect dialect_;
};

/// One provider call attempt, reported to the observer.
struct CallRecord {
  std::string job_id;
  ProviderRole role;
  std::string prompt_hash;
  int attempt = 1;
  bool ok = true;
  std::string error;
  std::string prompt;  // assembled prompt, images as placeholders
};

/// Role-routed access to completion models with structured-output retries and
/// a per-role in-flight cap. Safe for concurrent use.
class Gateway {
 public:
  using Observer = std::function<void(const CallRecord&)>;

  Gateway(GatewayConfig config, std::map<std::string, std::shared_ptr<Provider>> backends);

  /// Builds backends from configuration: one ScriptedProvider per distinct
  /// transcript path, shared HTTP providers otherwise.
  static std::shared_ptr<Gateway> from_config(const GatewayConfig& config);

  CompletionResult complete(const CompletionRequest& request);

  bool configured(ProviderRole role) const;
  const RoleConfig& role_config(ProviderRole role) const;
  std::shared_ptr<Provider> backend_for(ProviderRole role) const;

  void set_observer(Observer observer);

  /// Highest number of simultaneous in-flight calls observed for a role.
  int peak_in_flight(ProviderRole role) const;
  std::uint64_t call_count() const;

 private:
  struct Slot {
    std::mutex mu;
    std::condition_variable cv;
    int in_flight = 0;
    int peak = 0;
  };

  std::string send_once(const CompletionRequest& request, const RoleConfig& cfg, Provider& backend,
                        const PromptParts& parts, int attempt);

  GatewayConfig config_;
  std::map<std::string, std::shared_ptr<Provider>> backends_;
  std::map<ProviderRole, std::unique_ptr<Slot>> slots_;
  mutable std::mutex observer_mu_;
  Observer observer_;
  std::atomic<std::uint64_t> calls_{0};
};

/// Key under which Gateway::from_config registers a role's backend.
std::string backend_key(const RoleConfig& cfg);

}  // namespace jitsteer
