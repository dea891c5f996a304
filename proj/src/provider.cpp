#include "jitsteer/provider.hpp"

#include <fstream>
#include <thread>

#include "jitsteer/hash.hpp"

namespace jitsteer {

std::string_view to_string(ProviderRole role) noexcept {
  switch (role) {
    case ProviderRole::Inducer: return "inducer";
    case ProviderRole::Generator: return "generator";
    case ProviderRole::UiCodegen: return "ui_codegen";
    case ProviderRole::Evaluator: return "evaluator";
    case ProviderRole::Search: return "search";
  }
  return "generator";
}

ProviderRole parse_role(std::string_view name) {
  for (auto role : kAllRoles) {
    if (to_string(role) == name) return role;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown provider role '" + std::string(name) + "'");
}

void append_text(PromptParts& parts, std::string_view text) {
  if (text.empty()) return;
  if (!parts.empty()) {
    if (auto* last = std::get_if<std::string>(&parts.back())) {
      last->append(text);
      return;
    }
  }
  parts.emplace_back(std::string(text));
}

std::string assemble_prompt(std::string_view system_text, const PromptParts& parts) {
  std::string out;
  if (!system_text.empty()) {
    out.append(system_text);
    out.append("\n\n");
  }
  for (const auto& part : parts) {
    if (const auto* text = std::get_if<std::string>(&part)) {
      out.append(*text);
    } else {
      const auto& image = std::get<ImagePart>(part);
      out.append("\n[image ")
          .append(image.media_type)
          .append(" ")
          .append(std::to_string(image.bytes.size()))
          .append(" bytes sha256:")
          .append(sha256_hex(image.bytes).substr(0, 12))
          .append("]\n");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Configuration

GatewayConfig default_gateway_config() {
  auto anthropic = [](std::string model) {
    RoleConfig c;
    c.provider = "anthropic";
    c.model = std::move(model);
    c.endpoint = "https://api.anthropic.com/v1/messages";
    c.api_key_env = "ANTHROPIC_API_KEY";
    c.multimodal = true;
    return c;
  };
  auto openai = [](std::string model) {
    RoleConfig c;
    c.provider = "openai";
    c.model = std::move(model);
    c.endpoint = "https://api.openai.com/v1/chat/completions";
    c.api_key_env = "OPENAI_API_KEY";
    c.multimodal = true;
    return c;
  };
  GatewayConfig config;
  config[ProviderRole::Inducer] = anthropic("claude-3-7-sonnet-20250219");
  config[ProviderRole::Generator] = anthropic("claude-3-7-sonnet-20250219");
  config[ProviderRole::UiCodegen] = anthropic("claude-sonnet-4-20250514");
  config[ProviderRole::UiCodegen].timeout = std::chrono::seconds(300);
  config[ProviderRole::Evaluator] = openai("gpt-4o-mini");
  config[ProviderRole::Search] = openai("gpt-4o-mini-search-preview");
  config[ProviderRole::Search].multimodal = false;
  return config;
}

GatewayConfig parse_gateway_config(const Json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw Error(ErrorCode::InvalidArgument, "provider config must be a JSON object keyed by role");
  GatewayConfig config;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const ProviderRole role = parse_role(it.key());
    const Json& v = it.value();
    if (!v.is_object()) throw Error(ErrorCode::InvalidArgument, "role '" + it.key() + "' must map to an object");
    RoleConfig c;
    c.provider = v.value("provider", "");
    if (c.provider.empty()) throw Error(ErrorCode::InvalidArgument, "role '" + it.key() + "' has no provider");
    c.model = v.value("model", "");
    c.endpoint = v.value("endpoint", "");
    c.api_key_env = v.value("api_key_env", "");
    c.multimodal = v.value("multimodal", false);
    c.in_flight_cap = v.value("in_flight_cap", 8);
    if (c.in_flight_cap < 1) throw Error(ErrorCode::InvalidArgument, "in_flight_cap must be >= 1");
    const int default_timeout = role == ProviderRole::UiCodegen ? 300 : 120;
    c.timeout = std::chrono::seconds(v.value("timeout_s", default_timeout));
    c.max_image_bytes = v.value("max_image_bytes", std::size_t{4u << 20});
    if (v.contains("transcript")) {
      std::filesystem::path p = v.at("transcript").get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      c.transcript = p.lexically_normal().string();
    }
    if (c.provider == "scripted" && c.transcript.empty()) {
      throw Error(ErrorCode::InvalidArgument, "scripted role '" + it.key() + "' needs a transcript path");
    }
    config[role] = std::move(c);
  }
  return config;
}

namespace {

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path.string());
  Json doc = Json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::InvalidArgument, "malformed JSON in " + path.string());
  return doc;
}

}  // namespace

GatewayConfig load_gateway_config(const std::filesystem::path& path) {
  return parse_gateway_config(read_json_file(path), path.parent_path());
}

// ---------------------------------------------------------------------------
// Scripted provider

ScriptedTranscript parse_transcript(const Json& doc) {
  ScriptedTranscript t;
  const Json* entries = &doc;
  if (doc.is_object()) {
    const auto mode = doc.value("mode", "matched");
    if (mode == "ordered") t.mode = TranscriptMode::Ordered;
    else if (mode == "matched") t.mode = TranscriptMode::Matched;
    else throw Error(ErrorCode::InvalidArgument, "unknown transcript mode '" + mode + "'");
    if (!doc.contains("entries")) throw Error(ErrorCode::InvalidArgument, "transcript object needs 'entries'");
    entries = &doc.at("entries");
  }
  if (!entries->is_array()) throw Error(ErrorCode::InvalidArgument, "transcript entries must be an array");
  for (const auto& e : *entries) {
    TranscriptEntry entry;
    entry.match = e.value("match", "");
    entry.regex = e.value("regex", false);
    const auto& response = e.contains("response") ? e.at("response") : Json("");
    // Structured responses may be written inline as JSON; they replay as text.
    entry.response = response.is_string() ? response.get<std::string>() : response.dump();
    if (e.contains("error")) {
      const auto name = e.at("error").get<std::string>();
      entry.error = parse_error_code(name);
      if (!entry.error) throw Error(ErrorCode::InvalidArgument, "unknown error code '" + name + "' in transcript");
    }
    entry.delay = std::chrono::milliseconds(e.value("delay_ms", 0));
    entry.repeat = e.value("repeat", false);
    t.entries.push_back(std::move(entry));
  }
  return t;
}

ScriptedTranscript load_transcript(const std::filesystem::path& path) { return parse_transcript(read_json_file(path)); }

ScriptedProvider::ScriptedProvider(ScriptedTranscript transcript)
    : transcript_(std::move(transcript)), consumed_(transcript_.entries.size(), false) {
  for (const auto& e : transcript_.entries) {
    patterns_.push_back(e.regex ? std::make_shared<const std::regex>(e.match, std::regex::ECMAScript) : nullptr);
  }
}

std::string ScriptedProvider::match_key(std::string_view assembled, std::optional<int> variant) {
  std::string key(assembled);
  if (variant) key += "\n[sample " + std::to_string(*variant) + "]";
  return key;
}

bool ScriptedProvider::matches(std::size_t index, const std::string& key) const {
  const auto& e = transcript_.entries[index];
  if (e.match.empty()) return true;
  if (patterns_[index]) return std::regex_search(key, *patterns_[index]);
  return key.find(e.match) != std::string::npos;
}

std::string ScriptedProvider::send(const ProviderCall& call) {
  const std::string key = match_key(call.assembled, call.variant);
  std::unique_lock<std::mutex> serial;
  if (transcript_.mode == TranscriptMode::Ordered) serial = std::unique_lock(ordered_mu_);

  const TranscriptEntry* entry = nullptr;
  {
    std::lock_guard lock(mu_);
    received_.push_back(key);
    if (transcript_.mode == TranscriptMode::Ordered) {
      if (cursor_ >= transcript_.entries.size()) {
        throw Error(ErrorCode::TranscriptExhausted, "ordered transcript has no entries left");
      }
      if (!matches(cursor_, key)) {
        throw Error(ErrorCode::TranscriptMismatch,
                    "entry " + std::to_string(cursor_) + " expects '" + transcript_.entries[cursor_].match + "'");
      }
      consumed_[cursor_] = true;
      entry = &transcript_.entries[cursor_++];
    } else {
      for (std::size_t i = 0; i < transcript_.entries.size(); ++i) {
        if (consumed_[i] || !matches(i, key)) continue;
        entry = &transcript_.entries[i];
        if (!entry->repeat) consumed_[i] = true;
        break;
      }
      if (!entry) {
        throw Error(ErrorCode::TranscriptExhausted,
                    "no unconsumed transcript entry matches prompt starting '" + key.substr(0, 80) + "'");
      }
    }
  }
  if (entry->delay.count() > 0) std::this_thread::sleep_for(entry->delay);
  if (entry->error) throw Error(*entry->error, "scripted failure");
  return entry->response;
}

std::vector<std::string> ScriptedProvider::received() const {
  std::lock_guard lock(mu_);
  return received_;
}

std::size_t ScriptedProvider::remaining() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (bool c : consumed_) n += c ? 0 : 1;
  return n;
}

// ---------------------------------------------------------------------------
// Gateway

std::string backend_key(const RoleConfig& cfg) {
  if (cfg.provider == "scripted") return "scripted:" + cfg.transcript;
  return cfg.provider;
}

Gateway::Gateway(GatewayConfig config, std::map<std::string, std::shared_ptr<Provider>> backends)
    : config_(std::move(config)), backends_(std::move(backends)) {
  for (auto role : kAllRoles) slots_[role] = std::make_unique<Slot>();
}

std::shared_ptr<Gateway> Gateway::from_config(const GatewayConfig& config) {
  std::map<std::string, std::shared_ptr<Provider>> backends;
  for (const auto& [role, cfg] : config) {
    const auto key = backend_key(cfg);
    if (backends.contains(key)) continue;
    if (cfg.provider == "scripted") {
      backends[key] = std::make_shared<ScriptedProvider>(load_transcript(cfg.transcript));
    } else if (cfg.provider == "anthropic") {
      backends[key] = std::make_shared<HttpProvider>(HttpProvider::Dialect::Anthropic);
    } else if (cfg.provider == "openai") {
      backends[key] = std::make_shared<HttpProvider>(HttpProvider::Dialect::OpenAI);
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown provider '" + cfg.provider + "'");
    }
  }
  return std::make_shared<Gateway>(config, std::move(backends));
}

bool Gateway::configured(ProviderRole role) const {
  auto it = config_.find(role);
  return it != config_.end() && backends_.contains(backend_key(it->second));
}

const RoleConfig& Gateway::role_config(ProviderRole role) const {
  auto it = config_.find(role);
  if (it == config_.end()) {
    throw Error(ErrorCode::RoleNotConfigured, "role '" + std::string(to_string(role)) + "' is not configured");
  }
  return it->second;
}

std::shared_ptr<Provider> Gateway::backend_for(ProviderRole role) const {
  const auto& cfg = role_config(role);
  auto it = backends_.find(backend_key(cfg));
  if (it == backends_.end()) {
    throw Error(ErrorCode::RoleNotConfigured, "no backend registered for role '" + std::string(to_string(role)) + "'");
  }
  return it->second;
}

void Gateway::set_observer(Observer observer) {
  std::lock_guard lock(observer_mu_);
  observer_ = std::move(observer);
}

int Gateway::peak_in_flight(ProviderRole role) const {
  auto& slot = *slots_.at(role);
  std::lock_guard lock(slot.mu);
  return slot.peak;
}

std::uint64_t Gateway::call_count() const { return calls_.load(); }

namespace {

std::string default_contract(const CompletionRequest& r) {
  if (r.mode == ResponseMode::FreeText) return "the requested output, no other text";
  const auto type = r.structure ? r.structure->type : Schema::Type::Any;
  if (type == Schema::Type::Number || type == Schema::Type::Integer) return "the numeric score, no other text";
  return "a JSON that matches the requested json_schema, no other text";
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

std::string Gateway::send_once(const CompletionRequest& request, const RoleConfig& cfg, Provider& backend,
                               const PromptParts& parts, int attempt) {
  const std::string assembled = assemble_prompt(request.system_text, parts);
  CallRecord record{request.job_id, request.role, sha256_hex(assembled), attempt, true, {}, assembled};

  auto& slot = *slots_.at(request.role);
  {
    std::unique_lock lock(slot.mu);
    slot.cv.wait(lock, [&] { return slot.in_flight < cfg.in_flight_cap; });
    ++slot.in_flight;
    slot.peak = std::max(slot.peak, slot.in_flight);
  }
  struct Release {
    Slot& s;
    ~Release() {
      {
        std::lock_guard lock(s.mu);
        --s.in_flight;
      }
      s.cv.notify_one();
    }
  } release{slot};

  ++calls_;
  auto notify = [&] {
    Observer obs;
    {
      std::lock_guard lock(observer_mu_);
      obs = observer_;
    }
    if (obs) obs(record);
  };
  try {
    ProviderCall call{request.role, &cfg, request.system_text, &parts, assembled, request.variant};
    std::string reply = backend.send(call);
    notify();
    return reply;
  } catch (const Error& e) {
    record.ok = false;
    record.error = std::string(to_string(e.code()));
    notify();
    throw;
  } catch (const std::exception& e) {
    record.ok = false;
    record.error = e.what();
    notify();
    throw Error(ErrorCode::ProviderUnreachable, e.what());
  }
}

CompletionResult Gateway::complete(const CompletionRequest& request) {
  const RoleConfig& cfg = role_config(request.role);
  auto backend = backend_for(request.role);
  if (request.parts.empty()) throw Error(ErrorCode::InvalidArgument, "completion request has no user parts");
  for (const auto& part : request.parts) {
    if (const auto* image = std::get_if<ImagePart>(&part)) {
      if (!cfg.multimodal) {
        throw Error(ErrorCode::ImageNotSupported,
                    "role '" + std::string(to_string(request.role)) + "' is not configured as multimodal");
      }
      if (image->bytes.size() > cfg.max_image_bytes) {
        throw Error(ErrorCode::InvalidArgument, "image payload of " + std::to_string(image->bytes.size()) +
                                                    " bytes exceeds cap of " + std::to_string(cfg.max_image_bytes));
      }
    }
  }

  const Schema schema = request.structure.value_or(Schema::any());
  const std::string contract = request.contract.empty() ? default_contract(request) : request.contract;
  const int max_attempts = 1 + std::max(0, request.max_retries);
  int validation_failures = 0;
  bool last_was_validation = false;
  std::string last_problem;

  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    PromptParts parts = request.parts;
    if (attempt > 1) {
      append_text(parts, "\n\nRespond ONLY with " + contract + ". The previous reply was rejected: " +
                             one_line(last_problem));
    }
    CompletionResult result;
    result.raw_text = send_once(request, cfg, *backend, parts, attempt);
    result.attempts_used = attempt;

    if (request.mode == ResponseMode::Structured) {
      try {
        result.parsed = extract_structure(result.raw_text, schema);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoStructureFound && e.code() != ErrorCode::SchemaMismatch) throw;
        last_was_validation = false;
        last_problem = e.what();
        continue;
      }
    }
    if (request.validator) {
      if (auto problem = request.validator(result)) {
        ++validation_failures;
        last_was_validation = true;
        last_problem = *problem;
        if (validation_failures > request.max_validation_retries) break;
        continue;
      }
    }
    return result;
  }
  if (last_was_validation) throw Error(request.validation_failure, last_problem);
  throw Error(ErrorCode::StructureParseFailure,
              "no parseable reply after " + std::to_string(max_attempts) + " attempts (" + last_problem + ")");
}

}  // namespace jitsteer
