#include <cstdlib>

#include <httplib.h>

#include "jitsteer/hash.hpp"
#include "jitsteer/provider.hpp"

namespace jitsteer {

namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::InvalidArgument, "endpoint is not an absolute URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

Json HttpProvider::build_body(Dialect dialect, const ProviderCall& call) {
  Json content = Json::array();
  for (const auto& part : *call.parts) {
    if (const auto* text = std::get_if<std::string>(&part)) {
      content.push_back({{"type", "text"}, {"text", *text}});
      continue;
    }
    const auto& image = std::get<ImagePart>(part);
    const auto data = base64_encode(image.bytes);
    if (dialect == Dialect::Anthropic) {
      content.push_back({{"type", "image"},
                         {"source", {{"type", "base64"}, {"media_type", image.media_type}, {"data", data}}}});
    } else {
      content.push_back(
          {{"type", "image_url"}, {"image_url", {{"url", "data:" + image.media_type + ";base64," + data}}}});
    }
  }

  Json body = {{"model", call.config->model}};
  if (dialect == Dialect::Anthropic) {
    body["max_tokens"] = call.role == ProviderRole::UiCodegen ? 16000 : 4096;
    if (!call.system_text.empty()) body["system"] = std::string(call.system_text);
    body["messages"] = Json::array({{{"role", "user"}, {"content", content}}});
  } else {
    Json messages = Json::array();
    if (!call.system_text.empty()) messages.push_back({{"role", "system"}, {"content", std::string(call.system_text)}});
    messages.push_back({{"role", "user"}, {"content", content}});
    body["messages"] = std::move(messages);
  }
  return body;
}

std::string HttpProvider::parse_reply(Dialect dialect, const Json& body) {
  if (dialect == Dialect::Anthropic) {
    std::string text;
    for (const auto& block : body.value("content", Json::array())) {
      if (block.value("type", "") == "text") text += block.value("text", "");
    }
    if (text.empty()) throw Error(ErrorCode::ProviderUnreachable, "reply carried no text content");
    return text;
  }
  const auto& choices = body.value("choices", Json::array());
  if (choices.empty()) throw Error(ErrorCode::ProviderUnreachable, "reply carried no choices");
  const auto& message = choices.front().value("message", Json::object());
  const auto& content = message.value("content", Json());
  if (!content.is_string()) throw Error(ErrorCode::ProviderUnreachable, "reply content is not text");
  return content.get<std::string>();
}

std::string HttpProvider::send(const ProviderCall& call) {
  const RoleConfig& cfg = *call.config;
  const char* key = cfg.api_key_env.empty() ? nullptr : std::getenv(cfg.api_key_env.c_str());
  if (!key || !*key) {
    throw Error(ErrorCode::RoleNotConfigured, "environment variable " + cfg.api_key_env + " is not set");
  }
  const auto url = split_url(cfg.endpoint);
  httplib::Client client(url.origin);
  client.set_connection_timeout(std::chrono::seconds(10));
  client.set_read_timeout(cfg.timeout);
  client.set_write_timeout(cfg.timeout);

  httplib::Headers headers;
  if (dialect_ == Dialect::Anthropic) {
    headers.emplace("x-api-key", key);
    headers.emplace("anthropic-version", "2023-06-01");
  } else {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  const auto body = build_body(dialect_, call).dump();
  auto res = client.Post(url.path, headers, body, "application/json");
  if (!res) {
    throw Error(ErrorCode::ProviderUnreachable, cfg.endpoint + ": " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::ProviderUnreachable,
                cfg.endpoint + " returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300));
  }
  const Json reply = Json::parse(res->body, nullptr, false);
  if (reply.is_discarded()) throw Error(ErrorCode::ProviderUnreachable, "provider reply is not JSON");
  return parse_reply(dialect_, reply);
}

}  // namespace jitsteer
