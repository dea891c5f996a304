#include "jitsteer/http_api.hpp"

#include <charconv>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "jitsteer/hash.hpp"

namespace jitsteer {

std::pair<std::string, int> parse_bind_address(std::string_view bind) {
  std::string host = "127.0.0.1";
  std::string_view port_text = bind;
  if (const auto colon = bind.rfind(':'); colon != std::string_view::npos) {
    if (colon > 0) host = std::string(bind.substr(0, colon));
    port_text = bind.substr(colon + 1);
  }
  int port = -1;
  const auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc() || ptr != port_text.data() + port_text.size() || port < 0 || port > 65535) {
    throw Error(ErrorCode::InvalidArgument, "bad bind address '" + std::string(bind) + "'");
  }
  return {host, port};
}

Json snapshot_summary(const ContextSnapshot& s) {
  Json j = {{"id", s.id}, {"captured_at", s.captured_at}, {"truncated", s.truncated},
            {"original_text_chars", s.original_text_chars}};
  j["text"] = s.text ? Json(*s.text) : Json();
  j["source_hint"] = s.source_hint ? Json(*s.source_hint) : Json();
  j["image"] = s.image ? Json{{"media_type", s.image->media_type},
                              {"bytes", s.image->bytes.size()},
                              {"sha256", sha256_hex(s.image->bytes)}}
                       : Json();
  j["attachments"] = Json::array();
  for (const auto& a : s.attachments) {
    j["attachments"].push_back(
        {{"filename", a.filename}, {"media_type", a.media_type}, {"bytes", a.bytes.size()}, {"sha256", sha256_hex(a.bytes)}});
  }
  return j;
}

namespace {

std::string string_field(const Json& j, const char* key) {
  const Json& v = j.at(key);
  if (!v.is_string()) throw Error(ErrorCode::InvalidArgument, std::string(key) + " must be a string");
  return v.get<std::string>();
}

std::optional<std::string> optional_string(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return string_field(j, key);
}

Json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  auto doc = Json::parse(req.body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorCode::InvalidArgument, "body must be a JSON object");
  return doc;
}

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_json(res, http_status(e.code()), {{"error", to_string(e.code())}, {"detail", e.detail()}});
    } catch (const Json::exception& e) {
      send_json(res, http_status(ErrorCode::InvalidArgument),
                {{"error", to_string(ErrorCode::InvalidArgument)}, {"detail", e.what()}});
    } catch (const std::exception& e) {
      spdlog::error("{} {}: {}", req.method, req.path, e.what());
      send_json(res, 500, {{"error", to_string(ErrorCode::Internal)}, {"detail", e.what()}});
    }
  };
}

std::optional<int> weight_field(const Json& body) {
  if (!body.contains("weight") || body.at("weight").is_null()) return std::nullopt;
  const Json& w = body.at("weight");
  if (w.is_number_integer()) {
    const auto v = w.get<long long>();
    if (v < -1000 || v > 1000) throw Error(ErrorCode::InvalidObjective, "weight " + w.dump() + " is outside 1-10");
    return static_cast<int>(v);
  }
  if (w.is_number_float()) {
    const double d = w.get<double>();
    if (d == static_cast<double>(static_cast<long long>(d)) && d >= -1000 && d <= 1000) return static_cast<int>(d);
  }
  throw Error(ErrorCode::InvalidObjective, "weight must be an integer from 1 to 10");
}

}  // namespace

IngestInput parse_snapshot_body(const Json& body) {
  IngestInput in;
  in.text = optional_string(body, "text");
  in.source_hint = optional_string(body, "source_hint");
  if (body.contains("image") && !body.at("image").is_null()) {
    const Json& img = body.at("image");
    in.image = ImagePart{string_field(img, "media_type"), base64_decode(string_field(img, "data"))};
  }
  if (body.contains("attachments")) {
    for (const auto& a : body.at("attachments")) {
      in.attachments.push_back({string_field(a, "filename"),
                                a.contains("media_type") ? string_field(a, "media_type") : "application/octet-stream",
                                base64_decode(string_field(a, "data"))});
    }
  }
  return in;
}

struct HttpApi::Impl {
  Service& service;
  httplib::Server server;
  explicit Impl(Service& s) : service(s) {}
};

HttpApi::HttpApi(Service& service) : impl_(std::make_unique<Impl>(service)) {
  auto& svr = impl_->server;
  Service& svc = service;

  svr.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, {{"ok", true}}); });

  svr.Post("/snapshots", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             const Json body = parse_body(req);
             auto created = svc.create_snapshot(parse_snapshot_body(body), optional_string(body, "session"));
             send_json(res, 201,
                       {{"id", created.snapshot.id},
                        {"session", created.session_id},
                        {"truncated", created.snapshot.truncated},
                        {"captured_at", created.snapshot.captured_at}});
           }));

  svr.Get("/snapshots/:id", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, snapshot_summary(svc.get_snapshot(req.path_params.at("id"))));
          }));

  svr.Post("/jobs", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             const Json body = parse_body(req);
             JobRequest jr;
             jr.kind = parse_job_kind(string_field(body, "kind"));
             jr.snapshot_id = string_field(body, "snapshot");
             jr.session_id = optional_string(body, "session");
             jr.set_id = optional_string(body, "set");
             if (body.contains("objective")) jr.objective = body.at("objective");
             if (body.contains("config") && !body.at("config").is_null()) jr.config = body.at("config");
             const auto id = svc.start_job(jr);
             const auto job = svc.get_job(id);
             send_json(res, 202, {{"id", id}, {"session", job.session_id}, {"state", to_string(job.state)}});
           }));

  svr.Get("/jobs/:id", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            const auto job = svc.get_job(req.path_params.at("id"));
            Json body = job;
            if (job.state == JobState::Done) body["result"] = svc.job_result(job.id);
            send_json(res, 200, body);
          }));

  svr.Get("/sessions/:id/objectives", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, svc.list_objectives(req.path_params.at("id")));
          }));

  svr.Patch("/sessions/:id/objectives", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
              const Json body = parse_body(req);
              ObjectiveEdit edit;
              edit.set_id = optional_string(body, "set_id");
              if (!body.contains("index") || !body.at("index").is_number_integer()) {
                throw Error(ErrorCode::InvalidArgument, "index must be an integer");
              }
              edit.index = body.at("index").get<int>();
              edit.name = optional_string(body, "name");
              edit.description = optional_string(body, "description");
              edit.weight = weight_field(body);
              send_json(res, 200, svc.edit_objective(req.path_params.at("id"), edit));
            }));

  svr.Post("/runs/:id/helpers/:name", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             const Json body = parse_body(req);
             const Json args = body.contains("args") ? body.at("args") : Json::array();
             send_json(res, 200,
                       {{"result", svc.invoke_helper(req.path_params.at("id"), req.path_params.at("name"), args)}});
           }));
}

HttpApi::~HttpApi() { stop(); }

int HttpApi::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::Internal, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorCode::Internal, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpApi::listen() { impl_->server.listen_after_bind(); }

void HttpApi::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace jitsteer
