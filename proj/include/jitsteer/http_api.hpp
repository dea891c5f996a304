#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <utility>

#include "jitsteer/service.hpp"

namespace jitsteer {

/// "host:port" (or ":port", or "port") → {host, port}; host defaults to 127.0.0.1.
std::pair<std::string, int> parse_bind_address(std::string_view bind);

/// JSON over HTTP for a Service:
///   POST /snapshots                  GET /snapshots/{id}
///   POST /jobs                       GET /jobs/{id}
///   GET|PATCH /sessions/{id}/objectives
///   POST /runs/{id}/helpers/{name}
/// Errors come back as {error: <code>, detail} with the code's HTTP status.
class HttpApi {
 public:
  explicit HttpApi(Service& service);
  ~HttpApi();

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Call after bind().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Snapshot as returned by GET /snapshots/{id}; binary payloads are described
/// by size and hash rather than inlined.
Json snapshot_summary(const ContextSnapshot& snapshot);

/// Parses a POST /snapshots body into ingest input. Binary fields are base64.
IngestInput parse_snapshot_body(const Json& body);

}  // namespace jitsteer
