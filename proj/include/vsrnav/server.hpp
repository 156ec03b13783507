#pragma once

// HTTP/JSON front of a Session: read endpoints, query, async instruction,
// an SSE event stream and an optional static directory at "/".

#include <chrono>
#include <filesystem>
#include <memory>
#include <string>

#include "vsrnav/session.hpp"

namespace vsrnav {

struct ServerOptions {
  std::filesystem::path static_dir;  // empty: no static mount
  std::chrono::milliseconds keepalive{15000};  // SSE comment interval
};

/// HTTP status for an error kind.
int http_status(ErrorKind kind) noexcept;

class ApiServer {
 public:
  ApiServer(Session& session, ServerOptions options = {});
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Port 0 picks a free port. Returns the bound port; throws IoError.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Call after bind().
  void listen();
  /// Closes the event log (ending open streams) and stops listening.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vsrnav
