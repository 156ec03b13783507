// vsrnav headers first: <resolv.h>, pulled in by httplib, defines _res.
#include "vsrnav/server.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>

namespace vsrnav {

int http_status(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::EmptyScene:
    case ErrorKind::NoMatch:
    case ErrorKind::UnknownObject:
      return 404;
    case ErrorKind::InvalidArgument:
      return 400;
    case ErrorKind::Busy:
      return 409;
    case ErrorKind::EmptyText:
    case ErrorKind::EmptyInstruction:
    case ErrorKind::NoActionsFound:
    case ErrorKind::InvalidPlan:
    case ErrorKind::UnrecognizedInstruction:
    case ErrorKind::UnknownLabel:
      return 422;
    case ErrorKind::ClientError:
    case ErrorKind::BadResponse:
    case ErrorKind::Unauthorized:
      return 502;
    case ErrorKind::Timeout:
      return 504;
    default:
      return 500;
  }
}

namespace {

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string error, std::string message) {
  send_json(res, status, api::ErrorResponse{std::move(error), std::move(message)});
}

// Runs a handler, turning exceptions into the JSON error body.
template <typename F>
void guarded(httplib::Response& res, F&& body) {
  try {
    body();
  } catch (const Error& e) {
    send_error(res, http_status(e.kind()), std::string(to_string(e.kind())), e.what());
  } catch (const Json::exception& e) {
    send_error(res, 400, "BadRequest", e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "Internal", e.what());
  }
}

Json parse_body(const httplib::Request& req) {
  return Json::parse(req.body);  // parse_error, empty body included, lands on 400
}

std::uint64_t resume_point(const httplib::Request& req) {
  std::string raw;
  if (req.has_header("Last-Event-ID"))
    raw = req.get_header_value("Last-Event-ID");
  else if (req.has_param("after"))
    raw = req.get_param_value("after");
  if (raw.empty()) return 0;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(raw, &used);
    if (used != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::InvalidArgument, "bad event id '" + raw + "'");
  }
}

}  // namespace

struct ApiServer::Impl {
  Session& session;
  ServerOptions options;
  httplib::Server http;
  std::atomic<bool> stopping{false};

  Impl(Session& s, ServerOptions o) : session(s), options(std::move(o)) {
    // Every open event stream holds a worker.
    http.new_task_queue = [] { return new httplib::ThreadPool(kWorkers); };
    routes();
  }
  static constexpr std::size_t kWorkers = 24;

  void routes() {
    http.Get("/api/map", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, session.map()); });
    });
    http.Get("/api/scene", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, session.scene()); });
    });
    http.Get("/api/tour", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] {
        auto tour = session.tour();
        if (!tour) return send_error(res, 404, "NoTour", "no coverage tour in this session");
        send_json(res, 200, *tour);
      });
    });
    http.Get("/api/state", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, session.state()); });
    });
    http.Post("/api/query", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, session.query(parse_body(req).get<api::QueryRequest>())); });
    });
    http.Post("/api/instruction", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        send_json(res, 200, session.submit(parse_body(req).get<api::InstructionRequest>()));
      });
    });
    http.Get("/api/events", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { stream(req, res); });
    });
    if (!options.static_dir.empty()) {
      if (!http.set_mount_point("/", options.static_dir.string()))
        throw Error(ErrorKind::IoError, "static directory not found: " + options.static_dir.string());
    }
  }

  void stream(const httplib::Request& req, httplib::Response& res) {
    const std::uint64_t from = resume_point(req);
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream", [this, cursor = from, idle = std::chrono::milliseconds(0)](std::size_t,
                                                                                        httplib::DataSink& sink) mutable {
          auto write = [&](const std::string& s) { return sink.write(s.data(), s.size()); };
          EventLog& log = session.events();
          // Wait in short slices so a vanished client frees its worker
          // quickly; a comment goes out after each idle keepalive interval.
          const auto slice = std::min(options.keepalive, std::chrono::milliseconds(200));
          while (log.since(cursor).empty()) {
            if (stopping || log.closed()) {
              sink.done();
              return true;
            }
            if (!sink.is_writable()) return false;
            if (!log.wait(cursor, slice)) {
              idle += slice;
              if (idle >= options.keepalive) {
                idle = std::chrono::milliseconds(0);
                return write(": keep-alive\n\n");
              }
            }
          }
          idle = std::chrono::milliseconds(0);
          for (const auto& e : log.since(cursor)) {
            if (!write(api::sse_frame(e))) return false;
            cursor = e.seq;
          }
          return true;
        });
  }
};

ApiServer::ApiServer(Session& session, ServerOptions options)
    : impl_(std::make_unique<Impl>(session, std::move(options))) {}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->http.bind_to_any_port(host);
    if (bound <= 0) throw Error(ErrorKind::IoError, "cannot bind " + host);
    return bound;
  }
  if (!impl_->http.bind_to_port(host, port))
    throw Error(ErrorKind::IoError, "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void ApiServer::listen() { impl_->http.listen_after_bind(); }

void ApiServer::stop() {
  if (!impl_) return;
  impl_->stopping = true;
  impl_->session.events().close();
  impl_->http.stop();
}

}  // namespace vsrnav
