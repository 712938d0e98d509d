#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>

#include "httplib.h"
// <resolv.h> (via httplib) defines _res, which Eigen uses as a parameter name.
#ifdef _res
#undef _res
#endif
#include "json.hpp"
#include "ttx/error.hpp"
#include "ttx/session.hpp"
#include "ttx/store.hpp"

namespace ttx {

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::InvalidArgument:
    case ErrorCode::Schema: return 400;
    case ErrorCode::IllegalTransition:
    case ErrorCode::Conflict: return 409;
    case ErrorCode::Numerical: return 422;
    case ErrorCode::Io: return 500;
  }
  return 500;
}

/// JSON-over-HTTP facade for a SessionStore, plus a server-sent-event
/// stream of perspective snapshots.
class Service {
 public:
  explicit Service(SessionStore& store) : store_(store) { routes(); }

  httplib::Server& server() { return server_; }

  bool listen(const std::string& host, int port) { return server_.listen(host, port); }
  int bind_to_any_port(const std::string& host) { return server_.bind_to_any_port(host); }
  bool listen_after_bind() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }

 private:
  static void send_json(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
    send_json(res, json{{"error", {{"code", to_string(code)}, {"message", message}}}}, http_status(code));
  }

  template <typename F>
  static void guarded(httplib::Response& res, F&& f) {
    try {
      f();
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const json::exception& e) {
      send_error(res, ErrorCode::InvalidArgument, std::string("malformed JSON: ") + e.what());
    } catch (const std::logic_error& e) {  // bad numeric query parameters
      send_error(res, ErrorCode::InvalidArgument, e.what());
    } catch (const std::exception& e) {
      send_error(res, ErrorCode::Io, e.what());
    }
  }

  static json body_of(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    return json::parse(req.body);
  }

  void routes() {
    server_.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto body = body_of(req);
        if (!body.contains("scenarioId")) fail(ErrorCode::InvalidArgument, "scenarioId is required");
        auto who = participants_from_json(body.value("participants", json::object()));
        auto id = store_.create_session(body.at("scenarioId").get<std::string>(), who,
                                        body.value("actor", std::string("facilitator")));
        send_json(res, store_.view(id), 201);
      });
    });

    server_.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, store_.view(req.matches[1])); });
    });

    server_.Post(R"(/sessions/([^/]+)/advance)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto body = body_of(req);
        if (!body.contains("action")) fail(ErrorCode::InvalidArgument, "action is required");
        std::optional<std::uint64_t> expected;
        if (body.contains("expectedSeq")) expected = body.at("expectedSeq").get<std::uint64_t>();
        send_json(res, store_.advance(req.matches[1], parse_action(body.at("action").get<std::string>()),
                                      body.value("payload", json::object()),
                                      body.value("actor", std::string("facilitator")), expected));
      });
    });

    server_.Post(R"(/sessions/([^/]+)/whatif)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto body = body_of(req);
        if (!body.contains("coaId")) fail(ErrorCode::InvalidArgument, "coaId is required");
        if (!body.contains("horizon") || !body.at("horizon").is_number()) {
          fail(ErrorCode::InvalidArgument, "horizon (hours) is required");
        }
        send_json(res, store_.whatif(req.matches[1], body.at("coaId").get<std::string>(), body.at("horizon").get<double>()));
      });
    });

    server_.Get(R"(/sessions/([^/]+)/runs/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, store_.runs(req.matches[1], std::stoi(req.matches[2]))); });
    });

    server_.Post(R"(/sessions/([^/]+)/surveys)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        json payload;
        if (req.get_header_value("Content-Type").rfind("text/csv", 0) == 0) {
          payload = json{{"csv", req.body}};
        } else {
          payload = body_of(req);
        }
        send_json(res, store_.ingest_survey(req.matches[1], payload));
      });
    });

    server_.Get(R"(/sessions/([^/]+)/report)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, store_.report(req.matches[1])); });
    });

    // ?from=N resumes after sequence number N (Last-Event-ID works too);
    // ?follow=0 drains the backlog and closes.
    server_.Get(R"(/sessions/([^/]+)/stream)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        std::string id = req.matches[1];
        store_.view(id);  // 404 early for unknown sessions
        std::uint64_t from = 0;
        if (req.has_param("from")) {
          from = std::stoull(req.get_param_value("from"));
        } else if (req.has_header("Last-Event-ID")) {
          from = std::stoull(req.get_header_value("Last-Event-ID"));
        }
        const bool follow = req.get_param_value("follow") != "0";
        auto cursor = std::make_shared<std::uint64_t>(from);
        res.set_chunked_content_provider(
            "text/event-stream", [this, id, follow, cursor](std::size_t, httplib::DataSink& sink) {
              auto records = store_.stream_since(id, *cursor, follow, std::chrono::seconds(1));
              for (const auto& r : records) {
                std::string frame = "id: " + std::to_string(r.seq) + "\nevent: snapshot\ndata: " + to_json(r).dump() + "\n\n";
                if (!sink.write(frame.data(), frame.size())) return false;
                *cursor = r.seq;
              }
              if (!follow) {
                sink.done();
                return true;
              }
              if (records.empty()) {
                if (store_.phase(id) == SessionPhase::Archived) {
                  sink.done();
                  return true;
                }
                // short slices so a departed client is noticed quickly
                static constexpr char keepalive[] = ": keepalive\n\n";
                if (!sink.write(keepalive, sizeof keepalive - 1)) return false;
              }
              return sink.is_writable();
            });
      });
    });
  }

  SessionStore& store_;
  httplib::Server server_;
};

}  // namespace ttx
