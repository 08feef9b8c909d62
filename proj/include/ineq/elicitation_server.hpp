#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "httplib.h"
#include "json.hpp"

#include "ineq/elicitation.hpp"
#include "ineq/error.hpp"
#include "ineq/report.hpp"

namespace ineq {

/// HTTP/JSON front end for choice-experiment sessions.
///
///   POST /sessions                 create a session, returns the first question
///   POST /sessions/{id}/answers    answer the outstanding question
///   GET  /sessions/{id}            current state
///
/// Unknown sessions give 404, an answer to anything but the outstanding
/// question gives 409, and malformed bodies give 422.
class ElicitationServer {
 public:
  explicit ElicitationServer(std::optional<std::filesystem::path> static_dir = std::nullopt) {
    server_.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                 {"Access-Control-Allow-Headers", "Content-Type"},
                                 {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server_.Options(R"(/sessions.*)", [](const httplib::Request&, httplib::Response& res) {
      res.status = 204;
    });
    server_.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      create_session(req, res);
    });
    server_.Post(R"(/sessions/([0-9a-f]+)/answers)",
                 [this](const httplib::Request& req, httplib::Response& res) { post_answer(req, res); });
    server_.Get(R"(/sessions/([0-9a-f]+))",
                [this](const httplib::Request& req, httplib::Response& res) { get_session(req, res); });
    if (static_dir) {
      if (!server_.set_mount_point("/", static_dir->string())) {
        throw io_error("static directory " + static_dir->string() + " does not exist");
      }
    }
  }

  /// Blocks serving on host:port until `stop()`.
  bool listen(const std::string& host, int port) { return server_.listen(host, port); }

  /// Binds to an ephemeral port and returns it; follow with `listen_after_bind()`.
  int bind_to_any_port(const std::string& host) { return server_.bind_to_any_port(host); }
  bool listen_after_bind() { return server_.listen_after_bind(); }
  void wait_until_ready() const { server_.wait_until_ready(); }
  void stop() { server_.stop(); }

  SessionStore& store() noexcept { return store_; }

 private:
  static void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, int status, const std::string& message) {
    send(res, status, json{{"error", message}});
  }

  /// Status plus, depending on state, the next question or the estimate.
  static json progress(const ElicitationSession& s) {
    json j;
    j["status"] = to_string(s.status());
    j["interval"] = {s.lo(), s.hi()};
    if (s.outstanding()) j["question"] = to_json(*s.outstanding());
    if (auto eps = s.epsilon()) j["epsilon"] = *eps;
    if (auto b = s.boundary()) j["boundary"] = *b;
    return j;
  }

  static std::optional<nlohmann::json> parse_body(const httplib::Request& req) {
    if (req.body.find_first_not_of(" \t\r\n") == std::string::npos) return nlohmann::json::object();
    auto j = nlohmann::json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    return j;
  }

  void create_session(const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req);
    if (!body) return send_error(res, 422, "body must be a JSON object");
    SessionParams params;
    for (auto [key, field] : {std::pair{"total", &params.total}, std::pair{"s1", &params.s1},
                              std::pair{"s_alt", &params.s_alt}, std::pair{"tolerance", &params.tolerance}}) {
      if (!body->contains(key) || (*body)[key].is_null()) continue;
      if (!(*body)[key].is_number()) return send_error(res, 422, std::string(key) + " must be a number");
      *field = (*body)[key].get<double>();
    }
    std::string id;
    try {
      id = store_.create(params);
    } catch (const validation_error& e) {
      return send_error(res, 422, e.what());
    }
    json out;
    store_.with_session(id, [&](ElicitationSession& s) {
      if (s.status() == SessionStatus::active) s.next_question();
      out = progress(s);
    });
    out["session_id"] = id;
    send(res, 201, out);
  }

  void post_answer(const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    auto body = parse_body(req);
    if (!body) return send_error(res, 422, "body must be a JSON object");
    if (!body->contains("question_id") || !(*body)["question_id"].is_number_integer()) {
      return send_error(res, 422, "question_id must be an integer");
    }
    if (!body->contains("choice") || !(*body)["choice"].is_string()) {
      return send_error(res, 422, "choice must be \"A\" or \"B\"");
    }
    const auto choice_text = (*body)["choice"].get<std::string>();
    if (choice_text != "A" && choice_text != "B") {
      return send_error(res, 422, "choice must be \"A\" or \"B\"");
    }
    const auto question_id = (*body)["question_id"].get<long long>();
    int status = 200;
    json out;
    const bool found = store_.with_session(id, [&](ElicitationSession& s) {
      if (s.status() != SessionStatus::active || !s.outstanding() ||
          static_cast<long long>(s.outstanding()->question_id) != question_id) {
        status = 409;
        out = progress(s);
        out["error"] = "question_id does not match the outstanding question";
        return;
      }
      s.answer(choice_text == "A" ? Choice::a : Choice::b);
      if (s.status() == SessionStatus::active) s.next_question();
      out = progress(s);
    });
    if (!found) return send_error(res, 404, "unknown session");
    send(res, status, out);
  }

  void get_session(const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    json out;
    const bool found = store_.with_session(id, [&](ElicitationSession& s) { out = to_json(s); });
    if (!found) return send_error(res, 404, "unknown session");
    send(res, 200, out);
  }

  httplib::Server server_;
  SessionStore store_;
};

}  // namespace ineq
