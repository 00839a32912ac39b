#include "langadapt/eval/annotation_server.hpp"

#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "langadapt/util/error.hpp"

namespace langadapt::eval {

namespace {

using json = nlohmann::json;

void reply(httplib::Response& res, int status, const std::string& body) {
  res.status = status;
  res.set_content(body, "application/json; charset=utf-8");
}

void error(httplib::Response& res, int status, const std::string& message) {
  reply(res, status, json{{"error", message}}.dump());
}

}  // namespace

AnnotationServer::AnnotationServer(AnnotationService& service, std::string admin_token_env)
    : service_(service),
      admin_token_env_(std::move(admin_token_env)),
      server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

AnnotationServer::~AnnotationServer() { stop(); }

void AnnotationServer::install_routes() {
  server_->Post("/api/session", [this](const httplib::Request&, httplib::Response& res) {
    reply(res, 201, json{{"annotator_id", service_.create_session()}}.dump());
  });

  server_->Get("/api/tasks/next", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string annotator = req.get_param_value("annotator_id");
    if (annotator.empty()) return error(res, 400, "annotator_id is required");
    const auto next = service_.next_task(annotator);
    switch (next.status) {
      case AnnotationService::NextStatus::kTask:
        return reply(res, 200, annotator_view(next.pair));
      case AnnotationService::NextStatus::kDone:
        return reply(res, 200, json{{"done", true}}.dump());
      case AnnotationService::NextStatus::kPending:
        return reply(res, 200, json{{"done", false}, {"pending", true}}.dump());
      case AnnotationService::NextStatus::kUnknownAnnotator:
        return error(res, 404, "unknown annotator");
    }
  });

  server_->Post(R"(/api/tasks/([^/]+)/judgment)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  const std::string pair_id = req.matches[1];
                  json body;
                  try {
                    body = json::parse(req.body);
                  } catch (const json::parse_error&) {
                    return error(res, 400, "body is not JSON");
                  }
                  if (!body.is_object() || !body.contains("annotator_id") ||
                      !body["annotator_id"].is_string() || !body.contains("choice") ||
                      !body["choice"].is_string()) {
                    return error(res, 400, "body needs string annotator_id and choice");
                  }
                  const auto choice = parse_choice(body["choice"].get<std::string>());
                  if (!choice) return error(res, 400, "choice must be A, B or tie");
                  using S = AnnotationService::SubmitStatus;
                  switch (service_.submit(pair_id, body["annotator_id"].get<std::string>(),
                                          *choice)) {
                    case S::kCreated:
                      return reply(res, 201, json{{"pair_id", pair_id}, {"status", "recorded"}}.dump());
                    case S::kUnknownPair:
                      return error(res, 404, "unknown pair");
                    case S::kUnknownAnnotator:
                      return error(res, 404, "unknown annotator");
                    case S::kDuplicate:
                      return error(res, 409, "already judged");
                  }
                });

  server_->Get("/api/results", [this](const httplib::Request& req, httplib::Response& res) {
    const char* expected = std::getenv(admin_token_env_.c_str());
    if (expected == nullptr || *expected == '\0') {
      return error(res, 403, "results are disabled: " + admin_token_env_ + " is not set");
    }
    std::string presented = req.get_param_value("token");
    const std::string auth = req.get_header_value("Authorization");
    constexpr std::string_view kBearer = "Bearer ";
    if (auth.rfind(kBearer, 0) == 0) presented = auth.substr(kBearer.size());
    if (presented != expected) return error(res, 401, "invalid admin token");
    reply(res, 200, to_json(service_.results()));
  });

  server_->set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
          std::rethrow_exception(ep);
        } catch (const std::exception& e) {
          error(res, 500, e.what());
        } catch (...) {
          error(res, 500, "internal error");
        }
      });
}

void AnnotationServer::mount_static(const std::filesystem::path& dir) {
  if (!server_->set_mount_point("/", dir.string())) {
    throw IoError("cannot serve static files from " + dir.string());
  }
}

int AnnotationServer::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

void AnnotationServer::serve() { server_->listen_after_bind(); }

void AnnotationServer::stop() {
  if (server_) server_->stop();
}

bool AnnotationServer::running() const { return server_->is_running(); }

}  // namespace langadapt::eval
