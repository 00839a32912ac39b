#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "langadapt/eval/annotation.hpp"

namespace httplib {
class Server;
}

namespace langadapt::eval {

// HTTP+JSON front of an AnnotationService:
//   POST /api/session                      -> 201 {annotator_id}
//   GET  /api/tasks/next?annotator_id=...  -> {pair_id, prompt, response_a,
//        response_b} | {done: true} | {done: false, pending: true}
//   POST /api/tasks/{pair_id}/judgment     -> 201 | 400 | 404 | 409
//   GET  /api/results                      -> aggregate JSON, admin only
// The admin token is read from the environment on every results request:
// 403 when the variable is unset, 401 when the bearer token (or ?token=)
// does not match.
class AnnotationServer {
 public:
  explicit AnnotationServer(AnnotationService& service,
                            std::string admin_token_env = "EVAL_ADMIN_TOKEN");
  ~AnnotationServer();
  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  // Serves files under dir at "/" (for a browser frontend).
  void mount_static(const std::filesystem::path& dir);

  // Returns the bound port, or -1.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void serve();
  void stop();
  bool running() const;

 private:
  void install_routes();

  AnnotationService& service_;
  std::string admin_token_env_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace langadapt::eval
