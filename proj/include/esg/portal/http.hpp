#pragma once

#include <memory>
#include <string>
#include <thread>

#include "esg/common/error.hpp"
#include "esg/portal/portal.hpp"

namespace httplib {
class Server;
}

namespace esg::portal {

/// Status code for an error category.
int http_status(Errc code);
/// Inverse used by clients; unknown statuses map to unavailable.
Errc errc_for_status(int status);

/// JSON/ESGN HTTP surface over a Portal. Requests carry the sign-on token
/// as "Authorization: Bearer <token>".
class HttpServer {
 public:
  explicit HttpServer(Portal& portal);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds (port 0 picks a free one) and serves on a background thread.
  /// Returns the bound port.
  int start(const std::string& host, int port);
  /// Binds and serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();

 private:
  void install_routes();

  Portal& portal_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace esg::portal
