#pragma once

#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "craft/error.hpp"
#include "craft/fab/service.hpp"

namespace httplib {
class Server;
}

namespace craft {

/// HTTP status for an error code.
int http_status(ErrorCode code);

/// HTTP/1.1 front end of a FabService:
///   POST /slice?layer_height=&infill=&supports=   raw STL body
///   POST /print   {"job_id", "printer_address", "build_volume_mm"?}
///   GET  /print?id=
///   PUT  /print   {"id", "command": "continue" | "pause" | "stop"}
/// Responses are JSON; errors are {"error": code, "message": text}.
class FabServer {
 public:
  explicit FabServer(FabService& service);
  ~FabServer();
  FabServer(const FabServer&) = delete;
  FabServer& operator=(const FabServer&) = delete;

  /// Binds and serves on a background thread; port 0 picks a free port.
  /// Returns the bound port. Throws ErrorCode::io when binding fails.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();
  int port() const { return port_; }

 private:
  void routes();

  FabService* service_;
  std::unique_ptr<httplib::Server> http_;
  std::thread thread_;
  int port_ = 0;
};

/// Blocking client for a FabServer. Error responses are rethrown as
/// craft::Error with the server's code; connection failures throw
/// ErrorCode::unavailable.
class FabClient {
 public:
  /// "host:port" or "http://host:port".
  explicit FabClient(std::string address);

  PrintJob slice(std::string_view stl_bytes, const SliceProfile& profile = {});
  PrintJob print(const std::string& job_id, const std::string& printer_address,
                 const std::optional<Vec3>& build_volume_mm = std::nullopt);
  PrintJob status(const std::string& job_id);
  PrintJob command(const std::string& job_id, JobCommand command);

 private:
  std::string url_;
};

PrintJob job_from_json(const nlohmann::json& j);

}  // namespace craft
