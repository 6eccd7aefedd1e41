#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "slangscan/annotation.hpp"

namespace slangscan {

struct ServerOptions {
  /// Sessions are persisted here as <id>.json and reloaded at startup.
  std::filesystem::path session_dir;
  /// predictions_file and corpus_file in POST /sessions resolve inside this
  /// directory; paths that escape it are rejected.
  std::filesystem::path data_root;
  /// When set, every request must carry "Authorization: Bearer <token>".
  std::optional<std::string> token;
  /// Optional directory of static files served at "/".
  std::optional<std::filesystem::path> static_dir;
};

/// JSON HTTP API over annotation sessions. Writes to one session are
/// serialized; reads run concurrently.
class AnnotationServer {
 public:
  explicit AnnotationServer(ServerOptions options);
  ~AnnotationServer();
  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  /// Registers a session built elsewhere and persists it. Throws
  /// ContractError when the id is taken.
  void add_session(AnnotationSession session);
  std::optional<AnnotationSession> snapshot(const std::string& id) const;

  /// Binds and serves on a background thread. Port 0 picks a free port;
  /// the bound port is returned.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace slangscan
