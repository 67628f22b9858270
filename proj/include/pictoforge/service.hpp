#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <string>

#include "pictoforge/prototyper.hpp"

namespace pictoforge {

struct WorkbenchConfig {
  std::filesystem::path repo_root;
  int listen_port = 7468; // 0 picks a free port (tests)
  std::string host = "127.0.0.1";
  SessionLimits limits;
  std::chrono::seconds session_idle{30 * 60};
};

/// Local HTTP service over a repository.
///
///   GET  /api/model?rev=N           interchange document of revision N (default: current)
///   POST /api/check                 {"source","name"} or {"rev"} -> findings
///   POST /api/sessions              {"root", "rev"|"source"[, "name"]} -> {id, status, current, events}
///   POST /api/sessions/{id}/input   {"line"} -> {status, current, events (new only)}
///   GET  /api/sessions/{id}         full session state
///   GET  /api/events?from=N         NDJSON event lines; follow=1 keeps streaming
///
/// Errors are {"code","message"} with a matching HTTP status.
class Service {
public:
  /// Errors: NO_REPOSITORY, BAD_CONFIG (port out of range).
  explicit Service(WorkbenchConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds the socket; returns the bound port. Errors: PORT_IN_USE.
  int bind();
  /// Serves until stop(); bind() first.
  void run();
  /// bind() + run() on a background thread.
  int start();
  void stop();

  std::size_t session_count() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

} // namespace pictoforge
