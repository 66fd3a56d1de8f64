// Copyright 2026 The patchprop Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef PATCHPROP_HTTP_SERVER_HPP
#define PATCHPROP_HTTP_SERVER_HPP

#include <memory>
#include <string>

#include "patchprop/session.hpp"

namespace patchprop {

/// HTTP front end over a SessionManager.
///
///   POST   /sessions                       image body -> {id, ...}
///   GET    /sessions/{id}                  status
///   DELETE /sessions/{id}
///   POST   /sessions/{id}/strokes          JSON strokes -> {revision}
///   POST   /sessions/{id}/marks            indexed PNG -> {revision}
///   POST   /sessions/{id}/options          JSON options -> {revision}
///   POST   /sessions/{id}/undo, /redo      -> {revision}
///   GET    /sessions/{id}/result           PNG, X-Revision header
///   GET    /sessions/{id}/events           text/event-stream
///   POST   /sessions/{id}/export           model bytes, X-Model-Id header
///   POST   /models                         model bytes -> {id}
///   POST   /batch?model=                   stack body -> {job}
///   GET    /batch/{job}                    job status
///   GET    /batch/{job}/result?file=       output file
///
/// Errors are JSON {"error": code name, "message": text}.
class HttpServer {
 public:
  explicit HttpServer(ServerLimits limits = {});
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and serves on a background thread. Port 0 picks a free port.
  // Returns the bound port; throws kIo when binding fails.
  int start(const std::string& host, int port);
  // Binds and serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();
  int port() const;

  SessionManager& manager();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace patchprop

#endif  // PATCHPROP_HTTP_SERVER_HPP
