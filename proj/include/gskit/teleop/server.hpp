// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gskit/teleop/session.hpp>

#include <memory>
#include <string>

namespace gskit {

struct ServerOptions {
    std::string address = "127.0.0.1";
    unsigned short port = 0; ///< 0 picks a free port
    int threads = 2;
    double heartbeatHz = 10.0;
    /// Frames waiting to be sent per camera and connection; older ones are dropped first.
    std::size_t maxQueuedFramesPerCamera = 4;
};

/// HTTP and WebSocket front end for a TeleopService.
///
///     GET    /scenes                    {"scenes": [...]}
///     GET    /tasks                     {"tasks": [...]}
///     POST   /sessions                  {"scene", "task", "seed", "cameras"} -> 201 session
///     GET    /sessions/{id}             session description
///     DELETE /sessions/{id}
///     GET    /sessions/{id}/datasets    saved trajectories of the session
///     WS     /sessions/{id}/stream      binary frames down, JSON commands up
///
/// Errors are JSON bodies {"error": {"code", "message"}}.
class TeleopServer {
  public:
    TeleopServer(TeleopService &service, ServerOptions options = {});
    ~TeleopServer();
    TeleopServer(const TeleopServer &) = delete;
    TeleopServer &operator=(const TeleopServer &) = delete;

    /// Bind, start the worker threads and return the bound port.
    unsigned short start();
    void stop();
    /// Block until stop() is called from another thread or a signal handler.
    void wait();
    unsigned short port() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> mImpl;
};

} // namespace gskit
