#pragma once

#include <memory>
#include <string>

#include "neurotrack/service.hpp"

namespace neurotrack::service {

struct ServerOptions {
    std::string address = "127.0.0.1";
    unsigned short port = 8080;  // 0 picks a free port
    int threads = 4;
    /// Wall-clock seconds per simulated second for the stream cadence.
    double time_scale = 1.0;
};

/// HTTP + WebSocket front end over an ApiHandler.  WebSocket upgrades on
/// /sessions/{id}/stream attach an InteractiveLoop; all other requests are
/// routed through ApiHandler::handle.
class Server {
public:
    Server(ServerOptions options, SessionManager& sessions);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds and starts the worker threads; returns the bound port.
    unsigned short start();
    void stop();
    /// Blocks until stop() is called from another thread or a signal handler.
    void wait();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace neurotrack::service
