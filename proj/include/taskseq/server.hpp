#pragma once

// HTTP front end for SessionManager.
//
//   GET  /scenarios
//   POST /sessions                      {"scenario": id}
//   GET  /sessions/{id}/state
//   GET  /sessions/{id}/proposals?k=N
//   POST /sessions/{id}/choose          {"index": i, "step": t?}
//   POST /sessions/{id}/reset
//   GET  /sessions/{id}/events?since=V&timeout_ms=T   (long poll)
//
// Errors are {"error": message} with 400 (bad request), 404 (unknown session or
// scenario) or 409 (session finished, stale step).

#include <memory>
#include <string>

#include "taskseq/session.hpp"

namespace httplib {
class Server;
}

namespace taskseq {

class SessionServer {
public:
    explicit SessionServer(SessionManager& sessions);
    ~SessionServer();

    /// Binds to `port` (0 picks a free one) and returns the bound port.
    int bind(const std::string& host, int port);
    /// Serves until stop(); call after bind().
    void listen();
    void stop();

private:
    SessionManager& sessions_;
    std::unique_ptr<httplib::Server> http_;
};

}  // namespace taskseq
