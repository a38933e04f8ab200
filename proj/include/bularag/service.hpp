#pragma once

#include <memory>
#include <string>

#include "bularag/commands.hpp"
#include "bularag/config.hpp"

namespace httplib {
class Server;
}

namespace bularag {

/// JSON API over a shared Session:
///   POST /api/ask    {"question": "..."} -> {answer, hits, latency_s}
///   GET  /api/health -> {status, bundle_meta}
/// 400 for malformed requests, 503 when the provider cannot answer.
class ApiService {
public:
    ApiService(const Session& session, ServiceConfig config);
    ~ApiService();
    ApiService(const ApiService&) = delete;
    ApiService& operator=(const ApiService&) = delete;

    /// Blocks until stop(). Returns false when the address cannot be bound.
    bool listen();
    /// Binds an ephemeral port on config.host and returns it (-1 on failure).
    int bind_to_any_port();
    /// Serves on a socket bound by bind_to_any_port(); blocks until stop().
    bool listen_after_bind();
    void stop();
    void wait_until_ready() const;

private:
    const Session& session_;
    ServiceConfig config_;
    std::unique_ptr<httplib::Server> server_;
};

// Payload builders, exposed for tests.
std::string ask_response_json(const AskResult& result, const IndexBundle& bundle, double latency_s);
std::string health_json(const IndexBundle& bundle);

}  // namespace bularag
