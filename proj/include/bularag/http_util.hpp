#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace bularag::http {

struct Url {
    std::string origin;  // scheme://host[:port]
    std::string path;    // begins with '/', may carry a query string
};

/// Splits an absolute http(s) URL. Throws Error{InvalidConfig} otherwise.
Url split_url(const std::string& url);

struct Response {
    int status = 0;  // 0 when no HTTP response was received
    std::string body;
    std::string transport_error;
};

using Headers = std::vector<std::pair<std::string, std::string>>;

Response post_json(const std::string& url, const std::string& body, const Headers& headers, double timeout_s);

/// Connection failures, timeouts, 408, 429 and 5xx.
[[nodiscard]] bool is_transient(const Response& r);

struct RetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{500};
    double multiplier = 2.0;

    /// Delay before retry number `retry` (1-based).
    [[nodiscard]] std::chrono::milliseconds delay(int retry) const;
};

}  // namespace bularag::http
