#include "bularag/http_util.hpp"

#include <cmath>

#include <httplib.h>

#include "bularag/error.hpp"

namespace bularag::http {

Url split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error(ErrorCode::InvalidConfig, "not an absolute URL: '" + url + "'");
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw Error(ErrorCode::InvalidConfig, "unsupported scheme in '" + url + "'");
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

Response post_json(const std::string& url, const std::string& body, const Headers& headers, double timeout_s) {
    const auto parts = split_url(url);
    httplib::Client client(parts.origin);
    const auto secs = static_cast<time_t>(timeout_s);
    const auto usecs = static_cast<time_t>((timeout_s - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = client.Post(parts.path, h, body, "application/json");
    if (!res) return {0, {}, httplib::to_string(res.error())};
    return {res->status, res->body, {}};
}

bool is_transient(const Response& r) {
    return r.status == 0 || r.status == 408 || r.status == 429 || r.status >= 500;
}

std::chrono::milliseconds RetryPolicy::delay(int retry) const {
    const double ms = static_cast<double>(initial_backoff.count()) * std::pow(multiplier, retry - 1);
    return std::chrono::milliseconds(static_cast<long long>(ms));
}

}  // namespace bularag::http
