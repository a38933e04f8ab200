#include "bularag/service.hpp"

#include <chrono>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "bularag/error.hpp"
#include "bularag/text.hpp"

namespace bularag {

namespace {

constexpr const char* kJson = "application/json; charset=utf-8";

void send_error(httplib::Response& res, int status, const std::string& message) {
    res.status = status;
    res.set_content(nlohmann::json{{"error", message}}.dump(), kJson);
}

bool provider_side(ErrorCode code) {
    return code == ErrorCode::ProviderError || code == ErrorCode::EmptyCompletion ||
           code == ErrorCode::RemoteUnavailable;
}

}  // namespace

std::string ask_response_json(const AskResult& result, const IndexBundle& bundle, double latency_s) {
    nlohmann::json hits = nlohmann::json::array();
    for (const auto& hit : result.hits) {
        const auto& p = bundle.passage(hit.passage_id);
        hits.push_back({
            {"medicine", p.medicine},
            {"source", hit.source},
            {"section", p.section_label ? nlohmann::json(*p.section_label) : nlohmann::json(nullptr)},
            {"text", hit.text},
            {"score", hit.score},
            {"origin", std::string(to_string(hit.origin))},
        });
    }
    return nlohmann::json{{"answer", result.answer.text}, {"hits", hits}, {"latency_s", latency_s}}.dump();
}

std::string health_json(const IndexBundle& bundle) {
    const auto& m = bundle.meta;
    const nlohmann::json meta{
        {"embedder_fingerprint", m.embedder_fingerprint},
        {"embedder_kind", m.embedder_kind},
        {"model_name", m.model_name},
        {"dim", m.dim},
        {"normalized", m.normalized},
        {"created_at", m.created_at},
        {"passages", bundle.passages.size()},
        {"sources", bundle.sources()},
    };
    return nlohmann::json{{"status", "ok"}, {"bundle_meta", meta}}.dump();
}

ApiService::ApiService(const Session& session, ServiceConfig config)
    : session_(session), config_(std::move(config)), server_(std::make_unique<httplib::Server>()) {
    auto& srv = *server_;
    srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                             {"Access-Control-Allow-Headers", "Content-Type"},
                             {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});

    srv.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
        res.set_content(health_json(session_.bundle()), kJson);
    });

    srv.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    srv.Post("/api/ask", [this](const httplib::Request& req, httplib::Response& res) {
        nlohmann::json body;
        try {
            body = nlohmann::json::parse(req.body);
        } catch (const nlohmann::json::parse_error&) {
            return send_error(res, 400, "malformed JSON body");
        }
        if (!body.is_object() || !body.contains("question") || !body["question"].is_string()) {
            return send_error(res, 400, "expected {\"question\": string}");
        }
        const auto question = body["question"].get<std::string>();
        if (text::trim(question).empty()) return send_error(res, 400, "question is empty");

        const auto start = std::chrono::steady_clock::now();
        try {
            const auto result = session_.ask(question);
            const double latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            res.set_content(ask_response_json(result, session_.bundle(), latency), kJson);
        } catch (const Error& e) {
            spdlog::warn("/api/ask failed: {}", e.what());
            if (provider_side(e.code())) return send_error(res, 503, e.what());
            if (e.code() == ErrorCode::InvalidArgument) return send_error(res, 400, e.what());
            send_error(res, 500, e.what());
        } catch (const std::exception& e) {
            spdlog::error("/api/ask failed: {}", e.what());
            send_error(res, 500, e.what());
        }
    });

    if (!config_.web_root.empty() && !srv.set_mount_point("/", config_.web_root.string())) {
        spdlog::warn("web root '{}' is not a directory, static files disabled", config_.web_root.string());
    }

    srv.set_logger([](const httplib::Request& req, const httplib::Response& res) {
        spdlog::info("{} {} -> {}", req.method, req.path, res.status);
    });
}

ApiService::~ApiService() { stop(); }

bool ApiService::listen() {
    spdlog::info("listening on http://{}:{}", config_.host, config_.port);
    return server_->listen(config_.host, config_.port);
}

int ApiService::bind_to_any_port() { return server_->bind_to_any_port(config_.host); }

bool ApiService::listen_after_bind() { return server_->listen_after_bind(); }

void ApiService::stop() {
    if (server_) server_->stop();
}

void ApiService::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace bularag
