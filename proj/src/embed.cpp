#include "bularag/embed.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <future>
#include <semaphore>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "bularag/error.hpp"
#include "bularag/http_util.hpp"
#include "bularag/text.hpp"

namespace bularag {

bool EmbeddingVector::is_zero() const noexcept {
    return std::all_of(values.begin(), values.end(), [](float v) { return v == 0.0f; });
}

EmbeddingVector normalize(std::vector<float> values) {
    double sq = 0.0;
    for (const float v : values) sq += static_cast<double>(v) * static_cast<double>(v);
    if (sq == 0.0) return {std::move(values), false};
    const double norm = std::sqrt(sq);
    for (float& v : values) v = static_cast<float>(static_cast<double>(v) / norm);
    return {std::move(values), true};
}

std::string EmbedderSpec::fingerprint() const {
    const std::string kind_name = kind == EmbedderKind::Deterministic ? "hashed-bow-fnv1a64" : "remote";
    const std::string id = kind_name + ":" + model_name + ":" + std::to_string(dim);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(text::fnv1a64(id)));
    return kind_name + "/" + model_name + "/" + std::to_string(dim) + "/" + buf;
}

EmbeddingVector Embedder::embed_one(std::string_view text) const {
    auto out = embed({std::string(text)});
    return std::move(out.front());
}

HashedBowEmbedder::HashedBowEmbedder(EmbedderSpec spec) : spec_(std::move(spec)) {
    if (spec_.dim < 1) throw Error(ErrorCode::InvalidConfig, "embedder dim must be >= 1");
}

std::vector<EmbeddingVector> HashedBowEmbedder::embed(const std::vector<std::string>& texts) const {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    std::vector<double> acc(spec_.dim);
    for (const auto& t : texts) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (const auto& token : text::words(t, /*fold=*/false)) {
            const std::uint64_t h = text::fnv1a64(token);
            const std::size_t bucket = static_cast<std::size_t>(h % spec_.dim);
            acc[bucket] += (h >> 63) == 0 ? 1.0 : -1.0;
        }
        double sq = 0.0;
        for (const double v : acc) sq += v * v;
        EmbeddingVector vec;
        vec.values.resize(spec_.dim);
        if (sq > 0.0) {
            const double norm = std::sqrt(sq);
            for (std::size_t i = 0; i < spec_.dim; ++i) vec.values[i] = static_cast<float>(acc[i] / norm);
            vec.normalized = true;
        }
        out.push_back(std::move(vec));
    }
    return out;
}

RemoteEmbedder::RemoteEmbedder(EmbedderSpec spec) : spec_(std::move(spec)) {
    if (spec_.dim < 1) throw Error(ErrorCode::InvalidConfig, "embedder dim must be >= 1");
    if (const char* env = std::getenv("BULARAG_EMBED_URL"); env && *env) url_ = env;
    else url_ = spec_.endpoint;
    if (url_.empty()) throw Error(ErrorCode::InvalidConfig, "remote embedder needs an endpoint");
    http::split_url(url_);
    if (const char* tok = std::getenv(spec_.token_env.c_str())) token_ = tok;
    spec_.max_concurrency = std::max<std::size_t>(1, spec_.max_concurrency);
    spec_.batch_size = std::max<std::size_t>(1, spec_.batch_size);
    spec_.max_attempts = std::max(1, spec_.max_attempts);
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_batch(const std::vector<std::string>& batch) const {
    const std::string body = nlohmann::json{{"texts", batch}}.dump();
    http::Headers headers;
    if (!token_.empty()) headers.emplace_back("Authorization", "Bearer " + token_);
    const http::RetryPolicy policy{spec_.max_attempts - 1, spec_.initial_backoff};

    http::Response res;
    for (int attempt = 0; attempt < spec_.max_attempts; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(policy.delay(attempt));
        res = http::post_json(url_, body, headers, spec_.timeout_s);
        if (res.status == 200 || !http::is_transient(res)) break;
        spdlog::warn("embedding request failed (attempt {}/{}): status {} {}", attempt + 1, spec_.max_attempts,
                     res.status, res.transport_error);
    }
    if (res.status != 200) {
        throw Error(ErrorCode::RemoteUnavailable,
                    "embedding service returned " + std::to_string(res.status) + " " + res.transport_error);
    }

    nlohmann::json payload;
    try {
        payload = nlohmann::json::parse(res.body);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::RemoteUnavailable, std::string("bad embedding payload: ") + e.what());
    }
    const auto vectors = payload.find("vectors");
    if (vectors == payload.end() || !vectors->is_array() || vectors->size() != batch.size()) {
        throw Error(ErrorCode::RemoteUnavailable, "embedding payload lacks one vector per text");
    }
    std::vector<EmbeddingVector> out;
    out.reserve(batch.size());
    for (const auto& v : *vectors) {
        if (!v.is_array() || v.size() != spec_.dim) {
            throw Error(ErrorCode::DimensionMismatch, "expected dim " + std::to_string(spec_.dim) + ", got " +
                                                          std::to_string(v.is_array() ? v.size() : 0));
        }
        std::vector<float> values = v.get<std::vector<float>>();
        double sq = 0.0;
        for (const float x : values) sq += static_cast<double>(x) * static_cast<double>(x);
        if (sq == 0.0) {
            out.push_back({std::move(values), false});
        } else if (std::abs(std::sqrt(sq) - 1.0) <= 1e-6) {
            out.push_back({std::move(values), true});
        } else {
            out.push_back(normalize(std::move(values)));
        }
    }
    return out;
}

std::vector<EmbeddingVector> RemoteEmbedder::embed(const std::vector<std::string>& texts) const {
    std::vector<std::vector<std::string>> batches;
    for (std::size_t i = 0; i < texts.size(); i += spec_.batch_size) {
        const auto end = std::min(texts.size(), i + spec_.batch_size);
        batches.emplace_back(texts.begin() + static_cast<std::ptrdiff_t>(i),
                             texts.begin() + static_cast<std::ptrdiff_t>(end));
    }
    std::counting_semaphore<> slots(static_cast<std::ptrdiff_t>(spec_.max_concurrency));
    std::vector<std::future<std::vector<EmbeddingVector>>> pending;
    pending.reserve(batches.size());
    for (const auto& batch : batches) {
        slots.acquire();
        pending.push_back(std::async(std::launch::async, [this, &batch, &slots] {
            struct Release {
                std::counting_semaphore<>& s;
                ~Release() { s.release(); }
            } release{slots};
            return embed_batch(batch);
        }));
    }
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    std::exception_ptr first_error;
    for (auto& f : pending) {
        try {
            auto part = f.get();
            std::move(part.begin(), part.end(), std::back_inserter(out));
        } catch (...) {
            if (!first_error) first_error = std::current_exception();
        }
    }
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

std::unique_ptr<Embedder> make_embedder(const EmbedderSpec& spec) {
    if (spec.kind == EmbedderKind::Remote) return std::make_unique<RemoteEmbedder>(spec);
    return std::make_unique<HashedBowEmbedder>(spec);
}

std::vector<EmbeddingVector> embed_texts(const std::vector<std::string>& texts, const EmbedderSpec& spec) {
    return make_embedder(spec)->embed(texts);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "cosine of dim " + std::to_string(a.dim()) + " and " + std::to_string(b.dim()));
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        const double x = a.values[i];
        const double y = b.values[i];
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroVector, "cosine of a zero vector");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

}  // namespace bularag
