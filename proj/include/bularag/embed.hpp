#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace bularag {

struct EmbeddingVector {
    std::vector<float> values;
    /// False for the zero vector, which cannot be normalized.
    bool normalized = false;

    [[nodiscard]] std::size_t dim() const noexcept { return values.size(); }
    [[nodiscard]] bool is_zero() const noexcept;
};

/// L2-normalizes in double precision. A zero input comes back unflagged.
EmbeddingVector normalize(std::vector<float> values);

enum class EmbedderKind { Deterministic, Remote };

struct EmbedderSpec {
    EmbedderKind kind = EmbedderKind::Deterministic;
    std::size_t dim = 384;
    std::string model_name = "all-MiniLM-L6-v2";  // informational

    // Remote only. BULARAG_EMBED_URL overrides `endpoint` when set.
    std::string endpoint;
    std::string token_env = "BULARAG_EMBED_TOKEN";
    std::size_t max_concurrency = 4;
    std::size_t batch_size = 64;
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    double timeout_s = 30.0;

    /// Stable identity of the settings that affect vector values.
    [[nodiscard]] std::string fingerprint() const;
};

class Embedder {
public:
    virtual ~Embedder() = default;

    [[nodiscard]] virtual const EmbedderSpec& spec() const noexcept = 0;
    [[nodiscard]] virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) const = 0;

    [[nodiscard]] std::size_t dim() const noexcept { return spec().dim; }
    [[nodiscard]] EmbeddingVector embed_one(std::string_view text) const;
};

/// Hashed bag of words: lowercase, punctuation as separator, FNV-1a 64 per
/// token, bucket = hash mod dim, sign from bit 63, summed then L2-normalized.
class HashedBowEmbedder final : public Embedder {
public:
    explicit HashedBowEmbedder(EmbedderSpec spec);

    [[nodiscard]] const EmbedderSpec& spec() const noexcept override { return spec_; }
    [[nodiscard]] std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) const override;

private:
    EmbedderSpec spec_;
};

/// Client for an embedding service speaking
///   POST {"texts": [...]}  ->  {"vectors": [[...], ...]}
/// with a bearer token read from the environment. Batches run concurrently
/// up to spec.max_concurrency; each batch is retried with exponential
/// backoff. Vectors pass through untouched unless they are not unit length.
class RemoteEmbedder final : public Embedder {
public:
    explicit RemoteEmbedder(EmbedderSpec spec);

    [[nodiscard]] const EmbedderSpec& spec() const noexcept override { return spec_; }
    [[nodiscard]] std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) const override;

private:
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& batch) const;

    EmbedderSpec spec_;
    std::string url_;
    std::string token_;
};

std::unique_ptr<Embedder> make_embedder(const EmbedderSpec& spec);

std::vector<EmbeddingVector> embed_texts(const std::vector<std::string>& texts, const EmbedderSpec& spec);

/// Throws Error{DimensionMismatch} or Error{ZeroVector}.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

}  // namespace bularag
