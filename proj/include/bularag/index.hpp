#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "bularag/embed.hpp"
#include "bularag/ingest.hpp"

namespace bularag {

struct SearchResult {
    std::int64_t passage_id = 0;
    double distance = 0.0;  // squared L2

    friend bool operator==(const SearchResult&, const SearchResult&) = default;
};

/// Exact flat index: rows kept in insertion order, every query scans all of
/// them. Immutable once built, so concurrent searches are safe.
class VectorIndex {
public:
    explicit VectorIndex(std::size_t dim);

    void add(std::span<const float> row, std::int64_t passage_id);

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t size() const noexcept { return ids_.size(); }
    [[nodiscard]] std::span<const float> row(std::size_t i) const;
    [[nodiscard]] const std::vector<float>& data() const noexcept { return data_; }
    [[nodiscard]] const std::vector<std::int64_t>& passage_ids() const noexcept { return ids_; }

    /// min(top_k, size()) results ordered by (distance, passage_id).
    [[nodiscard]] std::vector<SearchResult> search(std::span<const float> query, std::size_t top_k) const;

private:
    std::size_t dim_;
    std::vector<float> data_;
    std::vector<std::int64_t> ids_;
    std::unordered_set<std::int64_t> id_set_;
};

/// Rows get passage ids 0..N-1 in input order. Throws EmptyInput or
/// DimensionMismatch.
VectorIndex build_index(const std::vector<EmbeddingVector>& embeddings);

std::vector<SearchResult> search_index(const VectorIndex& index, const EmbeddingVector& query, std::size_t top_k);

struct BundleMeta {
    std::string embedder_fingerprint;
    std::string embedder_kind;
    std::string model_name;
    std::size_t dim = 0;
    bool normalized = true;
    std::string created_at;

    friend bool operator==(const BundleMeta&, const BundleMeta&) = default;
};

/// Index plus the passages it was built from. Row i of the index holds the
/// vector of passages[i], and passages[i].id == index.passage_ids()[i].
struct IndexBundle {
    VectorIndex index{1};
    std::vector<Passage> passages;
    BundleMeta meta;

    /// Throws Error{InvalidArgument} when rows and passages disagree.
    void validate() const;
    [[nodiscard]] const Passage& passage(std::int64_t id) const;
    [[nodiscard]] std::vector<std::string> sources() const;
};

IndexBundle make_bundle(std::vector<Passage> passages, const Embedder& embedder, std::string created_at = {});

// Binary layout (little-endian):
//   "BRAGIDX1" | u32 version | u32 dim | u64 N | N*dim f32 row-major
//   | u64 json_len | json trailer (passages, sources, meta) | u32 CRC32
inline constexpr std::string_view kBundleMagic = "BRAGIDX1";
inline constexpr std::uint32_t kBundleVersion = 1;

std::string serialize_bundle(const IndexBundle& bundle);
/// Throws Error{CorruptBundle} or Error{VersionUnsupported}.
IndexBundle parse_bundle(std::string_view bytes);

void save_bundle(const IndexBundle& bundle, const std::filesystem::path& path);
IndexBundle load_bundle(const std::filesystem::path& path);

}  // namespace bularag
