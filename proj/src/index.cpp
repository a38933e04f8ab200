#include "bularag/index.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <unordered_set>

#include <nlohmann/json.hpp>
#include <zlib.h>

#include "bularag/error.hpp"

namespace bularag {

static_assert(std::endian::native == std::endian::little, "bundle I/O assumes a little-endian host");

VectorIndex::VectorIndex(std::size_t dim) : dim_(dim) {
    if (dim_ < 1) throw Error(ErrorCode::InvalidArgument, "index dim must be >= 1");
}

void VectorIndex::add(std::span<const float> row, std::int64_t passage_id) {
    if (row.size() != dim_) {
        throw Error(ErrorCode::DimensionMismatch,
                    "row of dim " + std::to_string(row.size()) + " added to index of dim " + std::to_string(dim_));
    }
    if (!id_set_.insert(passage_id).second) {
        throw Error(ErrorCode::InvalidArgument, "duplicate passage id " + std::to_string(passage_id));
    }
    data_.insert(data_.end(), row.begin(), row.end());
    ids_.push_back(passage_id);
}

std::span<const float> VectorIndex::row(std::size_t i) const {
    return std::span<const float>(data_).subspan(i * dim_, dim_);
}

std::vector<SearchResult> VectorIndex::search(std::span<const float> query, std::size_t top_k) const {
    if (query.size() != dim_) {
        throw Error(ErrorCode::DimensionMismatch,
                    "query of dim " + std::to_string(query.size()) + " against index of dim " + std::to_string(dim_));
    }
    if (top_k < 1) throw Error(ErrorCode::InvalidArgument, "top_k must be >= 1");
    std::vector<SearchResult> all;
    all.reserve(ids_.size());
    for (std::size_t r = 0; r < ids_.size(); ++r) {
        const float* x = data_.data() + r * dim_;
        double d = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) {
            const double diff = static_cast<double>(x[j]) - static_cast<double>(query[j]);
            d += diff * diff;
        }
        all.push_back({ids_[r], d});
    }
    const auto k = std::min(top_k, all.size());
    const auto by_distance = [](const SearchResult& a, const SearchResult& b) {
        return a.distance != b.distance ? a.distance < b.distance : a.passage_id < b.passage_id;
    };
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), by_distance);
    all.resize(k);
    return all;
}

VectorIndex build_index(const std::vector<EmbeddingVector>& embeddings) {
    if (embeddings.empty()) throw Error(ErrorCode::EmptyInput, "no embeddings to index");
    VectorIndex index(embeddings.front().dim() == 0 ? 1 : embeddings.front().dim());
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
        index.add(embeddings[i].values, static_cast<std::int64_t>(i));
    }
    return index;
}

std::vector<SearchResult> search_index(const VectorIndex& index, const EmbeddingVector& query, std::size_t top_k) {
    return index.search(query.values, top_k);
}

void IndexBundle::validate() const {
    if (index.size() != passages.size()) {
        throw Error(ErrorCode::InvalidArgument, "index has " + std::to_string(index.size()) + " rows but " +
                                                    std::to_string(passages.size()) + " passages");
    }
    std::unordered_set<std::int64_t> seen;
    for (std::size_t i = 0; i < passages.size(); ++i) {
        if (passages[i].id != index.passage_ids()[i]) {
            throw Error(ErrorCode::InvalidArgument, "row " + std::to_string(i) + " is not aligned with its passage");
        }
        if (!seen.insert(passages[i].id).second) {
            throw Error(ErrorCode::InvalidArgument, "duplicate passage id " + std::to_string(passages[i].id));
        }
    }
}

const Passage& IndexBundle::passage(std::int64_t id) const {
    // Ids are dense and in row order for every bundle produced here.
    if (id >= 0 && static_cast<std::size_t>(id) < passages.size() && passages[static_cast<std::size_t>(id)].id == id) {
        return passages[static_cast<std::size_t>(id)];
    }
    const auto it = std::find_if(passages.begin(), passages.end(), [id](const Passage& p) { return p.id == id; });
    if (it == passages.end()) throw Error(ErrorCode::InvalidArgument, "unknown passage id " + std::to_string(id));
    return *it;
}

std::vector<std::string> IndexBundle::sources() const {
    std::vector<std::string> out;
    out.reserve(passages.size());
    for (const auto& p : passages) out.push_back(p.source);
    return out;
}

IndexBundle make_bundle(std::vector<Passage> passages, const Embedder& embedder, std::string created_at) {
    if (passages.empty()) throw Error(ErrorCode::EmptyInput, "no passages to index");
    std::vector<std::string> texts;
    texts.reserve(passages.size());
    for (const auto& p : passages) texts.push_back(p.text);
    const auto vectors = embedder.embed(texts);

    IndexBundle bundle{VectorIndex(embedder.dim()), std::move(passages), {}};
    for (std::size_t i = 0; i < vectors.size(); ++i) bundle.index.add(vectors[i].values, bundle.passages[i].id);
    bundle.meta.embedder_fingerprint = embedder.spec().fingerprint();
    bundle.meta.embedder_kind = embedder.spec().kind == EmbedderKind::Deterministic ? "deterministic" : "remote";
    bundle.meta.model_name = embedder.spec().model_name;
    bundle.meta.dim = embedder.dim();
    bundle.meta.normalized = true;
    bundle.meta.created_at = std::move(created_at);
    bundle.validate();
    return bundle;
}

namespace {

template <typename T>
void put(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T get(std::string_view bytes, std::size_t& pos) {
    if (bytes.size() - pos < sizeof(T)) throw Error(ErrorCode::CorruptBundle, "truncated bundle");
    T value;
    std::memcpy(&value, bytes.data() + pos, sizeof(T));
    pos += sizeof(T);
    return value;
}

std::uint32_t crc32_of(std::string_view bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in chunks.
    constexpr std::size_t kChunk = 1u << 30;
    for (std::size_t off = 0; off < bytes.size(); off += kChunk) {
        const auto n = std::min(kChunk, bytes.size() - off);
        crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + off), static_cast<uInt>(n));
    }
    return static_cast<std::uint32_t>(crc);
}

nlohmann::json passage_to_json(const Passage& p) {
    return {{"id", p.id},
            {"doc_id", p.doc_id},
            {"source", p.source},
            {"medicine", p.medicine},
            {"section", p.section_label ? nlohmann::json(*p.section_label) : nlohmann::json(nullptr)},
            {"text", p.text},
            {"token_count", p.token_count}};
}

Passage passage_from_json(const nlohmann::json& j) {
    Passage p;
    p.id = j.at("id").get<std::int64_t>();
    p.doc_id = j.at("doc_id").get<std::string>();
    p.source = j.at("source").get<std::string>();
    p.medicine = j.at("medicine").get<std::string>();
    if (const auto& s = j.at("section"); !s.is_null()) p.section_label = s.get<std::string>();
    p.text = j.at("text").get<std::string>();
    p.token_count = j.at("token_count").get<std::size_t>();
    return p;
}

}  // namespace

std::string serialize_bundle(const IndexBundle& bundle) {
    bundle.validate();
    nlohmann::json passages = nlohmann::json::array();
    for (const auto& p : bundle.passages) passages.push_back(passage_to_json(p));
    const nlohmann::json trailer{
        {"passages", std::move(passages)},
        {"sources", bundle.sources()},
        {"meta",
         {{"embedder_fingerprint", bundle.meta.embedder_fingerprint},
          {"embedder_kind", bundle.meta.embedder_kind},
          {"model_name", bundle.meta.model_name},
          {"dim", bundle.meta.dim},
          {"normalized", bundle.meta.normalized},
          {"created_at", bundle.meta.created_at},
          {"distance", "squared_l2"}}},
    };
    const std::string json = trailer.dump();

    std::string out;
    out.reserve(kBundleMagic.size() + 16 + bundle.index.data().size() * sizeof(float) + json.size() + 12);
    out.append(kBundleMagic);
    put<std::uint32_t>(out, kBundleVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(bundle.index.dim()));
    put<std::uint64_t>(out, bundle.index.size());
    out.append(reinterpret_cast<const char*>(bundle.index.data().data()), bundle.index.data().size() * sizeof(float));
    put<std::uint64_t>(out, json.size());
    out.append(json);
    put<std::uint32_t>(out, crc32_of(out));
    return out;
}

IndexBundle parse_bundle(std::string_view bytes) {
    if (bytes.size() < kBundleMagic.size() || bytes.substr(0, kBundleMagic.size()) != kBundleMagic) {
        throw Error(ErrorCode::CorruptBundle, "bad magic");
    }
    if (bytes.size() < kBundleMagic.size() + 4 + 4 + 8 + 8 + 4) throw Error(ErrorCode::CorruptBundle, "truncated bundle");
    const auto body = bytes.substr(0, bytes.size() - 4);
    std::size_t crc_pos = body.size();
    if (get<std::uint32_t>(bytes, crc_pos) != crc32_of(body)) throw Error(ErrorCode::CorruptBundle, "checksum mismatch");

    std::size_t pos = kBundleMagic.size();
    const auto version = get<std::uint32_t>(body, pos);
    if (version != kBundleVersion) {
        throw Error(ErrorCode::VersionUnsupported, "bundle version " + std::to_string(version));
    }
    const auto dim = get<std::uint32_t>(body, pos);
    const auto n = get<std::uint64_t>(body, pos);
    if (dim == 0) throw Error(ErrorCode::CorruptBundle, "zero dim");
    if (n > (body.size() - pos) / (static_cast<std::uint64_t>(dim) * sizeof(float))) {
        throw Error(ErrorCode::CorruptBundle, "row count exceeds file size");
    }
    std::vector<float> rows(static_cast<std::size_t>(n) * dim);
    std::memcpy(rows.data(), body.data() + pos, rows.size() * sizeof(float));
    pos += rows.size() * sizeof(float);
    const auto json_len = get<std::uint64_t>(body, pos);
    if (json_len != body.size() - pos) throw Error(ErrorCode::CorruptBundle, "trailer length mismatch");

    IndexBundle bundle{VectorIndex(dim), {}, {}};
    try {
        const auto trailer = nlohmann::json::parse(body.substr(pos));
        for (const auto& p : trailer.at("passages")) bundle.passages.push_back(passage_from_json(p));
        const auto& meta = trailer.at("meta");
        bundle.meta.embedder_fingerprint = meta.at("embedder_fingerprint").get<std::string>();
        bundle.meta.embedder_kind = meta.at("embedder_kind").get<std::string>();
        bundle.meta.model_name = meta.at("model_name").get<std::string>();
        bundle.meta.dim = meta.at("dim").get<std::size_t>();
        bundle.meta.normalized = meta.at("normalized").get<bool>();
        bundle.meta.created_at = meta.at("created_at").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::CorruptBundle, std::string("bad trailer: ") + e.what());
    }
    if (bundle.passages.size() != n) throw Error(ErrorCode::CorruptBundle, "passage count differs from row count");
    for (std::size_t i = 0; i < n; ++i) {
        bundle.index.add(std::span<const float>(rows).subspan(i * dim, dim), bundle.passages[i].id);
    }
    try {
        bundle.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::CorruptBundle, e.what());
    }
    return bundle;
}

void save_bundle(const IndexBundle& bundle, const std::filesystem::path& path) {
    const auto bytes = serialize_bundle(bundle);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::UnreadableFile, "cannot write '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::UnreadableFile, "write failed for '" + path.string() + "'");
}

IndexBundle load_bundle(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open '" + path.string() + "'");
    const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_bundle(bytes);
}

}  // namespace bularag
