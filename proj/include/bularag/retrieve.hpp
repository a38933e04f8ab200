#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "bularag/embed.hpp"
#include "bularag/index.hpp"

namespace bularag {

enum class HitOrigin { Vector, Keyword, Regex };

std::string_view to_string(HitOrigin origin);

struct RetrievalHit {
    HitOrigin origin = HitOrigin::Vector;
    std::int64_t passage_id = 0;
    std::string source;
    std::string text;
    /// Vector: squared L2 distance (lower is better). Keyword: distinct
    /// content words matched. Regex: total match count.
    double score = 0.0;

    friend bool operator==(const RetrievalHit&, const RetrievalHit&) = default;
};

struct SynonymEntry {
    std::string term;
    std::vector<std::string> expansions;
};

/// Ordered synonym map; order decides the order of appended terms.
struct QueryExpansion {
    std::vector<SynonymEntry> synonym_map;
};

/// Appends the expansions of every term found in the query (whole words,
/// case- and accent-insensitive) that are not already present. Repeats until
/// nothing new is added, which makes it idempotent.
std::string expand_query(std::string_view query, const QueryExpansion& expansion);

struct RegexPatternSpec {
    std::string name;
    std::string pattern;
    /// Pattern is used by hybrid search only when one of these words occurs
    /// in the expanded query. Empty means always.
    std::vector<std::string> triggers;
};

struct RetrieverConfig {
    std::size_t top_k = 8;
    std::optional<double> threshold;
    bool hybrid = true;
    std::size_t max_context = 12;
    QueryExpansion expansion;
    std::vector<std::string> stopwords = default_stopwords();
    std::vector<RegexPatternSpec> regex_patterns = default_regex_patterns();

    static std::vector<std::string> default_stopwords();
    static std::vector<RegexPatternSpec> default_regex_patterns();
    static QueryExpansion default_expansion();
};

/// Throws Error{InvalidPattern}.
std::vector<std::regex> compile_patterns(const std::vector<std::string>& patterns);

using StopwordSet = std::unordered_set<std::string>;

StopwordSet make_stopword_set(const std::vector<std::string>& words);

/// Folded, de-duplicated query words minus stopwords, in query order.
std::vector<std::string> content_words(std::string_view query, const StopwordSet& stopwords);

std::vector<RetrievalHit> keyword_match(std::string_view query, const IndexBundle& bundle, std::size_t limit,
                                        const StopwordSet& stopwords);

std::vector<RetrievalHit> regex_match(std::span<const std::regex> patterns, const IndexBundle& bundle,
                                      std::size_t limit);

/// Compiled retriever settings, immutable and shareable across threads.
class Retriever {
public:
    explicit Retriever(RetrieverConfig config = {});

    [[nodiscard]] const RetrieverConfig& config() const noexcept { return config_; }
    [[nodiscard]] const StopwordSet& stopwords() const noexcept { return stopwords_; }
    /// Patterns whose triggers occur in `expanded_query`.
    [[nodiscard]] std::vector<std::regex> active_patterns(std::string_view expanded_query) const;

private:
    struct Compiled {
        std::regex re;
        std::vector<std::string> triggers;
    };

    RetrieverConfig config_;
    StopwordSet stopwords_;
    std::vector<Compiled> patterns_;
};

/// Expand, vector search (top_k, optional strict distance threshold), then
/// when `hybrid` append keyword and regex hits not already present; at most
/// max_context hits. Order: vector by distance, keyword by score, regex by
/// score.
std::vector<RetrievalHit> hybrid_search(std::string_view query, const IndexBundle& bundle, const Embedder& embedder,
                                        const Retriever& retriever, std::size_t top_k,
                                        std::optional<double> threshold, bool hybrid);

/// Same, with top_k/threshold/hybrid taken from the retriever config.
std::vector<RetrievalHit> hybrid_search(std::string_view query, const IndexBundle& bundle, const Embedder& embedder,
                                        const Retriever& retriever);

}  // namespace bularag
