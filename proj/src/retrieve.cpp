#include "bularag/retrieve.hpp"

#include <algorithm>
#include <iterator>
#include <unordered_map>

#include "bularag/error.hpp"
#include "bularag/text.hpp"

namespace bularag {

std::string_view to_string(HitOrigin origin) {
    switch (origin) {
        case HitOrigin::Vector: return "vector";
        case HitOrigin::Keyword: return "keyword";
        case HitOrigin::Regex: return "regex";
    }
    return "unknown";
}

namespace {

bool contains_phrase(const std::vector<std::string>& haystack, const std::vector<std::string>& phrase) {
    if (phrase.empty() || phrase.size() > haystack.size()) return false;
    return std::search(haystack.begin(), haystack.end(), phrase.begin(), phrase.end()) != haystack.end();
}

bool by_score_then_id(const RetrievalHit& a, const RetrievalHit& b) {
    return a.score != b.score ? a.score > b.score : a.passage_id < b.passage_id;
}

RetrievalHit make_hit(HitOrigin origin, const Passage& p, double score) {
    return {origin, p.id, p.source, p.text, score};
}

}  // namespace

std::string expand_query(std::string_view query, const QueryExpansion& expansion) {
    std::string out(query);
    auto present = text::words(out, true);
    for (bool grew = true; grew;) {
        grew = false;
        for (const auto& entry : expansion.synonym_map) {
            if (!contains_phrase(present, text::words(entry.term, true))) continue;
            for (const auto& term : entry.expansions) {
                const auto term_words = text::words(term, true);
                if (term_words.empty() || contains_phrase(present, term_words)) continue;
                out.push_back(' ');
                out += term;
                present.insert(present.end(), term_words.begin(), term_words.end());
                grew = true;
            }
        }
    }
    return out;
}

std::vector<std::string> RetrieverConfig::default_stopwords() {
    return {
        "a", "o", "as", "os", "um", "uma", "uns", "umas", "de", "do", "da", "dos", "das", "em", "no", "na",
        "nos", "nas", "num", "numa", "por", "pelo", "pela", "pelos", "pelas", "para", "pra", "com", "sem",
        "e", "ou", "que", "qual", "quais", "quem", "como", "onde", "quando", "se", "ao", "aos", "à", "às",
        "é", "ser", "são", "foi", "está", "estão", "há", "tem", "têm", "ter", "seu", "sua", "seus", "suas",
        "este", "esta", "estes", "estas", "esse", "essa", "esses", "essas", "isso", "isto", "aquele",
        "aquela", "mais", "menos", "muito", "muitos", "já", "não", "sim", "também", "mas", "me", "lhe",
        "eu", "ele", "ela", "eles", "elas", "você", "algum", "alguma", "alguns", "algumas", "sobre", "entre",
        "até", "após", "deve", "devem", "pode", "podem", "liste", "cite", "informe", "indique", "segundo",
        "conforme", "bula", "bulas", "medicamento", "medicamentos", "analisados", "analisado", "apresentam",
        "possuem", "mencionadas", "mencionados", "cuja", "cujo",
    };
}

std::vector<RegexPatternSpec> RetrieverConfig::default_regex_patterns() {
    return {
        {"dosagem", R"(\b\d+([.,]\d+)?\s?(mg|ml|g|mcg)\b)",
         {"dose", "doses", "dosagem", "posologia", "mg", "ml", "quantidade", "tomar"}},
        {"faixa_etaria",
         R"(\b(acima|a partir|maiores|menores|menos|mais)\s+de\s+\d+\s+(anos|meses)\b|\b\d+\s+(a|e)\s+\d+\s+(anos|meses)\b)",
         {"idade", "faixa", "faixas", "etaria", "etarias", "criancas", "crianca", "pediatrica", "pediatrico",
          "idosos", "anos", "meses"}},
        {"trimestre", R"(\b(primeiro|segundo|terceiro|[123]\S{0,2})\s+trimestre)",
         {"gestantes", "gestante", "gravidez", "gestacao", "gravidas", "gravida", "trimestre", "gestacional"}},
    };
}

QueryExpansion RetrieverConfig::default_expansion() {
    return {{
        {"gestantes", {"gravidez", "gestação", "grávidas"}},
        {"grávidas", {"gravidez", "gestantes"}},
        {"sonolência", {"sedação", "tontura"}},
        {"efeito colateral", {"reações adversas"}},
        {"crianças", {"pediátrico", "pediátrica"}},
        {"pediátrica", {"crianças"}},
        {"alérgicas", {"alergia", "hipersensibilidade", "anafilaxia"}},
        {"alergia", {"hipersensibilidade", "anafilaxia"}},
        {"dor de cabeça", {"cefaleia", "analgésico"}},
        {"hipertensos", {"hipertensão", "pressão arterial"}},
        {"álcool", {"bebidas alcoólicas"}},
        {"alimentos", {"refeições", "jejum"}},
        {"idosos", {"pacientes idosos", "geriátrico"}},
        {"dose", {"posologia"}},
        {"doses", {"posologia"}},
    }};
}

std::vector<std::regex> compile_patterns(const std::vector<std::string>& patterns) {
    std::vector<std::regex> out;
    out.reserve(patterns.size());
    for (const auto& p : patterns) {
        try {
            out.emplace_back(p, std::regex::ECMAScript | std::regex::icase);
        } catch (const std::regex_error& e) {
            throw Error(ErrorCode::InvalidPattern, "'" + p + "': " + e.what());
        }
    }
    return out;
}

StopwordSet make_stopword_set(const std::vector<std::string>& words) {
    StopwordSet set;
    for (const auto& w : words) {
        for (auto& folded : text::words(w, true)) set.insert(std::move(folded));
    }
    return set;
}

std::vector<std::string> content_words(std::string_view query, const StopwordSet& stopwords) {
    std::vector<std::string> out;
    for (auto& w : text::words(query, true)) {
        if (stopwords.contains(w) || std::find(out.begin(), out.end(), w) != out.end()) continue;
        out.push_back(std::move(w));
    }
    return out;
}

std::vector<RetrievalHit> keyword_match(std::string_view query, const IndexBundle& bundle, std::size_t limit,
                                        const StopwordSet& stopwords) {
    const auto terms = content_words(query, stopwords);
    if (terms.empty() || limit == 0) return {};
    std::vector<RetrievalHit> hits;
    for (const auto& p : bundle.passages) {
        const auto passage_words = text::words(p.text, true);
        const std::unordered_set<std::string> vocab(passage_words.begin(), passage_words.end());
        const auto score = std::count_if(terms.begin(), terms.end(), [&](const auto& t) { return vocab.contains(t); });
        if (score > 0) hits.push_back(make_hit(HitOrigin::Keyword, p, static_cast<double>(score)));
    }
    std::sort(hits.begin(), hits.end(), by_score_then_id);
    if (hits.size() > limit) hits.resize(limit);
    return hits;
}

std::vector<RetrievalHit> regex_match(std::span<const std::regex> patterns, const IndexBundle& bundle,
                                      std::size_t limit) {
    if (patterns.empty() || limit == 0) return {};
    std::vector<RetrievalHit> hits;
    for (const auto& p : bundle.passages) {
        std::size_t count = 0;
        for (const auto& re : patterns) {
            count += static_cast<std::size_t>(
                std::distance(std::sregex_iterator(p.text.begin(), p.text.end(), re), std::sregex_iterator()));
        }
        if (count > 0) hits.push_back(make_hit(HitOrigin::Regex, p, static_cast<double>(count)));
    }
    std::sort(hits.begin(), hits.end(), by_score_then_id);
    if (hits.size() > limit) hits.resize(limit);
    return hits;
}

Retriever::Retriever(RetrieverConfig config)
    : config_(std::move(config)), stopwords_(make_stopword_set(config_.stopwords)) {
    if (config_.max_context < 1) throw Error(ErrorCode::InvalidConfig, "max_context must be >= 1");
    if (config_.top_k < 1) throw Error(ErrorCode::InvalidConfig, "top_k must be >= 1");
    for (const auto& spec : config_.regex_patterns) {
        auto compiled = compile_patterns({spec.pattern});
        std::vector<std::string> triggers;
        for (const auto& t : spec.triggers) {
            auto w = text::words(t, true);
            triggers.insert(triggers.end(), w.begin(), w.end());
        }
        patterns_.push_back({std::move(compiled.front()), std::move(triggers)});
    }
}

std::vector<std::regex> Retriever::active_patterns(std::string_view expanded_query) const {
    const auto q = text::words(expanded_query, true);
    const std::unordered_set<std::string> words(q.begin(), q.end());
    std::vector<std::regex> out;
    for (const auto& p : patterns_) {
        const bool on = p.triggers.empty() ||
                        std::any_of(p.triggers.begin(), p.triggers.end(), [&](const auto& t) { return words.contains(t); });
        if (on) out.push_back(p.re);
    }
    return out;
}

std::vector<RetrievalHit> hybrid_search(std::string_view query, const IndexBundle& bundle, const Embedder& embedder,
                                        const Retriever& retriever, std::size_t top_k,
                                        std::optional<double> threshold, bool hybrid) {
    const auto& cfg = retriever.config();
    if (bundle.index.dim() != embedder.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "bundle dim " + std::to_string(bundle.index.dim()) +
                                                      " vs embedder dim " + std::to_string(embedder.dim()));
    }
    if (top_k < 1 || top_k > cfg.max_context) {
        throw Error(ErrorCode::InvalidArgument, "top_k must be in [1, max_context=" + std::to_string(cfg.max_context) + "]");
    }
    const std::string expanded = expand_query(query, cfg.expansion);

    std::vector<RetrievalHit> out;
    if (bundle.index.size() > 0) {
        const auto q = embedder.embed_one(expanded);
        for (const auto& r : bundle.index.search(q.values, top_k)) {
            if (threshold && !(r.distance < *threshold)) continue;
            out.push_back(make_hit(HitOrigin::Vector, bundle.passage(r.passage_id), r.distance));
        }
    }
    if (hybrid) {
        std::unordered_set<std::int64_t> present;
        for (const auto& h : out) present.insert(h.passage_id);
        auto append = [&](std::vector<RetrievalHit> channel) {
            for (auto& h : channel) {
                if (out.size() >= cfg.max_context) return;
                if (present.insert(h.passage_id).second) out.push_back(std::move(h));
            }
        };
        append(keyword_match(expanded, bundle, cfg.max_context, retriever.stopwords()));
        append(regex_match(retriever.active_patterns(expanded), bundle, cfg.max_context));
    }
    if (out.size() > cfg.max_context) out.resize(cfg.max_context);
    return out;
}

std::vector<RetrievalHit> hybrid_search(std::string_view query, const IndexBundle& bundle, const Embedder& embedder,
                                        const Retriever& retriever) {
    const auto& cfg = retriever.config();
    return hybrid_search(query, bundle, embedder, retriever, cfg.top_k, cfg.threshold, cfg.hybrid);
}

}  // namespace bularag
