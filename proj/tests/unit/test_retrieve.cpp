#include <gtest/gtest.h>

#include <set>

#include "bularag/error.hpp"
#include "bularag/retrieve.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace bularag;

namespace {

EmbedderSpec small_spec() {
    EmbedderSpec s;
    s.dim = 128;
    return s;
}

IndexBundle bundle_of(const std::vector<std::string>& texts, const Embedder& emb) {
    std::vector<Passage> ps;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        Passage p;
        p.id = static_cast<std::int64_t>(i);
        p.doc_id = "d";
        p.source = "f" + std::to_string(i) + ".txt";
        p.medicine = "M";
        p.text = texts[i];
        p.token_count = count_tokens(texts[i]);
        ps.push_back(p);
    }
    return make_bundle(std::move(ps), emb, "t");
}

IndexBundle fixture_bundle(const Embedder& emb) {
    IngestConfig cfg;
    cfg.max_tokens = 40;
    auto corpus = ingest_corpus(testsupport::source_dir() / "data/corpus", IngestRules(cfg));
    return make_bundle(std::move(corpus.passages), emb, "t");
}

std::set<std::int64_t> ids(const std::vector<RetrievalHit>& hits) {
    std::set<std::int64_t> s;
    for (const auto& h : hits) s.insert(h.passage_id);
    return s;
}

std::set<std::string> stopset() {
    std::set<std::string> s;
    for (const auto& w : RetrieverConfig::default_stopwords()) s.insert(oracle::fold_pt(w));
    return s;
}

}  // namespace

TEST(ExpandQuery, Examples) {
    EXPECT_EQ(expand_query("qual a dose?", {}), "qual a dose?");
    const QueryExpansion m{{{"gestantes", {"gravidez", "gestação"}}}};
    EXPECT_EQ(expand_query("uso por gestantes", m), "uso por gestantes gravidez gestação");
    EXPECT_EQ(expand_query(expand_query("uso por gestantes", m), m), expand_query("uso por gestantes", m));
}

TEST(ExpandQuery, CaseAndAccentInsensitiveWholeWords) {
    const QueryExpansion m{{{"gestação", {"gravidez"}}, {"dor de cabeça", {"cefaleia"}}, {"mg", {"miligrama"}}}};
    EXPECT_EQ(expand_query("Uso na GESTACAO", m), "Uso na GESTACAO gravidez");
    EXPECT_EQ(expand_query("remédio para dor de cabeça", m), "remédio para dor de cabeça cefaleia");
    EXPECT_EQ(expand_query("500mg", m), "500mg");  // not a whole word
}

TEST(ExpandQuery, ChainsToFixpointAndIsIdempotent) {
    const QueryExpansion m{{{"a1", {"b1"}}, {"b1", {"c1", "a1"}}}};
    const auto once = expand_query("a1", m);
    EXPECT_EQ(once, "a1 b1 c1");
    EXPECT_EQ(expand_query(once, m), once);
}

TEST(KeywordMatch, StopwordsOnlyGivesNothing) {
    const HashedBowEmbedder emb(small_spec());
    const auto b = bundle_of({"qual a dose de um remédio"}, emb);
    EXPECT_TRUE(keyword_match("qual a de um", b, 10, make_stopword_set(RetrieverConfig::default_stopwords())).empty());
}

TEST(KeywordMatch, FullMatchRanksFirst) {
    const HashedBowEmbedder emb(small_spec());
    const auto b = bundle_of({"sonolência rara", "efeito colateral comum: sonolência", "nada aqui"}, emb);
    const auto hits = keyword_match("sonolência efeito colateral", b, 10, {});
    ASSERT_EQ(hits.size(), 2u);
    EXPECT_EQ(hits[0].passage_id, 1);
    EXPECT_EQ(hits[0].score, 3.0);
    EXPECT_EQ(hits[0].origin, HitOrigin::Keyword);
    EXPECT_EQ(hits[1].score, 1.0);
}

TEST(KeywordMatch, AccentFolding) {
    const HashedBowEmbedder emb(small_spec());
    const auto b = bundle_of({"uso na GESTACAO"}, emb);
    EXPECT_EQ(keyword_match("gestação", b, 10, {}).size(), 1u);
}

TEST(KeywordMatch, FixtureMatchesNaiveScan) {
    const HashedBowEmbedder emb(small_spec());
    const auto b = fixture_bundle(emb);
    std::vector<std::string> texts;
    for (const auto& p : b.passages) texts.push_back(p.text);
    for (const std::string q : {"sonolência efeito colateral", "dose para adultos", "gravidez trimestre",
                                "reações alérgicas anafilático"}) {
        const auto got = keyword_match(q, b, 1000, make_stopword_set(RetrieverConfig::default_stopwords()));
        const auto want = oracle::keyword_scan(q, texts, stopset());
        ASSERT_EQ(got.size(), want.size()) << q;
        for (std::size_t i = 0; i < got.size(); ++i) {
            EXPECT_EQ(got[i].passage_id, want[i].first) << q;
            EXPECT_EQ(got[i].score, want[i].second) << q;
        }
    }
}

TEST(KeywordMatch, LimitTruncates) {
    const HashedBowEmbedder emb(small_spec());
    const auto b = bundle_of({"dose", "dose", "dose"}, emb);
    EXPECT_EQ(keyword_match("dose", b, 2, {}).size(), 2u);
    EXPECT_TRUE(keyword_match("dose", b, 0, {}).empty());
}

TEST(RegexMatch, Examples) {
    const HashedBowEmbedder emb(small_spec());
    const auto b = bundle_of({"500 mg a cada 8 horas", "sem números"}, emb);
    const auto pats = compile_patterns({R"(\d+\s?mg)"});
    const auto hits = regex_match(pats, b, 10);
    ASSERT_EQ(hits.size(), 1u);
    EXPECT_EQ(hits[0].passage_id, 0);
    EXPECT_EQ(hits[0].score, 1.0);
    EXPECT_TRUE(regex_match(compile_patterns({"zzz"}), b, 10).empty());
}

TEST(RegexMatch, FixtureDosageMatchesNaiveScan) {
    const HashedBowEmbedder emb(small_spec());
    const auto b = fixture_bundle(emb);
    const std::string pattern = RetrieverConfig::default_regex_patterns()[0].pattern;
    const auto hits = regex_match(compile_patterns({pattern}), b, 1000);
    const std::regex re(pattern, std::regex::icase);
    std::vector<std::pair<std::int64_t, int>> want;
    for (const auto& p : b.passages) {
        int n = 0;
        std::smatch m;
        for (auto it = p.text.cbegin(); std::regex_search(it, p.text.cend(), m, re);) {
            ++n;
            it = m[0].second == m[0].first ? m[0].second + 1 : m[0].second;
        }
        if (n > 0) want.emplace_back(p.id, n);
    }
    std::sort(want.begin(), want.end(), [](auto& x, auto& y) { return x.second != y.second ? x.second > y.second : x.first < y.first; });
    ASSERT_EQ(hits.size(), want.size());
    ASSERT_FALSE(hits.empty());
    for (std::size_t i = 0; i < hits.size(); ++i) {
        EXPECT_EQ(hits[i].passage_id, want[i].first);
        EXPECT_EQ(hits[i].score, want[i].second);
    }
}

TEST(CompilePatterns, InvalidPattern) {
    try {
        (void)compile_patterns({"(unclosed"});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidPattern);
    }
    RetrieverConfig cfg;
    cfg.regex_patterns = {{"bad", "[", {}}};
    EXPECT_THROW(Retriever{cfg}, Error);
}

TEST(Retriever, TriggersActivatePatterns) {
    const Retriever r;
    EXPECT_EQ(r.active_patterns("qual a dose para adultos").size(), 1u);
    EXPECT_EQ(r.active_patterns("uso na gravidez por crianças").size(), 2u);
    EXPECT_TRUE(r.active_patterns("efeitos colaterais").empty());
}

TEST(HybridSearch, DisabledChannelsEqualVectorSearch) {
    const HashedBowEmbedder emb(small_spec());
    const auto b = fixture_bundle(emb);
    const Retriever r;
    const auto hits = hybrid_search("dose para adultos", b, emb, r, 8, std::nullopt, false);
    const auto vec = search_index(b.index, emb.embed_one("dose para adultos"), 8);
    ASSERT_EQ(hits.size(), vec.size());
    for (std::size_t i = 0; i < hits.size(); ++i) {
        EXPECT_EQ(hits[i].passage_id, vec[i].passage_id);
        EXPECT_EQ(hits[i].score, vec[i].distance);
        EXPECT_EQ(hits[i].origin, HitOrigin::Vector);
    }
}

TEST(HybridSearch, ZeroThresholdDropsVectorHits) {
    const HashedBowEmbedder emb(small_spec());
    const auto b = fixture_bundle(emb);
    const Retriever r;
    const auto hits = hybrid_search("sonolência", b, emb, r, 8, 0.0, true);
    ASSERT_FALSE(hits.empty());
    for (const auto& h : hits) EXPECT_NE(h.origin, HitOrigin::Vector);
}

TEST(HybridSearch, SupersetNoDuplicatesAndCap) {
    const HashedBowEmbedder emb(small_spec());
    const auto b = fixture_bundle(emb);
    RetrieverConfig cfg;
    cfg.expansion = RetrieverConfig::default_expansion();
    const Retriever r(cfg);
    for (const std::string q : {"Liste os medicamentos que apresentam sonolência como efeito colateral",
                                "Informe as doses recomendadas para adultos", "uso por gestantes no trimestre"}) {
        const auto vec = hybrid_search(q, b, emb, r, 8, std::nullopt, false);
        const auto all = hybrid_search(q, b, emb, r);
        const auto all_ids = ids(all);
        EXPECT_EQ(all_ids.size(), all.size()) << "duplicates for " << q;
        EXPECT_LE(all.size(), cfg.max_context);
        for (const auto id : ids(vec)) EXPECT_TRUE(all_ids.count(id)) << q;
        EXPECT_EQ(hybrid_search(q, b, emb, r), all);  // deterministic
    }
}

TEST(HybridSearch, KeywordOnlyHitSurvivesOutsideVectorTop8) {
    const HashedBowEmbedder emb(small_spec());
    std::vector<std::string> texts;
    for (int i = 0; i < 20; ++i) texts.push_back("quais medicamentos podem ser tomados " + std::to_string(i));
    std::string rare = "zolpidem";
    for (int i = 0; i < 40; ++i) rare += " ruido" + std::to_string(i);
    texts.push_back(rare);
    const auto b = bundle_of(texts, emb);
    const std::string q = "quais medicamentos podem ser zolpidem";
    std::vector<std::vector<float>> rows;
    for (std::size_t i = 0; i < b.index.size(); ++i) rows.emplace_back(b.index.row(i).begin(), b.index.row(i).end());
    const auto top8 = oracle::brute_force_knn(rows, emb.embed_one(q).values, 8);
    for (const auto& n : top8) ASSERT_NE(n.id, 20);
    const auto hits = hybrid_search(q, b, emb, Retriever{});
    const auto it = std::find_if(hits.begin(), hits.end(), [](const auto& h) { return h.passage_id == 20; });
    ASSERT_NE(it, hits.end());
    EXPECT_EQ(it->origin, HitOrigin::Keyword);
}

TEST(HybridSearch, Errors) {
    const HashedBowEmbedder emb(small_spec());
    const auto b = fixture_bundle(emb);
    try {
        (void)hybrid_search("x", b, emb, Retriever{}, 13, std::nullopt, true);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
    }
    EmbedderSpec other;
    other.dim = 64;
    try {
        (void)hybrid_search("x", b, HashedBowEmbedder(other), Retriever{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
    }
}

TEST(HitOrigin, Names) {
    EXPECT_EQ(to_string(HitOrigin::Vector), "vector");
    EXPECT_EQ(to_string(HitOrigin::Keyword), "keyword");
    EXPECT_EQ(to_string(HitOrigin::Regex), "regex");
}
