#include <gtest/gtest.h>

#include <sstream>

#include "bularag/commands.hpp"
#include "bularag/error.hpp"
#include "oracles.hpp"
#include "pipeline.hpp"
#include "test_support.hpp"

using namespace bularag;

namespace {

std::unique_ptr<Session> session_in(const testsupport::TempDir& dir) {
    return open_session(testsupport::build_pipeline(dir));
}

}  // namespace

TEST(Manifest, LineRoundtrip) {
    Passage p{7, "doc", "bula_x.txt", "XPTO", "1. INDICAÇÕES", "texto \"com\" aspas\nquebra", 4};
    EXPECT_EQ(passage_from_json_line(passage_to_json_line(p)), p);
    p.section_label.reset();
    EXPECT_EQ(passage_from_json_line(passage_to_json_line(p)), p);
    EXPECT_THROW((void)passage_from_json_line("{oops"), Error);
    EXPECT_THROW((void)passage_from_json_line(R"({"id": 1})"), Error);
}

TEST(Ingest, EmptyDirectory) {
    testsupport::TempDir dir;
    std::filesystem::create_directories(dir / "corpus");
    std::ostringstream out;
    const auto stats = cmd_ingest(dir / "corpus", dir / "m.jsonl", IngestConfig{}, out);
    EXPECT_EQ(stats.documents, 0u);
    EXPECT_EQ(stats.passages, 0u);
    EXPECT_TRUE(read_manifest(dir / "m.jsonl").empty());
}

TEST(Ingest, ShippedCorpus) {
    testsupport::TempDir dir;
    std::ostringstream out;
    const auto stats =
        cmd_ingest(testsupport::source_dir() / "data/corpus", dir / "sub/m.jsonl", IngestConfig{}, out);
    EXPECT_EQ(stats.documents, 5u);
    const auto manifest = read_manifest(dir / "sub/m.jsonl");
    EXPECT_EQ(manifest.size(), stats.passages);
    std::set<std::string> names;
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        EXPECT_EQ(manifest[i].id, static_cast<std::int64_t>(i));
        EXPECT_EQ(manifest[i].token_count, oracle::whitespace_tokens(manifest[i].text));
        names.insert(manifest[i].medicine);
    }
    EXPECT_EQ(names, (std::set<std::string>{"CLONAZEPAM", "DIPIRONA SÓDICA", "IBUPROFENO", "LOSARTANA POTÁSSICA",
                                            "PARACETAMOL"}));
    EXPECT_NE(out.str().find("bula_paracetamol.txt -> PARACETAMOL"), std::string::npos);
}

TEST(Index, RerunIsByteIdentical) {
    testsupport::TempDir dir;
    const auto cfg = testsupport::build_pipeline(dir);
    const auto first = testsupport::read_file(cfg.bundle_path);
    std::ostringstream sink;
    cmd_index(cfg.manifest_path, dir / "again.bragidx", cfg.embedder, sink);
    EXPECT_EQ(testsupport::read_file(dir / "again.bragidx"), first);
    const auto bundle = load_bundle(cfg.bundle_path);
    EXPECT_EQ(bundle.passages, read_manifest(cfg.manifest_path));
    EXPECT_EQ(bundle.meta.dim, 384u);
}

TEST(Index, DimAndEmptyManifest) {
    testsupport::TempDir dir;
    const auto cfg = testsupport::build_pipeline(dir);
    EmbedderSpec spec = cfg.embedder;
    spec.dim = 64;
    std::ostringstream sink;
    cmd_index(cfg.manifest_path, dir / "small.bragidx", spec, sink);
    EXPECT_EQ(load_bundle(dir / "small.bragidx").index.dim(), 64u);

    testsupport::write_file(dir / "empty.jsonl", "");
    try {
        cmd_index(dir / "empty.jsonl", dir / "x.bragidx", spec, sink);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
    }
}

TEST(Index, TimestampHonorsSourceDateEpoch) {
    testsupport::TempDir dir;
    testsupport::write_file(dir / "m.jsonl", "");
    setenv("SOURCE_DATE_EPOCH", "0", 1);
    EXPECT_EQ(bundle_timestamp(dir / "m.jsonl"), "1970-01-01T00:00:00Z");
    unsetenv("SOURCE_DATE_EPOCH");
    EXPECT_EQ(bundle_timestamp(dir / "m.jsonl").size(), 20u);
}

TEST(SessionTest, DimensionMismatch) {
    testsupport::TempDir dir;
    auto cfg = testsupport::build_pipeline(dir);
    cfg.embedder.dim = 32;
    try {
        (void)open_session(cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
    }
}

TEST(Query, OneShotPrintsAnswerAndSources) {
    testsupport::TempDir dir;
    const auto session = session_in(dir);
    std::istringstream in;
    std::ostringstream out, err;
    QueryOptions opts;
    opts.question = "Quais medicamentos causam sonolência como efeito colateral?";
    EXPECT_EQ(cmd_query(*session, opts, in, out, err), 1u);
    const auto text = out.str();
    EXPECT_NE(text.find("Clonazepam"), std::string::npos) << text;
    EXPECT_NE(text.find("Fontes:"), std::string::npos);
    EXPECT_NE(text.find("CLONAZEPAM | bula_clonazepam.txt"), std::string::npos) << text;
    EXPECT_NE(text.find("Latência:"), std::string::npos);
}

TEST(Query, ShowContextAndMissingQuestion) {
    testsupport::TempDir dir;
    const auto session = session_in(dir);
    std::istringstream in;
    std::ostringstream out, err;
    QueryOptions opts;
    opts.question = "dose de paracetamol para adultos";
    opts.show_context = true;
    cmd_query(*session, opts, in, out, err);
    EXPECT_NE(out.str().find("    "), std::string::npos);
    EXPECT_THROW((void)cmd_query(*session, QueryOptions{}, in, out, err), Error);
}

TEST(Query, ReplRunsUntilEofAndSurvivesErrors) {
    testsupport::TempDir dir;
    const auto session = session_in(dir);
    std::istringstream in("sonolência?\n\n   \ncrianças podem usar ibuprofeno?\n");
    std::ostringstream out, err;
    QueryOptions opts;
    opts.repl = true;
    EXPECT_EQ(cmd_query(*session, opts, in, out, err), 2u);
    EXPECT_NE(out.str().find("> "), std::string::npos);
}

TEST(Eval, MockRunWritesTenRowsWithFullConsistency) {
    testsupport::TempDir dir;
    const auto session = session_in(dir);
    EvalCommandOptions opts;
    opts.out_csv = dir / "res.csv";
    std::ostringstream out;
    const auto summary = cmd_eval(session.get(), opts, out);
    EXPECT_EQ(summary.rows, 10u);
    const auto rows = read_rows_csv(opts.out_csv);
    ASSERT_EQ(rows.size(), 10u);
    for (const auto& r : rows) {
        ASSERT_TRUE(r.consistency_pct.has_value()) << r.question;
        EXPECT_EQ(*r.consistency_pct, 100.0) << r.question;
        EXPECT_EQ(r.answer.rfind("ERRO", 0), std::string::npos);
    }
    EXPECT_NE(testsupport::read_file(opts.out_csv).find(",100.00,"), std::string::npos);
    EXPECT_NE(out.str().find("thresholds"), std::string::npos);
}

TEST(Eval, ImportLabels) {
    EvalCommandOptions opts;
    opts.import_labels = testsupport::source_dir() / "data/annex/annex_ii_gemini.csv";
    opts.json = true;
    std::ostringstream out;
    const auto s = cmd_eval(nullptr, opts, out);
    EXPECT_NEAR(*s.kappa_precision, 0.52, 0.005);
    EXPECT_EQ(out.str().front(), '{');
}

TEST(Eval, EmptyQuestionFile) {
    testsupport::TempDir dir;
    const auto session = session_in(dir);
    testsupport::write_file(dir / "q.txt", "# nada\n\n");
    EvalCommandOptions opts;
    opts.questions_file = dir / "q.txt";
    opts.out_csv = dir / "res.csv";
    std::ostringstream out;
    try {
        (void)cmd_eval(session.get(), opts, out);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
    }
}
