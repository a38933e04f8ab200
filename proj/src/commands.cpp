#include "bularag/commands.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "bularag/error.hpp"
#include "bularag/text.hpp"

namespace bularag {

namespace {

std::string iso_utc(std::time_t t) {
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

void ensure_parent(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
}

}  // namespace

std::string passage_to_json_line(const Passage& p) {
    const nlohmann::json j{
        {"id", p.id},
        {"doc_id", p.doc_id},
        {"source", p.source},
        {"medicine", p.medicine},
        {"section_label", p.section_label ? nlohmann::json(*p.section_label) : nlohmann::json(nullptr)},
        {"text", p.text},
        {"token_count", p.token_count},
    };
    return j.dump();
}

Passage passage_from_json_line(std::string_view line) {
    try {
        const auto j = nlohmann::json::parse(line);
        Passage p;
        p.id = j.at("id").get<std::int64_t>();
        p.doc_id = j.at("doc_id").get<std::string>();
        p.source = j.at("source").get<std::string>();
        p.medicine = j.at("medicine").get<std::string>();
        if (const auto& s = j.at("section_label"); !s.is_null()) p.section_label = s.get<std::string>();
        p.text = j.at("text").get<std::string>();
        p.token_count = j.at("token_count").get<std::size_t>();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("bad manifest line: ") + e.what());
    }
}

void write_manifest(const std::vector<Passage>& passages, const std::filesystem::path& path) {
    ensure_parent(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::UnreadableFile, "cannot write '" + path.string() + "'");
    for (const auto& p : passages) out << passage_to_json_line(p) << '\n';
    if (!out) throw Error(ErrorCode::UnreadableFile, "write failed for '" + path.string() + "'");
}

std::vector<Passage> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open manifest '" + path.string() + "'");
    std::vector<Passage> passages;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            passages.push_back(passage_from_json_line(line));
        } catch (const Error& e) {
            throw Error(ErrorCode::InvalidArgument, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return passages;
}

IngestStats cmd_ingest(const std::filesystem::path& corpus_dir, const std::filesystem::path& manifest_out,
                       const IngestConfig& config, std::ostream& out) {
    const IngestRules rules(config);
    const auto corpus = ingest_corpus(corpus_dir, rules);
    write_manifest(corpus.passages, manifest_out);
    out << "documents: " << corpus.documents.size() << "\npassages: " << corpus.passages.size()
        << "\nmanifest: " << manifest_out.string() << '\n';
    for (const auto& doc : corpus.documents) out << "  " << doc.filename << " -> " << doc.medicine_name << '\n';
    return {corpus.documents.size(), corpus.passages.size()};
}

std::string bundle_timestamp(const std::filesystem::path& manifest) {
    if (const char* env = std::getenv("SOURCE_DATE_EPOCH"); env != nullptr && *env != '\0') {
        char* end = nullptr;
        const long long v = std::strtoll(env, &end, 10);
        if (end != env && *end == '\0' && v >= 0) return iso_utc(static_cast<std::time_t>(v));
        spdlog::warn("ignoring malformed SOURCE_DATE_EPOCH '{}'", env);
    }
    const auto ftime = std::filesystem::last_write_time(manifest);
    const auto sys = std::chrono::time_point_cast<std::chrono::seconds>(
        ftime - std::filesystem::file_time_type::clock::now() + std::chrono::system_clock::now());
    // The clock conversion above can jitter by a tick; round to whole seconds.
    return iso_utc(std::chrono::system_clock::to_time_t(sys));
}

void cmd_index(const std::filesystem::path& manifest, const std::filesystem::path& bundle_out,
               const EmbedderSpec& spec, std::ostream& out) {
    auto passages = read_manifest(manifest);
    if (passages.empty()) throw Error(ErrorCode::EmptyInput, "manifest '" + manifest.string() + "' has no passages");
    const auto embedder = make_embedder(spec);
    const auto bundle = make_bundle(std::move(passages), *embedder, bundle_timestamp(manifest));
    ensure_parent(bundle_out);
    save_bundle(bundle, bundle_out);
    out << "passages: " << bundle.passages.size() << "\ndim: " << bundle.index.dim()
        << "\nembedder: " << bundle.meta.embedder_fingerprint << "\nbundle: " << bundle_out.string() << '\n';
}

Session::Session(IndexBundle bundle, std::unique_ptr<Embedder> embedder, RetrieverConfig retriever,
                 std::unique_ptr<LlmProvider> provider, PromptConfig prompt)
    : bundle_(std::move(bundle)),
      embedder_(std::move(embedder)),
      retriever_(std::move(retriever)),
      provider_(std::move(provider)),
      prompt_(std::move(prompt)) {
    if (embedder_->dim() != bundle_.index.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "embedder produces dim " + std::to_string(embedder_->dim()) +
                                                      " but the bundle holds dim " +
                                                      std::to_string(bundle_.index.dim()));
    }
    if (embedder_->spec().fingerprint() != bundle_.meta.embedder_fingerprint) {
        spdlog::warn("embedder '{}' differs from the one that built the bundle ('{}')", embedder_->spec().fingerprint(),
                     bundle_.meta.embedder_fingerprint);
    }
}

AskResult Session::ask(std::string_view question) const {
    return bularag::ask(question, bundle_, *embedder_, retriever_, *provider_, prompt_);
}

std::unique_ptr<Session> open_session(const AppConfig& config) {
    auto bundle = load_bundle(config.bundle_path);
    config.provider.validate();
    return std::make_unique<Session>(std::move(bundle), make_embedder(config.embedder), config.retriever,
                                     make_provider(config.provider, config.prompt), config.prompt);
}

void print_answer(const AskResult& result, const IndexBundle& bundle, bool show_context, std::ostream& out) {
    out << result.answer.text << "\n\nFontes:\n";
    if (result.hits.empty()) out << "  (nenhuma)\n";
    std::size_t i = 1;
    for (const auto& hit : result.hits) {
        const auto& p = bundle.passage(hit.passage_id);
        out << "  [" << i++ << "] " << p.medicine << " | " << hit.source << " | " << p.section_label.value_or("-")
            << " (" << to_string(hit.origin) << ", "
            << (hit.origin == HitOrigin::Vector ? fixed4(hit.score) : fixed2(hit.score)) << ")\n";
        if (show_context) {
            std::string indented = "      ";
            for (const char c : hit.text) {
                indented += c;
                if (c == '\n') indented += "      ";
            }
            out << indented << '\n';
        }
    }
    out << "Latência: " << fixed2(result.answer.latency_s) << " s\n";
}

std::size_t cmd_query(const Session& session, const QueryOptions& options, std::istream& in, std::ostream& out,
                      std::ostream& err) {
    if (!options.repl) {
        if (!options.question || text::trim(*options.question).empty()) {
            throw Error(ErrorCode::InvalidArgument, "a question is required (or use --repl)");
        }
        print_answer(session.ask(*options.question), session.bundle(), options.show_context, out);
        return 1;
    }
    std::size_t answered = 0;
    std::string line;
    out << "> " << std::flush;
    while (std::getline(in, line)) {
        const auto q = text::trim(line);
        if (!q.empty()) {
            try {
                print_answer(session.ask(q), session.bundle(), options.show_context, out);
                ++answered;
            } catch (const std::exception& e) {
                err << "error: " << e.what() << '\n';
            }
        }
        out << "> " << std::flush;
    }
    out << '\n';
    return answered;
}

MetricsSummary cmd_eval(const Session* session, const EvalCommandOptions& options, std::ostream& out) {
    MetricsSummary summary;
    if (options.import_labels) {
        summary = summarize(read_rows_csv(*options.import_labels));
    } else {
        if (session == nullptr) throw Error(ErrorCode::InvalidArgument, "evaluation needs a loaded bundle");
        const auto questions = options.questions_file ? load_questions(*options.questions_file) : default_questions();
        if (questions.empty()) throw Error(ErrorCode::EmptyInput, "no questions to evaluate");
        const AskFn ask = [session](const std::string& q) { return session->ask(q).answer.text; };
        const auto rows = run_eval(questions, ask, session->embedder(), EvalOptions{options.parallel});
        ensure_parent(options.out_csv);
        write_rows_csv(rows, options.out_csv);
        summary = summarize(rows, !options.parallel);
        spdlog::info("wrote {} rows to {}", rows.size(), options.out_csv.string());
    }
    out << (options.json ? summary_to_json(summary) + "\n" : format_summary(summary));
    return summary;
}

}  // namespace bularag
