#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bularag/answer.hpp"
#include "bularag/config.hpp"
#include "bularag/eval.hpp"
#include "bularag/index.hpp"

namespace bularag {

// Passage manifest: one JSON object per line.
std::string passage_to_json_line(const Passage& passage);
Passage passage_from_json_line(std::string_view line);
void write_manifest(const std::vector<Passage>& passages, const std::filesystem::path& path);
/// Throws Error{UnreadableFile} or Error{InvalidArgument} (bad line).
std::vector<Passage> read_manifest(const std::filesystem::path& path);

struct IngestStats {
    std::size_t documents = 0;
    std::size_t passages = 0;
};

IngestStats cmd_ingest(const std::filesystem::path& corpus_dir, const std::filesystem::path& manifest_out,
                       const IngestConfig& config, std::ostream& out);

/// $SOURCE_DATE_EPOCH when set, else the manifest's modification time,
/// as an ISO-8601 UTC string. Keeps reruns on the same input byte-identical.
std::string bundle_timestamp(const std::filesystem::path& manifest);

/// Throws Error{EmptyInput} on an empty manifest.
void cmd_index(const std::filesystem::path& manifest, const std::filesystem::path& bundle_out,
               const EmbedderSpec& spec, std::ostream& out);

/// Everything needed to answer questions against a loaded bundle. Immutable
/// after construction apart from the provider's internal counters, so one
/// session serves concurrent callers.
class Session {
public:
    Session(IndexBundle bundle, std::unique_ptr<Embedder> embedder, RetrieverConfig retriever,
            std::unique_ptr<LlmProvider> provider, PromptConfig prompt);

    [[nodiscard]] AskResult ask(std::string_view question) const;

    [[nodiscard]] const IndexBundle& bundle() const noexcept { return bundle_; }
    [[nodiscard]] const Embedder& embedder() const noexcept { return *embedder_; }
    [[nodiscard]] LlmProvider& provider() const noexcept { return *provider_; }

private:
    IndexBundle bundle_;
    std::unique_ptr<Embedder> embedder_;
    Retriever retriever_;
    std::unique_ptr<LlmProvider> provider_;
    PromptConfig prompt_;
};

/// Loads config.bundle_path and wires embedder, retriever and provider.
/// Throws Error{DimensionMismatch} when the configured embedder does not
/// produce vectors of the bundle's dimension.
std::unique_ptr<Session> open_session(const AppConfig& config);

struct QueryOptions {
    std::optional<std::string> question;
    bool repl = false;
    bool show_context = false;
};

/// Prints the answer, its sources and latency.
void print_answer(const AskResult& result, const IndexBundle& bundle, bool show_context, std::ostream& out);

/// One-shot errors propagate. In REPL mode errors are reported on `err` and
/// the loop continues until EOF. Returns the number of questions answered.
std::size_t cmd_query(const Session& session, const QueryOptions& options, std::istream& in, std::ostream& out,
                      std::ostream& err);

struct EvalCommandOptions {
    std::optional<std::filesystem::path> questions_file;
    std::filesystem::path out_csv = "resultados_experimentos.csv";
    std::optional<std::filesystem::path> import_labels;
    bool json = false;
    bool parallel = false;
};

/// Without import_labels: runs every question through the session, writes
/// the CSV, prints the summary. With it: summarizes the annotated CSV only
/// (session may be null). Throws Error{EmptyInput} for a question file with
/// no questions.
MetricsSummary cmd_eval(const Session* session, const EvalCommandOptions& options, std::ostream& out);

}  // namespace bularag
