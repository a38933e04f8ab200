// Command-line entry point: ingest, index, query, eval, serve.
#include <csignal>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "bularag/commands.hpp"
#include "bularag/config.hpp"
#include "bularag/error.hpp"
#include "bularag/service.hpp"

namespace {

bularag::ApiService* g_service = nullptr;

void on_signal(int) {
    if (g_service != nullptr) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bularag: question answering over package-insert corpora"};
    app.require_subcommand(1);

    std::optional<std::string> config_path;
    bool verbose = false;
    app.add_option("-c,--config", config_path, "JSON config file (default: $BULARAG_CONFIG)");
    app.add_flag("-v,--verbose", verbose, "Debug logging on stderr");

    std::optional<std::string> corpus_dir, manifest_out;
    auto* ingest = app.add_subcommand("ingest", "Extract and chunk a corpus into a passage manifest");
    ingest->add_option("--corpus", corpus_dir, "Directory with .pdf/.txt files");
    ingest->add_option("-o,--out", manifest_out, "Manifest path (JSON lines)");

    std::optional<std::string> manifest_in, bundle_out;
    std::optional<std::size_t> dim;
    auto* index = app.add_subcommand("index", "Embed a manifest and save the index bundle");
    index->add_option("--manifest", manifest_in, "Manifest path");
    index->add_option("-o,--out", bundle_out, "Bundle path");
    index->add_option("--dim", dim, "Embedding dimension")->check(CLI::PositiveNumber);

    std::optional<std::string> bundle_path;
    bularag::QueryOptions query_opts;
    std::optional<std::size_t> top_k;
    bool no_hybrid = false;
    std::string question;
    auto* query = app.add_subcommand("query", "Answer one question, or loop with --repl");
    query->add_option("question", question, "Question text");
    query->add_option("--bundle", bundle_path, "Bundle path");
    query->add_flag("--repl", query_opts.repl, "Read questions from stdin until EOF");
    query->add_flag("--show-context", query_opts.show_context, "Print retrieved passage texts");
    query->add_option("--top-k", top_k, "Vector hits")->check(CLI::PositiveNumber);
    query->add_flag("--no-hybrid", no_hybrid, "Vector channel only");

    bularag::EvalCommandOptions eval_opts;
    std::optional<std::string> questions_file, import_labels;
    std::string out_csv = "resultados_experimentos.csv";
    auto* eval = app.add_subcommand("eval", "Run the question set and summarize metrics");
    eval->add_option("--bundle", bundle_path, "Bundle path");
    eval->add_option("--questions", questions_file, "Question file (default: built-in set)");
    eval->add_option("-o,--out", out_csv, "Result CSV")->capture_default_str();
    eval->add_option("--import-labels", import_labels, "Summarize an annotated CSV instead of running");
    eval->add_flag("--json", eval_opts.json, "Print the summary as JSON");
    eval->add_flag("--parallel", eval_opts.parallel, "Run questions concurrently (no time metrics)");

    std::optional<std::string> host, web_root;
    std::optional<int> port;
    auto* serve = app.add_subcommand("serve", "Serve the JSON API");
    serve->add_option("--bundle", bundle_path, "Bundle path");
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Port")->check(CLI::Range(0, 65535));
    serve->add_option("--web-root", web_root, "Static files served at /");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help and --version exit 0; usage errors exit 2.
        return app.exit(e) == 0 ? 0 : 2;
    }

    auto logger = spdlog::stderr_color_mt("bularag");
    spdlog::set_default_logger(logger);
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);

    try {
        auto config = bularag::resolve_config(config_path ? std::optional<std::filesystem::path>(*config_path)
                                                           : std::nullopt);
        if (verbose) config.provider.verbose = true;
        if (bundle_path) config.bundle_path = *bundle_path;

        if (*ingest) {
            bularag::cmd_ingest(corpus_dir.value_or(config.corpus_dir.string()),
                                manifest_out.value_or(config.manifest_path.string()), config.ingest, std::cout);
        } else if (*index) {
            if (dim) config.embedder.dim = *dim;
            bularag::cmd_index(manifest_in.value_or(config.manifest_path.string()),
                               bundle_out.value_or(config.bundle_path.string()), config.embedder, std::cout);
        } else if (*query) {
            if (top_k) config.retriever.top_k = *top_k;
            if (no_hybrid) config.retriever.hybrid = false;
            if (!question.empty()) query_opts.question = question;
            const auto session = bularag::open_session(config);
            bularag::cmd_query(*session, query_opts, std::cin, std::cout, std::cerr);
        } else if (*eval) {
            eval_opts.out_csv = out_csv;
            if (import_labels) {
                eval_opts.import_labels = *import_labels;
                bularag::cmd_eval(nullptr, eval_opts, std::cout);
            } else {
                if (questions_file) {
                    eval_opts.questions_file = *questions_file;
                } else if (!config.questions_file.empty()) {
                    eval_opts.questions_file = config.questions_file;
                }
                const auto session = bularag::open_session(config);
                bularag::cmd_eval(session.get(), eval_opts, std::cout);
            }
        } else if (*serve) {
            if (host) config.service.host = *host;
            if (port) config.service.port = *port;
            if (web_root) config.service.web_root = *web_root;
            const auto session = bularag::open_session(config);
            bularag::ApiService service(*session, config.service);
            g_service = &service;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
            const bool ok = service.listen();
            g_service = nullptr;
            if (!ok) {
                std::cerr << "bularag: error: cannot listen on " << config.service.host << ':' << config.service.port
                          << '\n';
                return 1;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "bularag: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
