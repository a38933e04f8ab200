#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "bularag/answer.hpp"
#include "bularag/embed.hpp"
#include "bularag/ingest.hpp"
#include "bularag/retrieve.hpp"

namespace bularag {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::filesystem::path web_root;  // static files, optional
};

struct AppConfig {
    std::filesystem::path corpus_dir = "data/corpus";
    std::filesystem::path manifest_path = "build/passages.jsonl";
    std::filesystem::path bundle_path = "build/index.bragidx";
    IngestConfig ingest;
    EmbedderSpec embedder;
    RetrieverConfig retriever;
    ProviderConfig provider;
    PromptConfig prompt;
    std::filesystem::path questions_file;  // default questions when empty
    ServiceConfig service;
};

/// Parses a JSON config. Relative paths are resolved against `base_dir`.
/// Missing keys keep their defaults; unknown keys are rejected.
/// Throws Error{InvalidConfig}.
AppConfig parse_config(std::string_view json, const std::filesystem::path& base_dir);
AppConfig load_config(const std::filesystem::path& path);

/// Explicit path, else $BULARAG_CONFIG, else built-in defaults with the
/// retriever synonyms filled in.
AppConfig resolve_config(const std::optional<std::filesystem::path>& explicit_path);

}  // namespace bularag
