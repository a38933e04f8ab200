#include "bularag/config.hpp"

#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bularag/error.hpp"
#include "bularag/text.hpp"

namespace bularag {

namespace {

using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); }

void check_keys(const ordered_json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) fail(std::string(where) + ": expected an object");
    const std::set<std::string_view> known(allowed);
    for (const auto& [key, value] : obj.items()) {
        if (!known.count(key)) fail(std::string(where) + ": unknown key '" + key + "'");
    }
}

template <typename T>
void read(const ordered_json& obj, const char* key, T& out, std::string_view where) {
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
        out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(std::string(where) + "." + key + ": wrong type");
    }
}

void read_path(const ordered_json& obj, const char* key, std::filesystem::path& out, const std::filesystem::path& base,
               std::string_view where) {
    std::string s;
    if (!obj.contains(key)) return;
    read(obj, key, s, where);
    out = s.empty() ? std::filesystem::path{} : (std::filesystem::path(s).is_absolute() ? std::filesystem::path(s) : base / s);
}

void read_ms(const ordered_json& obj, const char* key, std::chrono::milliseconds& out, std::string_view where) {
    long long ms = out.count();
    read(obj, key, ms, where);
    if (ms < 0) fail(std::string(where) + "." + key + ": must be >= 0");
    out = std::chrono::milliseconds(ms);
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot read '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> read_word_list(const std::filesystem::path& path) {
    std::vector<std::string> words;
    std::istringstream in(slurp(path));
    std::string line;
    while (std::getline(in, line)) {
        const auto t = text::trim(line);
        if (t.empty() || t.front() == '#') continue;
        for (const auto& w : text::split_whitespace(t)) words.emplace_back(w);
    }
    return words;
}

void parse_ingest(const ordered_json& j, IngestConfig& c) {
    constexpr std::string_view w = "ingest";
    check_keys(j, w,
               {"max_tokens", "heading_patterns", "dosage_strip_pattern", "heading_requires_uppercase",
                "name_scan_lines", "name_uppercase_ratio", "name_max_tokens"});
    read(j, "max_tokens", c.max_tokens, w);
    read(j, "heading_patterns", c.heading_patterns, w);
    read(j, "dosage_strip_pattern", c.dosage_strip_pattern, w);
    read(j, "heading_requires_uppercase", c.heading_requires_uppercase, w);
    read(j, "name_scan_lines", c.name_scan_lines, w);
    read(j, "name_uppercase_ratio", c.name_uppercase_ratio, w);
    read(j, "name_max_tokens", c.name_max_tokens, w);
    if (c.max_tokens == 0) fail("ingest.max_tokens must be >= 1");
}

void parse_embedder(const ordered_json& j, EmbedderSpec& e) {
    constexpr std::string_view w = "embedder";
    check_keys(j, w,
               {"kind", "dim", "model_name", "endpoint", "token_env", "max_concurrency", "batch_size", "max_attempts",
                "initial_backoff_ms", "timeout_s"});
    std::string kind = e.kind == EmbedderKind::Remote ? "remote" : "deterministic";
    read(j, "kind", kind, w);
    if (kind == "deterministic") {
        e.kind = EmbedderKind::Deterministic;
    } else if (kind == "remote") {
        e.kind = EmbedderKind::Remote;
    } else {
        fail("embedder.kind must be 'deterministic' or 'remote', got '" + kind + "'");
    }
    read(j, "dim", e.dim, w);
    read(j, "model_name", e.model_name, w);
    read(j, "endpoint", e.endpoint, w);
    read(j, "token_env", e.token_env, w);
    read(j, "max_concurrency", e.max_concurrency, w);
    read(j, "batch_size", e.batch_size, w);
    read(j, "max_attempts", e.max_attempts, w);
    read_ms(j, "initial_backoff_ms", e.initial_backoff, w);
    read(j, "timeout_s", e.timeout_s, w);
    if (e.dim == 0) fail("embedder.dim must be >= 1");
    if (e.batch_size == 0 || e.max_concurrency == 0 || e.max_attempts < 1) {
        fail("embedder.batch_size, max_concurrency and max_attempts must be >= 1");
    }
}

void parse_retriever(const ordered_json& j, RetrieverConfig& r, const std::filesystem::path& base) {
    constexpr std::string_view w = "retriever";
    check_keys(j, w,
               {"top_k", "threshold", "hybrid", "max_context", "synonyms", "stopwords", "stopwords_file",
                "regex_patterns"});
    read(j, "top_k", r.top_k, w);
    if (const auto it = j.find("threshold"); it != j.end()) {
        if (it->is_null()) {
            r.threshold.reset();
        } else if (it->is_number()) {
            r.threshold = it->get<double>();
        } else {
            fail("retriever.threshold: expected a number or null");
        }
    }
    read(j, "hybrid", r.hybrid, w);
    read(j, "max_context", r.max_context, w);
    if (r.top_k < 1 || r.top_k > r.max_context) fail("retriever.top_k must be in [1, max_context]");

    if (const auto it = j.find("synonyms"); it != j.end()) {
        if (!it->is_object()) fail("retriever.synonyms: expected an object of term -> [expansions]");
        r.expansion.synonym_map.clear();
        for (const auto& [term, expansions] : it->items()) {
            SynonymEntry entry{term, {}};
            read(*it, term.c_str(), entry.expansions, "retriever.synonyms");
            r.expansion.synonym_map.push_back(std::move(entry));
        }
    }
    if (j.contains("stopwords") && j.contains("stopwords_file")) fail("retriever: give stopwords or stopwords_file, not both");
    read(j, "stopwords", r.stopwords, w);
    std::filesystem::path stop_file;
    read_path(j, "stopwords_file", stop_file, base, w);
    if (!stop_file.empty()) r.stopwords = read_word_list(stop_file);

    if (const auto it = j.find("regex_patterns"); it != j.end()) {
        if (!it->is_array()) fail("retriever.regex_patterns: expected an array");
        r.regex_patterns.clear();
        for (const auto& p : *it) {
            check_keys(p, "retriever.regex_patterns[]", {"name", "pattern", "triggers"});
            RegexPatternSpec spec;
            read(p, "name", spec.name, "regex_patterns");
            read(p, "pattern", spec.pattern, "regex_patterns");
            read(p, "triggers", spec.triggers, "regex_patterns");
            if (spec.pattern.empty()) fail("retriever.regex_patterns: empty pattern");
            r.regex_patterns.push_back(std::move(spec));
        }
    }
}

void parse_provider(const ordered_json& j, ProviderConfig& p, const std::filesystem::path& base) {
    constexpr std::string_view w = "provider";
    check_keys(j, w,
               {"kind", "endpoint", "model", "api_key_env", "timeout_s", "max_retries", "initial_backoff_ms",
                "max_concurrency", "mock_script", "verbose"});
    if (j.contains("kind")) {
        std::string kind;
        read(j, "kind", kind, w);
        try {
            p.kind = provider_kind_from_string(kind);
        } catch (const Error& e) {
            fail(std::string("provider.kind: ") + e.what());
        }
    }
    read(j, "endpoint", p.endpoint, w);
    read(j, "model", p.model, w);
    read(j, "api_key_env", p.api_key_env, w);
    read(j, "timeout_s", p.timeout_s, w);
    read(j, "max_retries", p.max_retries, w);
    read_ms(j, "initial_backoff_ms", p.initial_backoff, w);
    read(j, "max_concurrency", p.max_concurrency, w);
    read_path(j, "mock_script", p.mock_script, base, w);
    read(j, "verbose", p.verbose, w);
}

void parse_prompt(const ordered_json& j, PromptConfig& p, const std::filesystem::path& base) {
    constexpr std::string_view w = "prompt";
    check_keys(j, w, {"template_file", "rules", "not_found"});
    std::filesystem::path tmpl;
    read_path(j, "template_file", tmpl, base, w);
    if (!tmpl.empty()) p.template_text = slurp(tmpl);
    read(j, "rules", p.rules, w);
    read(j, "not_found", p.not_found, w);
    if (p.not_found.empty()) fail("prompt.not_found must not be empty");
}

}  // namespace

AppConfig parse_config(std::string_view json, const std::filesystem::path& base_dir) {
    ordered_json j;
    try {
        j = ordered_json::parse(json);
    } catch (const nlohmann::json::parse_error& e) {
        fail(std::string("invalid JSON: ") + e.what());
    }
    check_keys(j, "config",
               {"corpus_dir", "manifest_path", "bundle_path", "ingest", "embedder", "retriever", "provider", "prompt",
                "eval", "service"});
    AppConfig c;
    c.corpus_dir = base_dir / c.corpus_dir;
    c.manifest_path = base_dir / c.manifest_path;
    c.bundle_path = base_dir / c.bundle_path;
    read_path(j, "corpus_dir", c.corpus_dir, base_dir, "config");
    read_path(j, "manifest_path", c.manifest_path, base_dir, "config");
    read_path(j, "bundle_path", c.bundle_path, base_dir, "config");
    if (j.contains("ingest")) parse_ingest(j["ingest"], c.ingest);
    if (j.contains("embedder")) parse_embedder(j["embedder"], c.embedder);
    if (j.contains("retriever")) parse_retriever(j["retriever"], c.retriever, base_dir);
    if (j.contains("provider")) parse_provider(j["provider"], c.provider, base_dir);
    if (j.contains("prompt")) parse_prompt(j["prompt"], c.prompt, base_dir);
    if (j.contains("eval")) {
        check_keys(j["eval"], "eval", {"questions_file"});
        read_path(j["eval"], "questions_file", c.questions_file, base_dir, "eval");
    }
    if (j.contains("service")) {
        const auto& s = j["service"];
        check_keys(s, "service", {"host", "port", "web_root"});
        read(s, "host", c.service.host, "service");
        read(s, "port", c.service.port, "service");
        read_path(s, "web_root", c.service.web_root, base_dir, "service");
        if (c.service.port < 0 || c.service.port > 65535) fail("service.port out of range");
    }
    return c;
}

AppConfig load_config(const std::filesystem::path& path) {
    const auto base = std::filesystem::absolute(path).parent_path();
    return parse_config(slurp(path), base);
}

AppConfig resolve_config(const std::optional<std::filesystem::path>& explicit_path) {
    if (explicit_path) return load_config(*explicit_path);
    if (const char* env = std::getenv("BULARAG_CONFIG"); env != nullptr && *env != '\0') return load_config(env);
    AppConfig c;
    c.retriever.expansion = RetrieverConfig::default_expansion();
    return c;
}

}  // namespace bularag
