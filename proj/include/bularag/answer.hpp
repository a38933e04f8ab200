#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "bularag/http_util.hpp"
#include "bularag/index.hpp"
#include "bularag/retrieve.hpp"

namespace bularag {

inline constexpr std::string_view kDefaultNotFound = "Não foi possível encontrar a resposta no material fornecido.";

struct ContextBlock {
    std::string medicine;
    std::string source;
    std::optional<std::string> section_label;
    std::string text;
};

struct PromptBundle {
    std::string system_rules;
    std::vector<ContextBlock> context_blocks;
    std::string question;
    /// Template with {rules}, {context} and {question} filled in.
    std::string rendered;
    /// Context and question without the rules, for chat-style providers
    /// that carry the rules as a system message.
    std::string user_message;
};

struct PromptConfig {
    std::string template_text = default_template();
    /// {not_found} inside the rules is replaced by `not_found`.
    std::string rules = default_rules();
    std::string not_found = std::string(kDefaultNotFound);

    static std::string default_template();
    static std::string default_rules();
};

/// The literal used for the context section when no passage was retrieved.
inline constexpr std::string_view kEmptyContext = "(nenhum trecho recuperado)";

PromptBundle build_prompt(std::string_view question, const std::vector<RetrievalHit>& hits, const IndexBundle& bundle,
                          const PromptConfig& config = {});

enum class ProviderKind { GeminiStyle, OpenRouterStyle, Mock };

std::string_view to_string(ProviderKind kind);
ProviderKind provider_kind_from_string(std::string_view name);

struct ProviderConfig {
    ProviderKind kind = ProviderKind::Mock;
    std::string endpoint;  // base URL; style-specific default when empty
    std::string model;
    std::string api_key_env;  // name of the environment variable holding the key
    double timeout_s = 60.0;
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{500};
    std::size_t max_concurrency = 4;
    std::filesystem::path mock_script;
    bool verbose = false;

    /// Throws Error{InvalidConfig}.
    void validate() const;
};

struct Answer {
    std::string text;
    ProviderKind provider = ProviderKind::Mock;
    double latency_s = 0.0;
    std::string request_id;
};

/// One entry of a mock script. The first entry whose `match` occurs in the
/// question (empty matches everything) and still has uses left answers.
struct MockRule {
    std::string match;
    std::string response;
    int status = 200;
    std::optional<int> times;  // unlimited when absent
};

std::vector<MockRule> load_mock_script(const std::filesystem::path& path);
std::vector<MockRule> parse_mock_script(std::string_view json);

/// Shared request loop: concurrency cap, up to 1 + max_retries attempts with
/// exponential backoff on transient failures, trimming, latency.
class LlmProvider {
public:
    explicit LlmProvider(ProviderConfig config);
    virtual ~LlmProvider() = default;
    LlmProvider(const LlmProvider&) = delete;
    LlmProvider& operator=(const LlmProvider&) = delete;

    /// Throws Error{ProviderError} or Error{EmptyCompletion}.
    Answer generate(const PromptBundle& prompt);

    [[nodiscard]] const ProviderConfig& config() const noexcept { return config_; }
    /// Attempts made over the provider's lifetime.
    [[nodiscard]] std::size_t request_count() const noexcept { return requests_.load(); }

protected:
    struct Reply {
        http::Response response;
        std::string text;       // valid when status == 200
        std::string request_id;  // may be empty
    };

    virtual Reply send(const PromptBundle& prompt) = 0;

    ProviderConfig config_;

private:
    std::counting_semaphore<> slots_;
    std::atomic<std::size_t> requests_{0};
};

class GeminiProvider final : public LlmProvider {
public:
    explicit GeminiProvider(ProviderConfig config);

    static constexpr std::string_view kDefaultEndpoint = "https://generativelanguage.googleapis.com/v1beta";
    /// {"contents":[{"role":"user","parts":[{"text":...}]}]}
    static std::string request_body(const PromptBundle& prompt);

protected:
    Reply send(const PromptBundle& prompt) override;

private:
    std::string url_;
    std::string key_;
};

class OpenRouterProvider final : public LlmProvider {
public:
    explicit OpenRouterProvider(ProviderConfig config);

    static constexpr std::string_view kDefaultEndpoint = "https://openrouter.ai/api/v1";
    /// Chat completions: system message = rules, user message = context + question.
    static std::string request_body(const PromptBundle& prompt, const std::string& model);

protected:
    Reply send(const PromptBundle& prompt) override;

private:
    std::string url_;
    std::string key_;
};

/// Scripted provider for hermetic runs. A prompt without context blocks gets
/// the not-found sentence, as do questions no rule matches.
class MockProvider final : public LlmProvider {
public:
    MockProvider(ProviderConfig config, std::vector<MockRule> rules, std::string not_found);

protected:
    Reply send(const PromptBundle& prompt) override;

private:
    std::mutex mutex_;
    std::vector<MockRule> rules_;
    std::vector<int> used_;
    std::string not_found_;
};

std::unique_ptr<LlmProvider> make_provider(const ProviderConfig& config, const PromptConfig& prompt = {});

Answer generate_answer(const PromptBundle& prompt, LlmProvider& provider);

struct AskResult {
    Answer answer;
    std::vector<RetrievalHit> hits;
};

/// hybrid_search -> build_prompt -> generate_answer.
AskResult ask(std::string_view question, const IndexBundle& bundle, const Embedder& embedder,
              const Retriever& retriever, LlmProvider& provider, const PromptConfig& prompt = {});

}  // namespace bularag
