#include "bularag/answer.hpp"

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "bularag/error.hpp"
#include "bularag/text.hpp"

namespace bularag {

namespace {

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
    for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) {
        s.replace(pos, from.size(), to);
    }
    return s;
}

// Single pass, so placeholder-like text inside the question or passages is
// left alone.
std::string fill_template(std::string_view tpl, std::string_view rules, std::string_view context,
                          std::string_view question) {
    std::string out;
    out.reserve(tpl.size() + rules.size() + context.size() + question.size());
    for (std::size_t i = 0; i < tpl.size();) {
        if (tpl[i] == '{') {
            const auto rest = tpl.substr(i);
            if (rest.starts_with("{rules}")) {
                out += rules;
                i += 7;
                continue;
            }
            if (rest.starts_with("{context}")) {
                out += context;
                i += 9;
                continue;
            }
            if (rest.starts_with("{question}")) {
                out += question;
                i += 10;
                continue;
            }
        }
        out.push_back(tpl[i++]);
    }
    return out;
}

std::string render_context(const std::vector<ContextBlock>& blocks) {
    if (blocks.empty()) return std::string(kEmptyContext);
    std::string out;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto& b = blocks[i];
        if (i > 0) out += "\n\n";
        out += "[" + std::to_string(i + 1) + "] Medicamento: " + b.medicine + " | Arquivo: " + b.source +
               " | Seção: " + b.section_label.value_or("(não identificada)") + "\n";
        out += b.text;
    }
    return out;
}

std::string random_request_id() {
    thread_local std::mt19937_64 rng{std::random_device{}()};
    char buf[40];
    std::snprintf(buf, sizeof(buf), "req-%016llx%016llx", static_cast<unsigned long long>(rng()),
                  static_cast<unsigned long long>(rng()));
    return buf;
}

std::string env_or_empty(const std::string& name) {
    if (name.empty()) return {};
    const char* v = std::getenv(name.c_str());
    return v ? v : "";
}

std::string strip_trailing_slash(std::string s) {
    while (!s.empty() && s.back() == '/') s.pop_back();
    return s;
}

std::string python_strip(std::string_view s) {
    // Also drops Unicode whitespace at the ends.
    std::size_t begin = 0;
    std::size_t end = s.size();
    std::size_t pos = 0;
    bool leading = true;
    while (pos < s.size()) {
        const char32_t cp = text::next_code_point(s, pos);
        if (text::is_space(cp)) {
            if (leading) begin = pos;
        } else {
            leading = false;
            end = pos;
        }
    }
    if (leading) return {};
    return std::string(s.substr(begin, end - begin));
}

}  // namespace

std::string PromptConfig::default_template() {
    return "{rules}\n\nCONTEXTO:\n{context}\n\nPERGUNTA: {question}\n\nRESPOSTA:";
}

std::string PromptConfig::default_rules() {
    return "Você responde perguntas sobre bulas de medicamentos usando apenas os trechos de contexto abaixo.\n"
           "Regras:\n"
           "1. Use somente informações presentes nos trechos; não acrescente conhecimento externo.\n"
           "2. Em cada afirmação, identifique o medicamento, o arquivo de origem e a seção da bula "
           "indicados no cabeçalho do trecho.\n"
           "3. Não invente doses, indicações, contraindicações ou efeitos.\n"
           "4. Se os trechos não contiverem a resposta, responda exatamente: {not_found}";
}

PromptBundle build_prompt(std::string_view question, const std::vector<RetrievalHit>& hits, const IndexBundle& bundle,
                          const PromptConfig& config) {
    PromptBundle prompt;
    prompt.system_rules = replace_all(config.rules, "{not_found}", config.not_found);
    prompt.question = std::string(question);
    prompt.context_blocks.reserve(hits.size());
    for (const auto& hit : hits) {
        const auto& p = bundle.passage(hit.passage_id);
        prompt.context_blocks.push_back({p.medicine, hit.source, p.section_label, hit.text});
    }
    const auto context = render_context(prompt.context_blocks);
    prompt.rendered = fill_template(config.template_text, prompt.system_rules, context, question);
    prompt.user_message = "CONTEXTO:\n" + context + "\n\nPERGUNTA: " + prompt.question;
    return prompt;
}

std::string_view to_string(ProviderKind kind) {
    switch (kind) {
        case ProviderKind::GeminiStyle: return "gemini_style";
        case ProviderKind::OpenRouterStyle: return "openrouter_style";
        case ProviderKind::Mock: return "mock";
    }
    return "unknown";
}

ProviderKind provider_kind_from_string(std::string_view name) {
    if (name == "gemini_style" || name == "gemini") return ProviderKind::GeminiStyle;
    if (name == "openrouter_style" || name == "openrouter") return ProviderKind::OpenRouterStyle;
    if (name == "mock") return ProviderKind::Mock;
    throw Error(ErrorCode::InvalidConfig, "unknown provider kind '" + std::string(name) + "'");
}

void ProviderConfig::validate() const {
    if (!(timeout_s > 0.0)) throw Error(ErrorCode::InvalidConfig, "provider timeout must be > 0");
    if (max_retries < 0) throw Error(ErrorCode::InvalidConfig, "provider max_retries must be >= 0");
    if (max_concurrency < 1) throw Error(ErrorCode::InvalidConfig, "provider max_concurrency must be >= 1");
}

std::vector<MockRule> parse_mock_script(std::string_view json) {
    std::vector<MockRule> rules;
    try {
        const auto doc = nlohmann::json::parse(json);
        if (!doc.is_array()) throw Error(ErrorCode::InvalidConfig, "mock script must be a JSON array");
        for (const auto& entry : doc) {
            MockRule r;
            r.match = entry.value("match", "");
            r.response = entry.value("response", "");
            r.status = entry.value("status", 200);
            if (entry.contains("times")) r.times = entry.at("times").get<int>();
            rules.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("mock script: ") + e.what());
    }
    return rules;
}

std::vector<MockRule> load_mock_script(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open mock script '" + path.string() + "'");
    const std::string body{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_mock_script(body);
}

LlmProvider::LlmProvider(ProviderConfig config)
    : config_(std::move(config)),
      slots_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, config_.max_concurrency))) {
    config_.validate();
}

Answer LlmProvider::generate(const PromptBundle& prompt) {
    const http::RetryPolicy policy{config_.max_retries, config_.initial_backoff};
    const auto start = std::chrono::steady_clock::now();
    Reply reply;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(policy.delay(attempt));
        slots_.acquire();
        ++requests_;
        try {
            reply = send(prompt);
        } catch (...) {
            slots_.release();
            throw;
        }
        slots_.release();
        if (config_.verbose) {
            spdlog::info("raw {} response (status {}):\n{}", to_string(config_.kind), reply.response.status,
                         reply.response.body);
        }
        if (reply.response.status == 200) break;
        if (!http::is_transient(reply.response)) {
            throw Error(ErrorCode::ProviderError, "status " + std::to_string(reply.response.status) + ": " +
                                                      reply.response.body.substr(0, 200));
        }
        spdlog::warn("provider attempt {}/{} failed: status {} {}", attempt + 1, config_.max_retries + 1,
                     reply.response.status, reply.response.transport_error);
    }
    if (reply.response.status != 200) {
        throw Error(ErrorCode::ProviderError, "giving up after " + std::to_string(config_.max_retries + 1) +
                                                  " attempts (last status " + std::to_string(reply.response.status) +
                                                  " " + reply.response.transport_error + ")");
    }
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    Answer answer;
    answer.text = python_strip(reply.text);
    if (answer.text.empty()) throw Error(ErrorCode::EmptyCompletion, "provider returned no text");
    answer.provider = config_.kind;
    answer.latency_s = elapsed;
    answer.request_id = reply.request_id.empty() ? random_request_id() : reply.request_id;
    return answer;
}

GeminiProvider::GeminiProvider(ProviderConfig config) : LlmProvider(std::move(config)) {
    const auto base = strip_trailing_slash(config_.endpoint.empty() ? std::string(kDefaultEndpoint) : config_.endpoint);
    if (config_.model.empty()) throw Error(ErrorCode::InvalidConfig, "gemini_style provider needs a model");
    url_ = base + "/models/" + config_.model + ":generateContent";
    http::split_url(url_);
    key_ = env_or_empty(config_.api_key_env);
    if (key_.empty()) spdlog::warn("gemini_style provider: ${} is not set", config_.api_key_env);
}

std::string GeminiProvider::request_body(const PromptBundle& prompt) {
    return nlohmann::json{{"contents", {{{"role", "user"}, {"parts", {{{"text", prompt.rendered}}}}}}}}.dump();
}

LlmProvider::Reply GeminiProvider::send(const PromptBundle& prompt) {
    http::Headers headers;
    if (!key_.empty()) headers.emplace_back("x-goog-api-key", key_);
    Reply reply{http::post_json(url_, request_body(prompt), headers, config_.timeout_s), {}, {}};
    if (reply.response.status != 200) return reply;
    try {
        const auto body = nlohmann::json::parse(reply.response.body);
        if (body.contains("candidates") && !body["candidates"].empty()) {
            const auto& content = body["candidates"][0].value("content", nlohmann::json::object());
            for (const auto& part : content.value("parts", nlohmann::json::array())) {
                reply.text += part.value("text", "");
            }
        }
        reply.request_id = body.value("responseId", "");
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ProviderError, std::string("unparseable gemini response: ") + e.what());
    }
    return reply;
}

OpenRouterProvider::OpenRouterProvider(ProviderConfig config) : LlmProvider(std::move(config)) {
    const auto base = strip_trailing_slash(config_.endpoint.empty() ? std::string(kDefaultEndpoint) : config_.endpoint);
    if (config_.model.empty()) throw Error(ErrorCode::InvalidConfig, "openrouter_style provider needs a model");
    url_ = base + "/chat/completions";
    http::split_url(url_);
    key_ = env_or_empty(config_.api_key_env);
    if (key_.empty()) spdlog::warn("openrouter_style provider: ${} is not set", config_.api_key_env);
}

std::string OpenRouterProvider::request_body(const PromptBundle& prompt, const std::string& model) {
    return nlohmann::json{{"model", model},
                          {"messages",
                           {{{"role", "system"}, {"content", prompt.system_rules}},
                            {{"role", "user"}, {"content", prompt.user_message}}}}}
        .dump();
}

LlmProvider::Reply OpenRouterProvider::send(const PromptBundle& prompt) {
    http::Headers headers;
    if (!key_.empty()) headers.emplace_back("Authorization", "Bearer " + key_);
    Reply reply{http::post_json(url_, request_body(prompt, config_.model), headers, config_.timeout_s), {}, {}};
    if (reply.response.status != 200) return reply;
    try {
        const auto body = nlohmann::json::parse(reply.response.body);
        if (body.contains("choices") && !body["choices"].empty()) {
            const auto& message = body["choices"][0].value("message", nlohmann::json::object());
            if (message.contains("content") && message["content"].is_string()) {
                reply.text = message["content"].get<std::string>();
            }
        }
        if (body.contains("id") && body["id"].is_string()) reply.request_id = body["id"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ProviderError, std::string("unparseable chat response: ") + e.what());
    }
    return reply;
}

MockProvider::MockProvider(ProviderConfig config, std::vector<MockRule> rules, std::string not_found)
    : LlmProvider(std::move(config)),
      rules_(std::move(rules)),
      used_(rules_.size(), 0),
      not_found_(std::move(not_found)) {}

LlmProvider::Reply MockProvider::send(const PromptBundle& prompt) {
    Reply reply;
    reply.response.status = 200;
    if (prompt.context_blocks.empty()) {
        reply.text = not_found_;
        return reply;
    }
    std::lock_guard lock(mutex_);
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        const auto& rule = rules_[i];
        if (rule.times && used_[i] >= *rule.times) continue;
        if (!rule.match.empty() && prompt.question.find(rule.match) == std::string::npos) continue;
        ++used_[i];
        reply.response.status = rule.status;
        reply.response.body = rule.response;
        if (rule.status == 200) reply.text = rule.response;
        return reply;
    }
    reply.text = not_found_;
    return reply;
}

std::unique_ptr<LlmProvider> make_provider(const ProviderConfig& config, const PromptConfig& prompt) {
    switch (config.kind) {
        case ProviderKind::GeminiStyle: return std::make_unique<GeminiProvider>(config);
        case ProviderKind::OpenRouterStyle: return std::make_unique<OpenRouterProvider>(config);
        case ProviderKind::Mock: {
            auto rules = config.mock_script.empty() ? std::vector<MockRule>{} : load_mock_script(config.mock_script);
            return std::make_unique<MockProvider>(config, std::move(rules), prompt.not_found);
        }
    }
    throw Error(ErrorCode::InvalidConfig, "unknown provider kind");
}

Answer generate_answer(const PromptBundle& prompt, LlmProvider& provider) { return provider.generate(prompt); }

AskResult ask(std::string_view question, const IndexBundle& bundle, const Embedder& embedder,
              const Retriever& retriever, LlmProvider& provider, const PromptConfig& prompt) {
    AskResult result;
    result.hits = hybrid_search(question, bundle, embedder, retriever);
    const auto built = build_prompt(question, result.hits, bundle, prompt);
    result.answer = generate_answer(built, provider);
    return result;
}

}  // namespace bularag
