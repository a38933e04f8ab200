#include "bularag/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <iterator>
#include <sstream>

#include <spdlog/spdlog.h>

#include "bularag/error.hpp"
#include "bularag/pdf.hpp"
#include "bularag/text.hpp"

namespace bularag {

namespace {

std::regex compile(const std::string& pattern) {
    try {
        return std::regex(pattern, std::regex::ECMAScript | std::regex::icase);
    } catch (const std::regex_error& e) {
        throw Error(ErrorCode::InvalidPattern, "'" + pattern + "': " + e.what());
    }
}

std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xF];
    return out;
}

std::string join_tokens(std::string_view s) {
    std::string out;
    for (const auto tok : text::split_whitespace(s)) {
        if (!out.empty()) out.push_back(' ');
        out.append(tok);
    }
    return out;
}

struct Token {
    std::size_t begin;
    std::size_t end;
};

// Token spans plus, for each token, whether a blank line precedes it.
void scan_tokens(std::string_view s, std::vector<Token>& tokens, std::vector<bool>& starts_paragraph) {
    std::size_t pos = 0;
    std::size_t start = std::string_view::npos;
    int newlines = 0;
    while (pos < s.size()) {
        const std::size_t at = pos;
        const char32_t cp = text::next_code_point(s, pos);
        if (text::is_space(cp)) {
            if (start != std::string_view::npos) {
                tokens.push_back({start, at});
                start = std::string_view::npos;
                newlines = 0;
            }
            if (cp == U'\n') ++newlines;
        } else if (start == std::string_view::npos) {
            start = at;
            starts_paragraph.push_back(tokens.empty() || newlines >= 2);
        }
    }
    if (start != std::string_view::npos) tokens.push_back({start, s.size()});
}

}  // namespace

std::vector<std::string> IngestConfig::default_heading_patterns() {
    // Alternations instead of bracket classes: std::regex works on bytes and
    // accented letters are multi-byte.
    return {
        R"(^(\d+[.)]?\s*)?(PARA QUE ESTE MEDICAMENTO|INDICA(Ç|C)(Õ|O)ES))",
        R"(^(\d+[.)]?\s*)?CONTRA-?INDICA(Ç|C)(Õ|O)ES)",
        R"(^(\d+[.)]?\s*)?(POSOLOGIA|MODO DE USAR|COMO DEVO USAR))",
        R"(^(\d+[.)]?\s*)?(ADVERT(Ê|E)NCIAS|PRECAU(Ç|C)(Õ|O)ES|O QUE DEVO SABER))",
        R"(^(\d+[.)]?\s*)?(REA(Ç|C)(Õ|O)ES ADVERSAS|QUAIS OS MALES))",
        R"(^(\d+[.)]?\s*)?INTERA(Ç|C)(Õ|O)ES)",
        R"(^(\d+[.)]?\s*)?(COMPOSI(Ç|C)(Ã|A)O|APRESENTA(Ç|C)(Õ|O)ES))",
        R"(^(\d+[.)]?\s*)?(SUPERDOSE|O QUE FAZER SE ALGU(É|E)M USAR))",
        R"(^(\d+[.)]?\s*)?(CARACTER(Í|I)STICAS FARMACOL(Ó|O)GICAS|RESULTADOS DE EFIC(Á|A)CIA))",
        R"(^(\d+[.)]?\s*)?(ARMAZENAGEM|CUIDADOS DE ARMAZENAMENTO|ONDE, COMO E POR QUANTO TEMPO))",
    };
}

IngestRules::IngestRules(IngestConfig config) : config_(std::move(config)) {
    if (config_.max_tokens < 1) throw Error(ErrorCode::InvalidArgument, "max_tokens must be >= 1");
    headings_.reserve(config_.heading_patterns.size());
    for (const auto& p : config_.heading_patterns) headings_.push_back(compile(p));
    dosage_ = compile(config_.dosage_strip_pattern);
}

bool IngestRules::mostly_uppercase(std::string_view line, double ratio) const {
    std::size_t letters = 0;
    std::size_t upper = 0;
    for (std::size_t pos = 0; pos < line.size();) {
        const char32_t cp = text::next_code_point(line, pos);
        if (text::is_letter(cp)) {
            ++letters;
            if (text::is_upper(cp)) ++upper;
        }
    }
    return letters > 0 && static_cast<double>(upper) >= ratio * static_cast<double>(letters);
}

bool IngestRules::is_heading(std::string_view line) const {
    const std::string trimmed(text::trim(line));
    if (trimmed.empty()) return false;
    if (config_.heading_requires_uppercase && !mostly_uppercase(trimmed, config_.name_uppercase_ratio)) {
        return false;
    }
    return std::any_of(headings_.begin(), headings_.end(),
                       [&](const std::regex& re) { return std::regex_search(trimmed, re); });
}

std::string IngestRules::strip_dosage(std::string_view line) const {
    const std::string s(line);
    return std::regex_replace(s, dosage_, "", std::regex_constants::format_first_only);
}

const IngestRules& default_ingest_rules() {
    static const IngestRules rules{};
    return rules;
}

std::size_t count_tokens(std::string_view text) { return text::split_whitespace(text).size(); }

std::string extract_medicine_name(std::string_view body, std::string_view filename, const IngestRules& rules) {
    const auto& cfg = rules.config();
    std::size_t scanned = 0;
    std::size_t pos = 0;
    while (pos <= body.size() && scanned < cfg.name_scan_lines) {
        auto nl = body.find('\n', pos);
        if (nl == std::string_view::npos) nl = body.size();
        const auto line = text::trim(body.substr(pos, nl - pos));
        pos = nl + 1;
        if (line.empty()) continue;
        ++scanned;
        if (rules.is_heading(line)) continue;
        const std::string candidate = join_tokens(rules.strip_dosage(line));
        const auto n = count_tokens(candidate);
        if (n < 1 || n > cfg.name_max_tokens) continue;
        if (rules.mostly_uppercase(candidate, cfg.name_uppercase_ratio)) return candidate;
    }
    auto stem = std::filesystem::path(std::string(filename)).stem().string();
    return stem.empty() ? std::string(filename) : stem;
}

Document make_document(std::vector<std::string> page_texts, std::string filename, std::string_view source_bytes,
                       const IngestRules& rules) {
    Document doc;
    doc.id = hex64(text::fnv1a64(source_bytes));
    doc.filename = std::move(filename);
    for (const auto& page : page_texts) {
        if (page.empty()) continue;
        if (!doc.full_text.empty()) doc.full_text.push_back('\n');
        doc.full_text += page;
    }
    doc.page_texts = std::move(page_texts);
    if (count_tokens(doc.full_text) == 0) {
        throw Error(ErrorCode::EmptyDocument, "no extractable text in '" + doc.filename + "'");
    }
    doc.medicine_name = extract_medicine_name(doc.full_text, doc.filename, rules);
    return doc;
}

Document extract_document(std::istream& input, DocumentKind kind, std::string filename, const IngestRules& rules) {
    std::string bytes{std::istreambuf_iterator<char>(input), std::istreambuf_iterator<char>()};
    if (input.bad()) throw Error(ErrorCode::UnreadableFile, "read failure on '" + filename + "'");
    std::vector<std::string> pages;
    if (kind == DocumentKind::Pdf) {
        pages = extract_pdf_pages(bytes);
    } else {
        // Normalise CRLF so paragraph detection sees blank lines.
        std::string page;
        page.reserve(bytes.size());
        for (std::size_t i = 0; i < bytes.size(); ++i) {
            if (bytes[i] == '\r' && i + 1 < bytes.size() && bytes[i + 1] == '\n') continue;
            page.push_back(bytes[i]);
        }
        if (page.size() >= 3 && page.compare(0, 3, "\xEF\xBB\xBF") == 0) page.erase(0, 3);
        pages.push_back(std::move(page));
    }
    return make_document(std::move(pages), std::move(filename), bytes, rules);
}

Document extract_document(const std::filesystem::path& path, DocumentKind kind, const IngestRules& rules) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open '" + path.string() + "'");
    return extract_document(in, kind, path.filename().string(), rules);
}

std::vector<Passage> chunk_passages(const Document& doc, const IngestRules& rules, std::int64_t first_id) {
    const std::size_t cap = rules.config().max_tokens;
    const std::string_view full = doc.full_text;

    std::vector<Token> tokens;
    std::vector<bool> para_start;
    scan_tokens(full, tokens, para_start);
    if (tokens.empty()) return {};

    // Paragraphs as token ranges.
    std::vector<std::pair<std::size_t, std::size_t>> paragraphs;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (para_start[i] || paragraphs.empty()) paragraphs.emplace_back(i, i);
        paragraphs.back().second = i + 1;
    }

    std::vector<std::pair<std::size_t, std::size_t>> chunks;
    std::size_t chunk_begin = 0;
    std::size_t chunk_len = 0;
    auto flush = [&] {
        if (chunk_len > 0) chunks.emplace_back(chunk_begin, chunk_begin + chunk_len);
        chunk_len = 0;
    };
    for (const auto& [p_begin, p_end] : paragraphs) {
        const std::size_t len = p_end - p_begin;
        if (chunk_len + len <= cap) {
            if (chunk_len == 0) chunk_begin = p_begin;
            chunk_len += len;
            continue;
        }
        if (len <= cap) {
            flush();
            chunk_begin = p_begin;
            chunk_len = len;
            continue;
        }
        // Oversized paragraph: top up the open chunk, then cut fixed-size pieces.
        std::size_t next = p_begin;
        if (chunk_len == 0) chunk_begin = p_begin;
        while (next < p_end) {
            const std::size_t take = std::min(cap - chunk_len, p_end - next);
            chunk_len += take;
            next += take;
            if (chunk_len == cap) {
                flush();
                chunk_begin = next;
            }
        }
    }
    flush();

    // Start offsets of heading lines, in order.
    std::vector<std::pair<std::size_t, std::string>> headings;
    for (std::size_t pos = 0; pos < full.size();) {
        auto nl = full.find('\n', pos);
        if (nl == std::string_view::npos) nl = full.size();
        const auto line = full.substr(pos, nl - pos);
        if (rules.is_heading(line)) {
            const auto trimmed = text::trim(line);
            headings.emplace_back(static_cast<std::size_t>(trimmed.data() - full.data()), join_tokens(trimmed));
        }
        pos = nl + 1;
    }

    std::vector<Passage> passages;
    passages.reserve(chunks.size());
    auto heading = headings.begin();
    std::optional<std::string> label;
    for (const auto& [b, e] : chunks) {
        const std::size_t start = tokens[b].begin;
        while (heading != headings.end() && heading->first <= start) {
            label = heading->second;
            ++heading;
        }
        Passage p;
        p.id = first_id + static_cast<std::int64_t>(passages.size());
        p.doc_id = doc.id;
        p.source = doc.filename;
        p.medicine = doc.medicine_name;
        p.section_label = label;
        p.text = std::string(full.substr(start, tokens[e - 1].end - start));
        p.token_count = e - b;
        passages.push_back(std::move(p));
    }
    return passages;
}

std::vector<Passage> chunk_passages(const Document& doc, std::size_t max_tokens, std::int64_t first_id) {
    IngestConfig cfg;
    cfg.max_tokens = max_tokens;
    return chunk_passages(doc, IngestRules(std::move(cfg)), first_id);
}

std::optional<DocumentKind> kind_from_extension(const std::filesystem::path& path) {
    const auto ext = text::lowercase(path.extension().string());
    if (ext == ".pdf") return DocumentKind::Pdf;
    if (ext == ".txt") return DocumentKind::Text;
    return std::nullopt;
}

Corpus ingest_corpus(const std::filesystem::path& dir, const IngestRules& rules) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) {
        throw Error(ErrorCode::UnreadableFile, "not a readable directory: '" + dir.string() + "'");
    }
    std::vector<std::filesystem::path> files;
    for (std::filesystem::directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec)) {
        if (it->is_regular_file() && kind_from_extension(it->path())) files.push_back(it->path());
    }
    if (ec) throw Error(ErrorCode::UnreadableFile, "cannot list '" + dir.string() + "': " + ec.message());
    std::sort(files.begin(), files.end(),
              [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });

    std::vector<std::future<std::optional<Document>>> pending;
    pending.reserve(files.size());
    for (const auto& file : files) {
        pending.push_back(std::async(std::launch::async, [&rules, file]() -> std::optional<Document> {
            try {
                return extract_document(file, *kind_from_extension(file), rules);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::EmptyDocument) throw;
                spdlog::warn("skipping {}: {}", file.filename().string(), e.what());
                return std::nullopt;
            }
        }));
    }

    Corpus corpus;
    for (auto& f : pending) {
        if (auto doc = f.get()) corpus.documents.push_back(std::move(*doc));
    }
    for (const auto& doc : corpus.documents) {
        auto chunked = chunk_passages(doc, rules, static_cast<std::int64_t>(corpus.passages.size()));
        std::move(chunked.begin(), chunked.end(), std::back_inserter(corpus.passages));
    }
    return corpus;
}

}  // namespace bularag
