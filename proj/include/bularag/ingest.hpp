#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

namespace bularag {

struct Document {
    std::string id;  // FNV-1a of the source bytes, hex
    std::string filename;
    std::vector<std::string> page_texts;
    std::string full_text;
    std::string medicine_name;
};

struct Passage {
    std::int64_t id = 0;
    std::string doc_id;
    std::string source;
    std::string medicine;
    std::optional<std::string> section_label;
    std::string text;
    std::size_t token_count = 0;

    friend bool operator==(const Passage&, const Passage&) = default;
};

enum class DocumentKind { Pdf, Text };

struct IngestConfig {
    std::size_t max_tokens = 300;
    /// Regexes (ECMAScript, case-insensitive) searched in a trimmed line.
    std::vector<std::string> heading_patterns = default_heading_patterns();
    /// Removed from a candidate name line before the name checks.
    std::string dosage_strip_pattern = R"(\s*\d+([.,]\d+)?\s*(mcg|mg|ml|g|ui|%)([^a-z].*)?$)";
    bool heading_requires_uppercase = true;
    std::size_t name_scan_lines = 40;
    double name_uppercase_ratio = 0.7;
    std::size_t name_max_tokens = 6;

    static std::vector<std::string> default_heading_patterns();
};

/// Compiled form of IngestConfig. Construction validates every pattern and
/// throws Error{InvalidPattern} on the first bad one.
class IngestRules {
public:
    explicit IngestRules(IngestConfig config = {});

    [[nodiscard]] const IngestConfig& config() const noexcept { return config_; }
    [[nodiscard]] bool is_heading(std::string_view line) const;
    [[nodiscard]] std::string strip_dosage(std::string_view line) const;
    [[nodiscard]] bool mostly_uppercase(std::string_view line, double ratio) const;

private:
    IngestConfig config_;
    std::vector<std::regex> headings_;
    std::regex dosage_;
};

const IngestRules& default_ingest_rules();

/// Number of maximal non-whitespace runs.
std::size_t count_tokens(std::string_view text);

/// First line among the leading non-blank lines that looks like a product
/// name (mostly uppercase, short, dosage suffix removed). Falls back to the
/// filename stem, so the result is never empty for a non-empty filename.
std::string extract_medicine_name(std::string_view text, std::string_view filename,
                                  const IngestRules& rules = default_ingest_rules());

/// Assembles a Document from already-extracted page texts.
Document make_document(std::vector<std::string> page_texts, std::string filename,
                       std::string_view source_bytes, const IngestRules& rules = default_ingest_rules());

Document extract_document(std::istream& input, DocumentKind kind, std::string filename,
                          const IngestRules& rules = default_ingest_rules());
Document extract_document(const std::filesystem::path& path, DocumentKind kind,
                          const IngestRules& rules = default_ingest_rules());

/// Greedy split into passages of at most max_tokens whitespace tokens,
/// breaking between blank-line paragraphs when the next paragraph would not
/// fit. Ids start at first_id.
std::vector<Passage> chunk_passages(const Document& doc, const IngestRules& rules,
                                    std::int64_t first_id = 0);
std::vector<Passage> chunk_passages(const Document& doc, std::size_t max_tokens = 300,
                                    std::int64_t first_id = 0);

struct Corpus {
    std::vector<Document> documents;
    std::vector<Passage> passages;
};

/// Reads every .pdf and .txt file in `dir` (sorted by filename), extracting
/// documents concurrently and numbering passages in that order. Documents
/// with no extractable text are skipped with a warning.
Corpus ingest_corpus(const std::filesystem::path& dir, const IngestRules& rules = default_ingest_rules());

std::optional<DocumentKind> kind_from_extension(const std::filesystem::path& path);

}  // namespace bularag
