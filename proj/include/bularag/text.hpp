#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// UTF-8 helpers shared by ingestion, embedding and lexical retrieval. Only the
// Latin-1 supplement is given special treatment (case, accents), which covers
// Portuguese text.
namespace bularag::text {

/// Decodes one code point starting at `pos` and advances `pos`. Invalid bytes
/// decode as themselves (Latin-1 interpretation) so no input is ever lost.
char32_t next_code_point(std::string_view s, std::size_t& pos);

void append_utf8(std::string& out, char32_t cp);

[[nodiscard]] bool is_space(char32_t cp);
[[nodiscard]] bool is_letter(char32_t cp);
[[nodiscard]] bool is_upper(char32_t cp);
[[nodiscard]] bool is_digit(char32_t cp);
[[nodiscard]] char32_t to_lower(char32_t cp);
/// Lowercase and strip diacritics: "Ç" -> 'c', "ã" -> 'a'.
[[nodiscard]] char32_t fold(char32_t cp);

[[nodiscard]] std::string lowercase(std::string_view s);
[[nodiscard]] std::string fold_accents(std::string_view s);

/// Maximal runs of non-whitespace, as views into `s`.
[[nodiscard]] std::vector<std::string_view> split_whitespace(std::string_view s);

/// Lowercased alphanumeric words; every other code point separates words.
/// With `fold` set the words are also accent-folded.
[[nodiscard]] std::vector<std::string> words(std::string_view s, bool fold);

[[nodiscard]] std::string_view trim(std::string_view s);

[[nodiscard]] std::uint64_t fnv1a64(std::string_view s);

}  // namespace bularag::text
