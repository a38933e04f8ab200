#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace bularag {

/// Minimal text-layer reader for PDF files: walks the page tree (including
/// object streams), inflates FlateDecode content streams and collects text
/// shown by Tj/TJ/'/" operators. Simple (single-byte) font encodings are
/// read as WinAnsi. There is no OCR and no layout analysis; a page with no
/// text operators yields an empty string.
///
/// Throws Error{UnreadableFile} when the bytes are not a PDF.
std::vector<std::string> extract_pdf_pages(std::string_view bytes);

}  // namespace bularag
