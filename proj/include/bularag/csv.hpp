#pragma once

#include <string>
#include <string_view>
#include <vector>

// RFC 4180 records: comma separated, fields quoted when they contain a
// comma, quote, CR or LF, quotes doubled inside quoted fields.
namespace bularag::csv {

using Record = std::vector<std::string>;

std::string escape_field(std::string_view field);
std::string format_record(const Record& record);  // with trailing "\n"

/// Accepts LF or CRLF line ends and a leading UTF-8 BOM. A trailing empty
/// line does not produce a record. Throws Error{MalformedCsv} on an
/// unterminated quoted field.
std::vector<Record> parse(std::string_view data);

}  // namespace bularag::csv
