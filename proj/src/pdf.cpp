#include "bularag/pdf.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <optional>
#include <set>

#include <spdlog/spdlog.h>
#include <zlib.h>

#include "bularag/error.hpp"
#include "bularag/text.hpp"

namespace bularag {

namespace {

struct PdfObject {
    std::string dict;  // everything before `stream`, or the whole body
    std::optional<std::string> stream;
};

using ObjectTable = std::map<int, PdfObject>;

bool is_pdf_space(char c) { return c == ' ' || c == '\n' || c == '\r' || c == '\t' || c == '\f' || c == '\0'; }
bool is_delim(char c) {
    return c == '(' || c == ')' || c == '<' || c == '>' || c == '[' || c == ']' || c == '{' || c == '}' ||
           c == '/' || c == '%';
}

std::optional<std::string> inflate(std::string_view data) {
    z_stream zs{};
    if (inflateInit(&zs) != Z_OK) return std::nullopt;
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
    zs.avail_in = static_cast<uInt>(data.size());
    std::string out;
    char buf[16384];
    int rc = Z_OK;
    while (rc == Z_OK) {
        zs.next_out = reinterpret_cast<Bytef*>(buf);
        zs.avail_out = sizeof(buf);
        rc = ::inflate(&zs, Z_NO_FLUSH);
        out.append(buf, sizeof(buf) - zs.avail_out);
        if (rc == Z_BUF_ERROR && zs.avail_in == 0) break;
    }
    inflateEnd(&zs);
    if (rc != Z_STREAM_END && out.empty()) return std::nullopt;
    return out;
}

std::optional<std::string> decode_stream(const PdfObject& obj) {
    if (!obj.stream) return std::nullopt;
    if (obj.dict.find("/Filter") == std::string::npos) return obj.stream;
    if (obj.dict.find("/FlateDecode") != std::string::npos) {
        auto out = inflate(*obj.stream);
        if (!out) spdlog::warn("pdf: failed to inflate a content stream");
        return out;
    }
    spdlog::warn("pdf: unsupported stream filter, stream skipped");
    return std::nullopt;
}

std::optional<int> parse_int(std::string_view s) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p == s.data()) return std::nullopt;
    return v;
}

// All "N G R" references in `s`, in order.
std::vector<int> references(std::string_view s) {
    std::vector<int> refs;
    for (std::size_t pos = 0; (pos = s.find('R', pos)) != std::string_view::npos; ++pos) {
        if (pos + 1 < s.size() && !is_pdf_space(s[pos + 1]) && !is_delim(s[pos + 1])) continue;
        std::size_t i = pos;
        auto skip_back_space = [&] { while (i > 0 && is_pdf_space(s[i - 1])) --i; };
        auto back_digits = [&]() -> std::size_t {
            const std::size_t end = i;
            while (i > 0 && std::isdigit(static_cast<unsigned char>(s[i - 1]))) --i;
            return end - i;
        };
        skip_back_space();
        if (i == pos || back_digits() == 0) continue;
        const std::size_t gen_begin = i;
        skip_back_space();
        if (i == gen_begin) continue;
        const std::size_t num_end = i;
        if (back_digits() == 0) continue;
        if (i > 0 && !is_pdf_space(s[i - 1]) && !is_delim(s[i - 1])) continue;
        if (auto n = parse_int(s.substr(i, num_end - i))) refs.push_back(*n);
    }
    return refs;
}

// Value text following `/Key` up to the next key or end of dict, roughly.
std::string_view key_value(std::string_view dict, std::string_view key) {
    std::size_t pos = 0;
    while ((pos = dict.find(key, pos)) != std::string_view::npos) {
        const std::size_t after = pos + key.size();
        if (after < dict.size() && (std::isalnum(static_cast<unsigned char>(dict[after])))) {
            pos = after;
            continue;
        }
        std::size_t i = after;
        while (i < dict.size() && is_pdf_space(dict[i])) ++i;
        if (i < dict.size() && dict[i] == '[') {
            const auto close = dict.find(']', i);
            return dict.substr(i, close == std::string_view::npos ? std::string_view::npos : close - i + 1);
        }
        std::size_t end = i;
        while (end < dict.size() && dict[end] != '/' && dict[end] != '>') ++end;
        return dict.substr(i, end - i);
    }
    return {};
}

bool has_type(std::string_view dict, std::string_view type) {
    for (std::size_t pos = 0; (pos = dict.find("/Type", pos)) != std::string_view::npos; ++pos) {
        std::size_t i = pos + 5;
        while (i < dict.size() && is_pdf_space(dict[i])) ++i;
        if (dict.substr(i, type.size()) == type) {
            const std::size_t after = i + type.size();
            if (after >= dict.size() || !std::isalnum(static_cast<unsigned char>(dict[after]))) return true;
        }
    }
    return false;
}

void parse_object_stream(const PdfObject& obj, ObjectTable& table) {
    const auto data = decode_stream(obj);
    if (!data) return;
    const auto n = parse_int(text::trim(key_value(obj.dict, "/N")));
    const auto first = parse_int(text::trim(key_value(obj.dict, "/First")));
    if (!n || !first || *first < 0 || static_cast<std::size_t>(*first) > data->size()) return;
    std::vector<std::pair<int, std::size_t>> entries;
    const auto header = text::split_whitespace(std::string_view(*data).substr(0, static_cast<std::size_t>(*first)));
    for (std::size_t i = 0; i + 1 < header.size() && entries.size() < static_cast<std::size_t>(*n); i += 2) {
        const auto num = parse_int(header[i]);
        const auto off = parse_int(header[i + 1]);
        if (!num || !off) return;
        entries.emplace_back(*num, static_cast<std::size_t>(*first + *off));
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const std::size_t begin = std::min(entries[i].second, data->size());
        const std::size_t end = i + 1 < entries.size() ? std::min(entries[i + 1].second, data->size()) : data->size();
        if (end < begin) continue;
        table.try_emplace(entries[i].first, PdfObject{data->substr(begin, end - begin), std::nullopt});
    }
}

ObjectTable scan_objects(std::string_view pdf) {
    ObjectTable table;
    std::vector<int> object_streams;
    for (std::size_t pos = 0; (pos = pdf.find("obj", pos)) != std::string_view::npos; pos += 3) {
        if (pos + 3 < pdf.size() && std::isalpha(static_cast<unsigned char>(pdf[pos + 3]))) continue;
        if (pos > 0 && pdf[pos - 1] == 'd') continue;  // endobj
        std::size_t i = pos;
        while (i > 0 && is_pdf_space(pdf[i - 1])) --i;
        const std::size_t gen_end = i;
        while (i > 0 && std::isdigit(static_cast<unsigned char>(pdf[i - 1]))) --i;
        if (i == gen_end) continue;
        while (i > 0 && is_pdf_space(pdf[i - 1])) --i;
        const std::size_t num_end = i;
        while (i > 0 && std::isdigit(static_cast<unsigned char>(pdf[i - 1]))) --i;
        if (i == num_end) continue;
        const auto num = parse_int(pdf.substr(i, num_end - i));
        if (!num) continue;

        const std::size_t body = pos + 3;
        const auto endobj = pdf.find("endobj", body);
        const auto stream_kw = pdf.find("stream", body);
        PdfObject obj;
        if (stream_kw != std::string_view::npos && (endobj == std::string_view::npos || stream_kw < endobj)) {
            obj.dict = std::string(pdf.substr(body, stream_kw - body));
            std::size_t data = stream_kw + 6;
            if (data < pdf.size() && pdf[data] == '\r') ++data;
            if (data < pdf.size() && pdf[data] == '\n') ++data;
            std::size_t data_end = pdf.find("endstream", data);
            if (data_end == std::string_view::npos) data_end = pdf.size();
            // Prefer a direct /Length when it is consistent with the file.
            if (auto len = parse_int(text::trim(key_value(obj.dict, "/Length")));
                len && references(key_value(obj.dict, "/Length")).empty() && *len >= 0 &&
                data + static_cast<std::size_t>(*len) <= data_end) {
                obj.stream = std::string(pdf.substr(data, static_cast<std::size_t>(*len)));
            } else {
                std::size_t e = data_end;
                if (e > data && pdf[e - 1] == '\n') --e;
                if (e > data && pdf[e - 1] == '\r') --e;
                obj.stream = std::string(pdf.substr(data, e - data));
            }
            pos = data_end;
        } else {
            obj.dict = std::string(pdf.substr(body, (endobj == std::string_view::npos ? pdf.size() : endobj) - body));
        }
        if (has_type(obj.dict, "/ObjStm")) object_streams.push_back(*num);
        table[*num] = std::move(obj);
    }
    for (const int n : object_streams) parse_object_stream(table.at(n), table);
    return table;
}

void collect_pages(const ObjectTable& table, int node, std::vector<int>& pages, std::set<int>& seen) {
    if (!seen.insert(node).second) return;
    const auto it = table.find(node);
    if (it == table.end()) return;
    const auto& dict = it->second.dict;
    if (has_type(dict, "/Pages")) {
        for (const int kid : references(key_value(dict, "/Kids"))) collect_pages(table, kid, pages, seen);
    } else if (has_type(dict, "/Page")) {
        pages.push_back(node);
    }
}

std::vector<int> page_order(const ObjectTable& table) {
    std::vector<int> pages;
    std::set<int> seen;
    for (const auto& [num, obj] : table) {
        if (!has_type(obj.dict, "/Catalog")) continue;
        for (const int root : references(key_value(obj.dict, "/Pages"))) collect_pages(table, root, pages, seen);
        break;
    }
    if (pages.empty()) {
        for (const auto& [num, obj] : table) {
            if (has_type(obj.dict, "/Page")) pages.push_back(num);
        }
    }
    return pages;
}

// WinAnsi code points for 0x80..0x9F; zero means undefined.
constexpr char32_t kWinAnsiHigh[32] = {
    0x20AC, 0, 0x201A, 0x0192, 0x201E, 0x2026, 0x2020, 0x2021, 0x02C6, 0x2030, 0x0160, 0x2039, 0x0152, 0, 0x017D, 0,
    0, 0x2018, 0x2019, 0x201C, 0x201D, 0x2022, 0x2013, 0x2014, 0x02DC, 0x2122, 0x0161, 0x203A, 0x0153, 0, 0x017E, 0x0178,
};

void append_pdf_bytes(std::string& out, std::string_view bytes) {
    if (bytes.size() >= 2 && static_cast<unsigned char>(bytes[0]) == 0xFE &&
        static_cast<unsigned char>(bytes[1]) == 0xFF) {
        for (std::size_t i = 2; i + 1 < bytes.size(); i += 2) {
            const char32_t cp = (static_cast<unsigned char>(bytes[i]) << 8) | static_cast<unsigned char>(bytes[i + 1]);
            text::append_utf8(out, cp);
        }
        return;
    }
    for (const char c : bytes) {
        const auto b = static_cast<unsigned char>(c);
        if (b >= 0x80 && b < 0xA0) {
            if (kWinAnsiHigh[b - 0x80] != 0) text::append_utf8(out, kWinAnsiHigh[b - 0x80]);
        } else if (b >= 0x20 || b == '\t') {
            text::append_utf8(out, b);
        }
    }
}

class ContentReader {
public:
    explicit ContentReader(std::string_view src) : s_(src) {}

    std::string run() {
        while (skip_space(), pos_ < s_.size()) {
            const char c = s_[pos_];
            if (c == '(') {
                operands_.push_back({Kind::String, literal_string()});
            } else if (c == '<' && pos_ + 1 < s_.size() && s_[pos_ + 1] == '<') {
                skip_dict();
            } else if (c == '<') {
                operands_.push_back({Kind::String, hex_string()});
            } else if (c == '[') {
                ++pos_;
                operands_.push_back({Kind::ArrayStart, {}});
            } else if (c == ']') {
                ++pos_;
                close_array();
            } else if (c == '/') {
                ++pos_;
                operands_.push_back({Kind::Other, word()});
            } else if (is_number_start(c)) {
                operands_.push_back({Kind::Number, word()});
            } else if (is_delim(c) || c == ')' || c == '>') {
                ++pos_;
            } else {
                const std::string op = word();
                if (op == "BI") {
                    skip_inline_image();
                } else {
                    apply(op);
                }
                operands_.clear();
            }
        }
        return std::move(out_);
    }

private:
    enum class Kind { String, Number, ArrayStart, Array, Other };
    struct Operand {
        Kind kind;
        std::string value;
        std::vector<Operand> items = {};
    };

    static bool is_number_start(char c) {
        return std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.';
    }

    void skip_space() {
        while (pos_ < s_.size()) {
            if (is_pdf_space(s_[pos_])) {
                ++pos_;
            } else if (s_[pos_] == '%') {
                while (pos_ < s_.size() && s_[pos_] != '\n' && s_[pos_] != '\r') ++pos_;
            } else {
                break;
            }
        }
    }

    std::string word() {
        const std::size_t begin = pos_;
        while (pos_ < s_.size() && !is_pdf_space(s_[pos_]) && !is_delim(s_[pos_])) ++pos_;
        if (pos_ == begin) ++pos_;
        return std::string(s_.substr(begin, pos_ - begin));
    }

    std::string literal_string() {
        std::string bytes;
        int depth = 0;
        ++pos_;
        while (pos_ < s_.size()) {
            const char c = s_[pos_++];
            if (c == '\\' && pos_ < s_.size()) {
                const char e = s_[pos_++];
                switch (e) {
                    case 'n': bytes.push_back('\n'); break;
                    case 'r': bytes.push_back('\r'); break;
                    case 't': bytes.push_back('\t'); break;
                    case 'b': bytes.push_back('\b'); break;
                    case 'f': bytes.push_back('\f'); break;
                    case '\r':
                        if (pos_ < s_.size() && s_[pos_] == '\n') ++pos_;
                        break;
                    case '\n': break;
                    default:
                        if (e >= '0' && e <= '7') {
                            int v = e - '0';
                            for (int k = 0; k < 2 && pos_ < s_.size() && s_[pos_] >= '0' && s_[pos_] <= '7'; ++k) {
                                v = v * 8 + (s_[pos_++] - '0');
                            }
                            bytes.push_back(static_cast<char>(v & 0xFF));
                        } else {
                            bytes.push_back(e);
                        }
                }
            } else if (c == '(') {
                ++depth;
                bytes.push_back(c);
            } else if (c == ')') {
                if (depth == 0) break;
                --depth;
                bytes.push_back(c);
            } else {
                bytes.push_back(c);
            }
        }
        return bytes;
    }

    std::string hex_string() {
        ++pos_;
        std::string bytes;
        int hi = -1;
        while (pos_ < s_.size() && s_[pos_] != '>') {
            const char c = s_[pos_++];
            int v;
            if (c >= '0' && c <= '9') v = c - '0';
            else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
            else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
            else continue;
            if (hi < 0) {
                hi = v;
            } else {
                bytes.push_back(static_cast<char>(hi * 16 + v));
                hi = -1;
            }
        }
        if (hi >= 0) bytes.push_back(static_cast<char>(hi * 16));
        ++pos_;
        return bytes;
    }

    void skip_dict() {
        int depth = 0;
        while (pos_ + 1 < s_.size()) {
            if (s_[pos_] == '<' && s_[pos_ + 1] == '<') {
                ++depth;
                pos_ += 2;
            } else if (s_[pos_] == '>' && s_[pos_ + 1] == '>') {
                pos_ += 2;
                if (--depth == 0) return;
            } else {
                ++pos_;
            }
        }
        pos_ = s_.size();
    }

    void skip_inline_image() {
        const auto ei = s_.find("EI", pos_);
        pos_ = ei == std::string_view::npos ? s_.size() : ei + 2;
    }

    void close_array() {
        auto start = std::find_if(operands_.rbegin(), operands_.rend(),
                                  [](const Operand& o) { return o.kind == Kind::ArrayStart; });
        if (start == operands_.rend()) return;
        const auto first = start.base();
        Operand array{Kind::Array, {}};
        array.items.assign(std::make_move_iterator(first), std::make_move_iterator(operands_.end()));
        operands_.erase(first - 1, operands_.end());
        operands_.push_back(std::move(array));
    }

    double number(std::size_t from_end) const {
        if (operands_.size() < from_end) return 0.0;
        const auto& o = operands_[operands_.size() - from_end];
        if (o.kind != Kind::Number) return 0.0;
        try {
            return std::stod(o.value);
        } catch (...) {
            return 0.0;
        }
    }

    void newline() {
        if (!out_.empty() && out_.back() != '\n') out_.push_back('\n');
        pending_space_ = false;
    }

    void show(std::string_view bytes) {
        if (pending_space_ && !out_.empty() && out_.back() != '\n' && out_.back() != ' ') out_.push_back(' ');
        pending_space_ = false;
        append_pdf_bytes(out_, bytes);
    }

    void apply(const std::string& op) {
        if (op == "Tj") {
            if (!operands_.empty() && operands_.back().kind == Kind::String) show(operands_.back().value);
        } else if (op == "'" || op == "\"") {
            newline();
            if (!operands_.empty() && operands_.back().kind == Kind::String) show(operands_.back().value);
        } else if (op == "TJ") {
            if (operands_.empty() || operands_.back().kind != Kind::Array) return;
            for (const auto& item : operands_.back().items) {
                if (item.kind == Kind::String) {
                    show(item.value);
                } else if (item.kind == Kind::Number) {
                    double adj = 0.0;
                    try {
                        adj = std::stod(item.value);
                    } catch (...) {
                    }
                    if (adj < -200.0) pending_space_ = true;
                }
            }
        } else if (op == "Td" || op == "TD") {
            if (number(1) != 0.0) {
                newline();
            } else if (number(2) > 0.0) {
                pending_space_ = true;
            }
        } else if (op == "T*") {
            newline();
        } else if (op == "Tm") {
            const double y = number(1);
            if (have_y_ && y != last_y_) newline();
            else pending_space_ = true;
            have_y_ = true;
            last_y_ = y;
        } else if (op == "ET") {
            pending_space_ = true;
        }
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    std::vector<Operand> operands_;
    std::string out_;
    bool pending_space_ = false;
    bool have_y_ = false;
    double last_y_ = 0.0;
};

}  // namespace

std::vector<std::string> extract_pdf_pages(std::string_view bytes) {
    const auto header = bytes.substr(0, 1024).find("%PDF-");
    if (header == std::string_view::npos) throw Error(ErrorCode::UnreadableFile, "missing %PDF- header");

    const auto table = scan_objects(bytes);
    std::vector<std::string> pages;
    for (const int page : page_order(table)) {
        std::string content;
        for (const int ref : references(key_value(table.at(page).dict, "/Contents"))) {
            const auto it = table.find(ref);
            if (it == table.end()) continue;
            if (auto data = decode_stream(it->second)) {
                content += *data;
                content.push_back('\n');
            }
        }
        std::string page_text = ContentReader(content).run();
        while (!page_text.empty() && (page_text.back() == '\n' || page_text.back() == ' ')) page_text.pop_back();
        pages.push_back(std::move(page_text));
    }
    return pages;
}

}  // namespace bularag
