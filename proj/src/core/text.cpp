#include "edgemap/core/text.hpp"

#include "edgemap/error.hpp"

namespace edgemap::text {

namespace {

constexpr char kHex[] = "0123456789abcdef";

int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

bool needs_quotes(std::string_view v) {
    if (v.empty()) return true;
    for (unsigned char c : v)
        if (c <= 0x20 || c >= 0x7f || c == '"' || c == '\\' || c == '=') return true;
    return false;
}

}  // namespace

std::string escape(std::string_view bytes) {
    std::string out;
    out.reserve(bytes.size());
    for (unsigned char c : bytes) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (c < 0x20 || c >= 0x7f) {
                    out += "\\x";
                    out += kHex[c >> 4];
                    out += kHex[c & 0xf];
                } else {
                    out += static_cast<char>(c);
                }
        }
    }
    return out;
}

std::string encode_value(std::string_view value) {
    if (!needs_quotes(value)) return std::string(value);
    return '"' + escape(value) + '"';
}

std::vector<std::string> split_words(std::string_view line) {
    std::vector<std::string> words;
    std::string current;
    bool in_word = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            if (in_word) words.push_back(std::move(current));
            current.clear();
            in_word = false;
            continue;
        }
        in_word = true;
        if (c != '"') {
            current += c;
            continue;
        }
        bool closed = false;
        for (++i; i < line.size(); ++i) {
            c = line[i];
            if (c == '"') {
                closed = true;
                break;
            }
            if (c != '\\') {
                current += c;
                continue;
            }
            if (++i >= line.size()) break;
            switch (line[i]) {
                case '"': current += '"'; break;
                case '\\': current += '\\'; break;
                case 'n': current += '\n'; break;
                case 'r': current += '\r'; break;
                case 't': current += '\t'; break;
                case 'x': {
                    int hi = i + 1 < line.size() ? hex_digit(line[i + 1]) : -1;
                    int lo = i + 2 < line.size() ? hex_digit(line[i + 2]) : -1;
                    if (hi < 0 || lo < 0) fail(ErrorCode::InvalidArgument, "bad \\x escape");
                    current += static_cast<char>(hi * 16 + lo);
                    i += 2;
                    break;
                }
                default: fail(ErrorCode::InvalidArgument, std::string("unknown escape \\") + line[i]);
            }
        }
        if (!closed) fail(ErrorCode::InvalidArgument, "unterminated quoted string");
    }
    if (in_word) words.push_back(std::move(current));
    return words;
}

std::pair<std::string, std::string> split_key_value(const std::string& word) {
    auto eq = word.find('=');
    if (eq == std::string::npos) return {word, {}};
    return {word.substr(0, eq), word.substr(eq + 1)};
}

std::string to_hex(std::string_view bytes) {
    std::string out;
    out.reserve(bytes.size() * 2);
    for (unsigned char c : bytes) {
        out += kHex[c >> 4];
        out += kHex[c & 0xf];
    }
    return out;
}

std::string from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) fail(ErrorCode::InvalidArgument, "odd-length hex string");
    std::string out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_digit(hex[i]);
        int lo = hex_digit(hex[i + 1]);
        if (hi < 0 || lo < 0) fail(ErrorCode::InvalidArgument, "non-hex character");
        out += static_cast<char>(hi * 16 + lo);
    }
    return out;
}

}  // namespace edgemap::text
