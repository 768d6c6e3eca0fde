#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace edgemap::text {

/// Quotes and escapes a value when it is empty or contains whitespace,
/// quotes, backslashes, '=' or non-printable bytes. Escapes: \" \\ \n \r \t \xHH.
std::string encode_value(std::string_view value);

/// C-style escaping of arbitrary bytes into printable ASCII (no quotes added).
std::string escape(std::string_view bytes);

/// Splits a line into whitespace-separated words. Double-quoted segments may
/// contain spaces and escapes and are unescaped in place, so `k="a b"` yields
/// the word `k=a b`. Throws Error(InvalidArgument) on unterminated quotes or
/// bad escapes.
std::vector<std::string> split_words(std::string_view line);

/// Splits "key=value" at the first '='; value is empty when there is no '='.
std::pair<std::string, std::string> split_key_value(const std::string& word);

std::string to_hex(std::string_view bytes);
/// Throws Error(InvalidArgument) on odd length or non-hex characters.
std::string from_hex(std::string_view hex);

}  // namespace edgemap::text
