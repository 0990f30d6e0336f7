#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mednorm::utf8 {

// Decodes UTF-8 into Unicode scalar values. Invalid bytes are mapped to
// U+FFFD one byte at a time so offsets stay monotonic.
std::vector<char32_t> decode(std::string_view text);

void append(std::string& out, char32_t cp);

std::string encode(const std::vector<char32_t>& cps);

// Number of Unicode scalar values in the string.
std::size_t length(std::string_view text);

// Byte offset of the codepoint with index cp_index (end-of-string for
// cp_index >= length).
std::size_t byte_offset(std::string_view text, std::size_t cp_index);

// Substring by codepoint indices [start, end).
std::string substr(std::string_view text, std::size_t start, std::size_t end);

// ASCII plus Latin-1 supplement lowercasing, applied per codepoint.
char32_t to_lower(char32_t cp);
std::string to_lower(std::string_view text);

}  // namespace mednorm::utf8
