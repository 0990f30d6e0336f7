#include "mednorm/utf8.hpp"

namespace mednorm::utf8 {

namespace {

// Returns the codepoint starting at text[i] and advances i past it.
char32_t next(std::string_view text, std::size_t& i) {
    unsigned char b0 = static_cast<unsigned char>(text[i]);
    std::size_t remaining = text.size() - i;
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    auto cont = [&](std::size_t off) {
        return off < remaining &&
               (static_cast<unsigned char>(text[i + off]) & 0xC0) == 0x80;
    };
    if ((b0 & 0xE0) == 0xC0 && cont(1)) {
        char32_t cp = (b0 & 0x1Fu) << 6 |
                      (static_cast<unsigned char>(text[i + 1]) & 0x3Fu);
        i += 2;
        return cp;
    }
    if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
        char32_t cp = (b0 & 0x0Fu) << 12 |
                      (static_cast<unsigned char>(text[i + 1]) & 0x3Fu) << 6 |
                      (static_cast<unsigned char>(text[i + 2]) & 0x3Fu);
        i += 3;
        return cp;
    }
    if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
        char32_t cp = (b0 & 0x07u) << 18 |
                      (static_cast<unsigned char>(text[i + 1]) & 0x3Fu) << 12 |
                      (static_cast<unsigned char>(text[i + 2]) & 0x3Fu) << 6 |
                      (static_cast<unsigned char>(text[i + 3]) & 0x3Fu);
        i += 4;
        return cp;
    }
    ++i;
    return 0xFFFD;
}

}  // namespace

std::vector<char32_t> decode(std::string_view text) {
    std::vector<char32_t> out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) out.push_back(next(text, i));
    return out;
}

void append(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::string encode(const std::vector<char32_t>& cps) {
    std::string out;
    out.reserve(cps.size());
    for (char32_t cp : cps) append(out, cp);
    return out;
}

std::size_t length(std::string_view text) {
    std::size_t n = 0, i = 0;
    while (i < text.size()) {
        next(text, i);
        ++n;
    }
    return n;
}

std::size_t byte_offset(std::string_view text, std::size_t cp_index) {
    std::size_t n = 0, i = 0;
    while (i < text.size() && n < cp_index) {
        next(text, i);
        ++n;
    }
    return i;
}

std::string substr(std::string_view text, std::size_t start, std::size_t end) {
    if (end <= start) return {};
    std::size_t b0 = byte_offset(text, start);
    std::size_t b1 = byte_offset(text, end);
    return std::string(text.substr(b0, b1 - b0));
}

char32_t to_lower(char32_t cp) {
    if (cp >= U'A' && cp <= U'Z') return cp + 0x20;
    // Latin-1 supplement, excluding the multiplication sign.
    if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return cp + 0x20;
    return cp;
}

std::string to_lower(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) append(out, to_lower(next(text, i)));
    return out;
}

}  // namespace mednorm::utf8
