#include "mednorm/abbrev.hpp"

#include <algorithm>
#include <map>

#include "mednorm/utf8.hpp"

namespace mednorm {

namespace {

bool is_letter(char32_t cp) {
    if ((cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z')) return true;
    // Latin letters above ASCII, excluding multiplication/division signs.
    return cp >= 0x00C0 && cp != 0x00D7 && cp != 0x00F7;
}

bool is_alnum(char32_t cp) {
    return is_letter(cp) || (cp >= U'0' && cp <= U'9');
}

bool is_space(char32_t cp) {
    return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\f';
}

std::vector<char32_t> trim(const std::vector<char32_t>& cps) {
    std::size_t b = 0, e = cps.size();
    while (b < e && is_space(cps[b])) ++b;
    while (e > b && is_space(cps[e - 1])) --e;
    return {cps.begin() + static_cast<long>(b), cps.begin() + static_cast<long>(e)};
}

std::size_t token_count(const std::vector<char32_t>& cps) {
    std::size_t n = 0;
    bool in_token = false;
    for (char32_t cp : cps) {
        if (is_space(cp)) {
            in_token = false;
        } else if (!in_token) {
            ++n;
            in_token = true;
        }
    }
    return n;
}

bool valid_short_form(const std::vector<char32_t>& sf) {
    if (sf.size() < 2 || sf.size() > 10) return false;
    if (token_count(sf) > 2) return false;
    if (!is_alnum(sf.front())) return false;
    return std::any_of(sf.begin(), sf.end(), is_letter);
}

// Right-to-left character matching; the short form's first character must
// start a word of the long form.
std::optional<std::vector<char32_t>> find_best_long_form(
    const std::vector<char32_t>& sf, const std::vector<char32_t>& lf) {
    long s_index = static_cast<long>(sf.size()) - 1;
    long l_index = static_cast<long>(lf.size()) - 1;
    for (; s_index >= 0; --s_index) {
        char32_t c = utf8::to_lower(sf[static_cast<std::size_t>(s_index)]);
        if (!is_alnum(c)) continue;
        while ((l_index >= 0 &&
                utf8::to_lower(lf[static_cast<std::size_t>(l_index)]) != c) ||
               (s_index == 0 && l_index > 0 &&
                is_alnum(lf[static_cast<std::size_t>(l_index - 1)])))
            --l_index;
        if (l_index < 0) return std::nullopt;
        --l_index;
    }
    // Back up to the start of the word holding the first matched character.
    long word_start = l_index;
    while (word_start > 0 && lf[static_cast<std::size_t>(word_start)] != U' ')
        --word_start;
    if (word_start >= 0 && lf[static_cast<std::size_t>(word_start)] == U' ')
        ++word_start;
    if (word_start < 0) word_start = 0;
    return std::vector<char32_t>(lf.begin() + word_start, lf.end());
}

bool valid_long_form(const std::vector<char32_t>& sf, const std::vector<char32_t>& lf) {
    std::size_t sf_alnum = 0;
    for (char32_t cp : sf)
        if (is_alnum(cp)) ++sf_alnum;
    std::size_t lf_tokens = token_count(lf);
    if (lf.size() <= sf.size()) return false;
    if (lf_tokens > sf_alnum * 2 || lf_tokens > sf_alnum + 5) return false;
    // Reject long forms that merely contain or end with the short form.
    std::string sstr = utf8::encode(sf), lstr = utf8::encode(lf);
    if (lstr.find(sstr + " ") != std::string::npos) return false;
    if (lstr.size() >= sstr.size() &&
        lstr.compare(lstr.size() - sstr.size(), sstr.size(), sstr) == 0)
        return false;
    return true;
}

// Last min(|SF|+5, 2*|SF|) whitespace tokens of the text before the '('.
std::vector<char32_t> long_form_window(const std::vector<char32_t>& text,
                                       std::size_t paren, std::size_t sf_len) {
    std::size_t max_tokens = std::min(sf_len + 5, 2 * sf_len);
    long i = static_cast<long>(paren) - 1;
    while (i >= 0 && is_space(text[static_cast<std::size_t>(i)])) --i;
    std::size_t tokens = 0;
    long start = i + 1;
    while (i >= 0 && tokens < max_tokens) {
        while (i >= 0 && !is_space(text[static_cast<std::size_t>(i)])) --i;
        ++tokens;
        start = i + 1;
        while (i >= 0 && is_space(text[static_cast<std::size_t>(i)])) --i;
    }
    std::vector<char32_t> window(text.begin() + start,
                                 text.begin() + static_cast<long>(paren));
    return trim(window);
}

}  // namespace

std::optional<std::string> best_long_form(const std::string& short_form,
                                          const std::string& window) {
    auto sf = utf8::decode(short_form);
    auto lf = utf8::decode(window);
    auto best = find_best_long_form(sf, lf);
    if (!best || !valid_long_form(sf, *best)) return std::nullopt;
    return utf8::encode(*best);
}

std::vector<AbbreviationPair> find_abbreviations(const std::string& text) {
    auto cps = utf8::decode(text);
    std::vector<AbbreviationPair> pairs;
    std::size_t i = 0;
    while (i < cps.size()) {
        if (cps[i] != U'(') {
            ++i;
            continue;
        }
        std::size_t close = i + 1;
        bool nested = false;
        while (close < cps.size() && cps[close] != U')') {
            if (cps[close] == U'(') {
                nested = true;
                break;
            }
            ++close;
        }
        if (nested) {
            i = close;  // restart from the inner parenthesis
            continue;
        }
        if (close >= cps.size()) break;
        std::vector<char32_t> content(cps.begin() + static_cast<long>(i) + 1,
                                      cps.begin() + static_cast<long>(close));
        // Truncate at clause separators inside the parenthetical.
        for (std::size_t j = 0; j + 1 < content.size(); ++j) {
            if ((content[j] == U',' || content[j] == U';') && content[j + 1] == U' ') {
                content.resize(j);
                break;
            }
        }
        content = trim(content);
        if (valid_short_form(content)) {
            auto window = long_form_window(cps, i, content.size());
            auto sf = utf8::encode(content);
            auto lf = best_long_form(sf, utf8::encode(window));
            if (lf) pairs.push_back({sf, *lf});
        }
        i = close + 1;
    }
    return pairs;
}

Dataset expand_abbreviations(const Dataset& ds) {
    Dataset out = ds;
    for (auto& [split, docs] : out.splits) {
        for (auto& doc : docs) {
            auto pairs = find_abbreviations(doc.full_text());
            if (pairs.empty()) continue;
            std::map<std::string, std::string> sf_to_lf;
            for (const auto& p : pairs) sf_to_lf.emplace(p.short_form, p.long_form);
            for (auto& m : doc.mentions) {
                auto it = sf_to_lf.find(m.text);
                if (it != sf_to_lf.end()) m.long_form = it->second;
            }
        }
    }
    return out;
}

}  // namespace mednorm
