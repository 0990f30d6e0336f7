#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mednorm/datamodel.hpp"

namespace mednorm {

struct AbbreviationPair {
    std::string short_form;
    std::string long_form;

    friend bool operator==(const AbbreviationPair&, const AbbreviationPair&) = default;
};

// Schwartz-Hearst detection of "long form (SF)" patterns. Short-form
// candidates: 2-10 characters, at most 2 tokens, at least one letter, first
// character alphanumeric. The long form is searched in a window of
// min(|SF|+5, 2*|SF|) tokens before the parenthesis.
std::vector<AbbreviationPair> find_abbreviations(const std::string& text);

// Best long form for a known short form within the search window, or
// nullopt. Matches short-form characters right-to-left; the first character
// must start a word of the long form.
std::optional<std::string> best_long_form(const std::string& short_form,
                                          const std::string& window);

// Sets mention.long_form for every mention whose text equals a short form
// detected in its document. Text and spans are unchanged; idempotent.
Dataset expand_abbreviations(const Dataset& ds);

}  // namespace mednorm
