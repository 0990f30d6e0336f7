#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mednorm {

// Reference to a concept in some terminology (e.g. db_name="UMLS",
// db_id="C0024141").
struct ConceptRef {
    std::string db_name;
    std::string db_id;

    friend bool operator==(const ConceptRef&, const ConceptRef&) = default;
    friend auto operator<=>(const ConceptRef&, const ConceptRef&) = default;
};

// Character span in codepoint offsets, end exclusive.
struct Span {
    std::size_t start = 0;
    std::size_t end = 0;

    friend bool operator==(const Span&, const Span&) = default;
    friend auto operator<=>(const Span&, const Span&) = default;
};

struct Mention {
    std::string id;
    std::vector<Span> spans;  // discontiguous allowed, document order
    std::string text;         // span substrings joined by a single space
    std::optional<std::string> entity_type;
    std::vector<ConceptRef> gold_concepts;  // empty for prediction input
    std::optional<std::string> long_form;   // set by abbreviation expansion

    friend bool operator==(const Mention&, const Mention&) = default;
};

struct Passage {
    std::string id;
    std::string text;
    std::size_t offset = 0;  // codepoint offset of the passage start

    friend bool operator==(const Passage&, const Passage&) = default;
};

struct Document {
    std::string id;
    std::vector<Passage> passages;
    std::vector<Mention> mentions;

    // Concatenated passage text with gaps filled by spaces, so that
    // codepoint offsets address the returned string directly.
    std::string full_text() const;

    friend bool operator==(const Document&, const Document&) = default;
};

struct Dataset {
    std::map<std::string, std::vector<Document>> splits;

    std::size_t mention_count() const;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

enum class DatasetFormat { passage_json };

// Loads and validates a dataset file. The file holds either
// {"documents":[...]} (single split, named "all") or
// {"splits":{"train":{"documents":[...]}, ...}}.
Dataset load_dataset(const std::string& path,
                     DatasetFormat format = DatasetFormat::passage_json);

std::string serialize_dataset(const Dataset& ds);
void save_dataset(const Dataset& ds, const std::string& path);

// Wraps NER output (offset spans with optional entity types) into a
// Document with empty gold_concepts.
Document from_ner_spans(
    const std::string& doc_id, const std::string& text,
    const std::vector<std::tuple<std::size_t, std::size_t, std::string>>& spans);

// Returns one human-readable line per invariant violation; empty means valid.
std::vector<std::string> validate_dataset(const Dataset& ds);

}  // namespace mednorm
