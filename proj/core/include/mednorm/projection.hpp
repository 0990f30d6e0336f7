#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mednorm/datamodel.hpp"

namespace mednorm {

struct MarkedText {
    std::string text;  // mentions wrapped as [mention]; pre-existing
                       // brackets escaped as \[ and \]
    std::vector<std::string> origin_mention_ids;  // aligned to marker pairs
    bool escaping_applied = false;
};

// Wraps every contiguous mention of the document in square brackets.
// Requires single-span, non-overlapping mentions (overlap is split into
// separate passes by project_dataset).
MarkedText insert_markers(const Document& doc);

struct RecoveredSpans {
    std::string clean_text;   // markers stripped, escapes undone
    std::vector<Span> spans;  // codepoint offsets into clean_text
};

struct RecoveryFailure {
    std::string defect;  // "unbalanced" or "count_mismatch"
    std::string detail;
};

using RecoveryResult = std::variant<RecoveredSpans, RecoveryFailure>;

// Strips markers from a translated string; failure is data, not an error.
RecoveryResult recover_spans(const std::string& translated,
                             std::size_t expected_pairs);

struct LossReport {
    std::size_t entities_in = 0;
    std::size_t entities_out = 0;
    double loss_percent() const {
        return entities_in == 0
                   ? 0.0
                   : 100.0 * static_cast<double>(entities_in - entities_out) /
                         static_cast<double>(entities_in);
    }
    std::string to_json() const;
};

using TranslateFn = std::function<std::string(const std::string&)>;

struct ProjectionResult {
    Dataset dataset;
    LossReport report;
};

// Marker-insert, translate, recover per document. Gold concepts are
// inherited by marker position; any recovery defect discards the whole
// document's entities (counted as loss). Overlapping or discontiguous
// mentions are partitioned into independent passes, each yielding its own
// output document.
ProjectionResult project_dataset(const Dataset& ds, const TranslateFn& translate);

}  // namespace mednorm
