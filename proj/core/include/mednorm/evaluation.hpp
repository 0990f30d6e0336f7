#pragma once

#include <map>
#include <string>
#include <vector>

#include "mednorm/candidates.hpp"
#include "mednorm/datamodel.hpp"
#include "mednorm/kb.hpp"

namespace mednorm {

// Predicted ranking: the documents carrying the predicted mention spans plus
// one ranked CandidateList per mention id. An abstaining list predicts NIL
// at rank 1 and shifts its candidates down one rank.
struct Predictions {
    Dataset docs;
    std::map<std::string, CandidateList> candidates;
};

struct BreakdownRow {
    std::size_t gold_units = 0;
    std::size_t true_positives = 0;
};

struct EvalReport {
    double precision_at_1 = 0.0;
    double recall_at_1 = 0.0;
    double f1_at_1 = 0.0;
    std::map<int, double> recall_at_k;
    std::size_t gold_pairs = 0;
    std::size_t predicted_pairs = 0;
    std::size_t true_positives = 0;
    // Keyed by mention length in whitespace tokens.
    std::map<std::size_t, BreakdownRow> by_mention_length;
    // Keyed by max shared-alias count between any candidate and the gold
    // concept; bucket 0 means the gold concept was not retrieved.
    std::map<std::size_t, BreakdownRow> by_shared_aliases;

    std::string to_json() const;
    std::string to_table() const;
};

// Strict span-level scoring. A gold unit is a (document, exact span set,
// gold concept) triple; multi-gold mentions contribute one unit per concept.
EvalReport evaluate(const Dataset& gold, const Predictions& predicted,
                    const std::vector<int>& ks = {1, 5, 64});

// Fills the by_mention_length / by_shared_aliases tables of a report; needs
// the KB for alias comparison (case-insensitive exact alias strings).
void error_breakdown(const Dataset& gold, const Predictions& predicted,
                     const KnowledgeBase& kb, EvalReport& report);

}  // namespace mednorm
