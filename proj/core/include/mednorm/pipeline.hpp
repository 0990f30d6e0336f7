#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mednorm/candidates.hpp"
#include "mednorm/datamodel.hpp"
#include "mednorm/kb.hpp"

namespace mednorm {

// A candidate generator is a batch function: mention strings in, one
// CandidateList per mention out. Sparse and dense indices both bind to this.
struct GeneratorHandle {
    std::string name;      // "sparse" / "dense" / custom
    std::string kb_hash;   // hash recorded in the backing index
    std::function<std::vector<CandidateList>(const std::vector<std::string>&, int)> query;
};

inline constexpr int kDefaultTopK = 64;

// Runs every generator over every mention of every split. Keys of the outer
// map are mention ids; inner lists follow generator order.
std::map<std::string, std::vector<CandidateList>> generate_candidates(
    const Dataset& ds, const std::vector<GeneratorHandle>& generators,
    int k = kDefaultTopK);

// Union of concepts with per-concept max score, re-sorted; inputs must share
// a mention id. Raw scores are kept as-is (no re-weighting).
CandidateList ensemble_merge(const std::vector<CandidateList>& lists);

struct FilterStats {
    std::size_t removed = 0;
    std::size_t unknown_type_warnings = 0;
    std::size_t unmapped_concept_types = 0;
};

// Drops candidates whose concept has no semantic type in the mention's
// semantic group. Mention types missing from type_to_group leave the list
// unchanged and bump the warning counter.
CandidateList filter_by_semantic_group(const CandidateList& cl,
                                       const std::string& mention_type,
                                       const KnowledgeBase& kb,
                                       const std::map<std::string, std::string>& type_to_group,
                                       FilterStats& stats);

// Candidate dump format used between CLI stages:
// one JSON object per line {"mention_id", "candidates":[...], "abstain"?}.
std::string serialize_candidates(const std::vector<CandidateList>& lists);
void save_candidates(const std::vector<CandidateList>& lists, const std::string& path);
std::vector<CandidateList> load_candidates(const std::string& path);

}  // namespace mednorm
