#pragma once

#include <string>
#include <vector>

namespace mednorm {

enum class CandidateSource { sparse, dense, ensemble };

std::string to_string(CandidateSource s);
CandidateSource candidate_source_from_string(const std::string& s);

struct Candidate {
    std::string concept_id;
    double score = 0.0;
    CandidateSource source = CandidateSource::sparse;

    friend bool operator==(const Candidate&, const Candidate&) = default;
};

// Ranked candidates for one mention: score descending, concept_id ascending
// on ties, no duplicate concept ids.
struct CandidateList {
    std::string mention_id;
    std::vector<Candidate> candidates;
    bool abstain = false;  // set by the re-ranker when NIL wins

    friend bool operator==(const CandidateList&, const CandidateList&) = default;
};

// Canonical (score desc, concept_id asc) ordering.
void sort_candidates(std::vector<Candidate>& candidates);

}  // namespace mednorm
