#include "mednorm/candidates.hpp"

#include <algorithm>

#include "mednorm/errors.hpp"

namespace mednorm {

std::string to_string(CandidateSource s) {
    switch (s) {
        case CandidateSource::sparse: return "sparse";
        case CandidateSource::dense: return "dense";
        case CandidateSource::ensemble: return "ensemble";
    }
    return "sparse";
}

CandidateSource candidate_source_from_string(const std::string& s) {
    if (s == "sparse") return CandidateSource::sparse;
    if (s == "dense") return CandidateSource::dense;
    if (s == "ensemble") return CandidateSource::ensemble;
    throw ParseError("unknown candidate source '" + s + "'");
}

void sort_candidates(std::vector<Candidate>& candidates) {
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) {
                         if (a.score != b.score) return a.score > b.score;
                         return a.concept_id < b.concept_id;
                     });
}

}  // namespace mednorm
