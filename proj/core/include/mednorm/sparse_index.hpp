#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mednorm/candidates.hpp"
#include "mednorm/kb.hpp"

namespace mednorm {

struct SparseIndexParams {
    int n = 3;
    bool lowercase = true;
};

// TF-IDF character n-gram index over all KB alias rows. One L2-normalized
// sparse row per (alias, concept_id) pair; cosine retrieval via exact scan.
class SparseIndex {
public:
    static constexpr int kFormatVersion = 1;

    SparseIndexParams params;
    std::string kb_hash;
    std::map<std::string, std::uint32_t> vocabulary;  // n-gram -> column id
    std::vector<double> idf;                          // per column
    // CSR storage of the normalized rows.
    std::vector<std::uint64_t> row_offsets;  // size rows+1
    std::vector<std::uint32_t> columns;
    std::vector<double> values;
    std::vector<std::string> row_concepts;  // concept_id per row
    std::vector<std::string> row_aliases;   // alias text per row

    std::size_t row_count() const { return row_concepts.size(); }

    // Sparse TF-IDF vector of a query string in index coordinates,
    // L2-normalized; n-grams outside the vocabulary are dropped.
    std::vector<std::pair<std::uint32_t, double>> vectorize(const std::string& text) const;
};

// Lowercased, space-padded character n-grams of a string ("abc" with n=3
// yields " ab", "abc", "bc ").
std::vector<std::string> char_ngrams(const std::string& text, int n, bool lowercase);

SparseIndex build_sparse_index(const KnowledgeBase& kb,
                               SparseIndexParams params = {});

std::vector<CandidateList> query_sparse(const SparseIndex& index,
                                        const std::vector<std::string>& mentions,
                                        int k);

void save_sparse_index(const SparseIndex& index, const std::string& dir);
SparseIndex load_sparse_index(const std::string& dir);

}  // namespace mednorm
