#pragma once

#include <map>
#include <string>
#include <vector>

#include "mednorm/candidates.hpp"
#include "mednorm/datamodel.hpp"
#include "mednorm/kb.hpp"

namespace mednorm {

inline constexpr const char* kFeatureVersion = "builtin/1";
inline constexpr const char* kNilConceptId = "[NIL]";

struct MentionEncoding {
    std::string serialized;  // "[CLS] ctx_l [START] mention [END] ctx_r"
    int ctx_len = 0;
};

struct ConceptEncoding {
    std::string serialized;  // "type [TYPE] canonical [TITLE] a1 [SEP] ... [SEP] aN"
};

// Context is truncated to ctx_len codepoints per side; a long form, when
// present, is appended to the mention as " (long form)".
MentionEncoding encode_mention(const Document& doc, const Mention& mention,
                               int ctx_len);

// Semantic type = first listed type; aliases exclude the canonical name.
ConceptEncoding encode_concept(const Concept& entry);

// The synthetic not-in-list concept.
ConceptEncoding encode_nil();

// One mention's candidate slate: k slots including exactly one NIL.
struct TrainingBatch {
    std::string mention_id;
    std::vector<std::string> concept_ids;        // kNilConceptId at nil_index
    std::size_t nil_index = 0;
    std::size_t gold_index = 0;                  // == nil_index when gold missing
    std::vector<double> cg_scores;               // c; 0.0 at the NIL slot
    std::vector<std::vector<double>> features;   // one row per slot

    std::size_t size() const { return concept_ids.size(); }
};

struct ScorerParams {
    std::string feature_version = kFeatureVersion;
    std::vector<double> weights;
    double bias = 0.0;
};

struct RerankerConfig {
    int k = 64;
    double lambda = 1.0;
    double learning_rate = 1e-2;
    int epochs = 20;
    int ctx_len = 128;
    std::uint64_t seed = 42;
};

// Feature names of the builtin scorer, in weight order.
const std::vector<std::string>& feature_names();

// Unit weight on the cg-score feature: reproduces the CG ranking untrained.
ScorerParams initial_params();

// Feature row for one (mention, candidate) pair. cg_rank is the 0-based
// position in the candidate list.
std::vector<double> candidate_features(const std::string& mention_text,
                                       const std::string& mention_type,
                                       const Candidate& candidate,
                                       std::size_t cg_rank,
                                       const KnowledgeBase& kb,
                                       const std::map<std::string, std::string>& type_to_group);

// Builds the slate for one mention: candidates truncated to max_k-1 plus the
// NIL slot. gold_id empty or missing from the list puts gold on NIL.
TrainingBatch build_batch(const Mention& mention, const CandidateList& cl,
                          const std::string& gold_id, int max_k,
                          const KnowledgeBase& kb,
                          const std::map<std::string, std::string>& type_to_group);

// s_i = w . f_i + b
std::vector<double> score_candidates(const ScorerParams& params,
                                     const TrainingBatch& batch);

struct LossGrad {
    double loss = 0.0;
    double softmax_term = 0.0;
    double regularizer = 0.0;  // ||s - c||_2 (unweighted)
    std::vector<double> grad;  // d loss / d (weights..., bias)
};

// loss = -s_gold + logsumexp(s) + lambda * ||s - c||_2, with the analytic
// gradient w.r.t. (weights, bias). Non-finite intermediates are errors.
LossGrad loss_and_grad(const ScorerParams& params, const TrainingBatch& batch,
                       double lambda);

struct EpochStats {
    int epoch = 0;
    double mean_loss = 0.0;
    double mean_regularizer = 0.0;
    double validation_f1 = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;  // -1 when the untrained params won
    double best_validation_f1 = 0.0;
};

struct TrainResult {
    ScorerParams params;
    TrainReport report;
};

// Plain SGD over per-mention batches; mention order reshuffled each epoch
// with a seeded generator; keeps the epoch with the best validation F1@1.
// Multi-gold mentions contribute one batch per gold concept.
TrainResult train_reranker(const Dataset& train,
                           const std::map<std::string, CandidateList>& train_cands,
                           const Dataset& val,
                           const std::map<std::string, CandidateList>& val_cands,
                           const KnowledgeBase& kb,
                           const std::map<std::string, std::string>& type_to_group,
                           const RerankerConfig& cfg);

// Re-scores a candidate list; abstains when the NIL slot wins. Scores in the
// output are the scorer's s values.
CandidateList rerank(const ScorerParams& params, const CandidateList& cl,
                     const Mention& mention, const KnowledgeBase& kb,
                     const std::map<std::string, std::string>& type_to_group);

// Model file: JSON {feature_version, weights, bias, config, kb_hash,
// train_report_digest}.
void save_model(const ScorerParams& params, const RerankerConfig& cfg,
                const TrainReport& report, const std::string& kb_hash,
                const std::string& path);

struct LoadedModel {
    ScorerParams params;
    RerankerConfig config;
    std::string kb_hash;
};

LoadedModel load_model(const std::string& path);

// Portable deterministic shuffle (splitmix64-driven Fisher-Yates); shared by
// training and any oracle reimplementation.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next();

private:
    std::uint64_t state_;
};

template <typename T>
void deterministic_shuffle(std::vector<T>& items, SplitMix64& rng) {
    for (std::size_t i = items.size(); i > 1; --i)
        std::swap(items[i - 1], items[rng.next() % i]);
}

}  // namespace mednorm
