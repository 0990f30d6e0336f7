#include "mednorm/reranker.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mednorm/errors.hpp"
#include "mednorm/evaluation.hpp"
#include "mednorm/sparse_index.hpp"
#include "mednorm/utf8.hpp"

namespace mednorm {

using nlohmann::json;

std::uint64_t SplitMix64::next() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

namespace {

std::string trim_ws(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\n\r\f");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\n\r\f");
    return s.substr(b, e - b + 1);
}

std::set<std::string> trigram_set(const std::string& text) {
    std::set<std::string> out;
    for (auto& g : char_ngrams(text, 3, /*lowercase=*/true)) out.insert(std::move(g));
    return out;
}

double trigram_jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& g : a)
        if (b.count(g)) ++inter;
    std::size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::string mention_group(const std::string& mention_type,
                          const std::map<std::string, std::string>& type_to_group) {
    auto it = type_to_group.find(mention_type);
    // Entity types that already are group names pass through.
    return it == type_to_group.end() ? mention_type : it->second;
}

}  // namespace

MentionEncoding encode_mention(const Document& doc, const Mention& mention,
                               int ctx_len) {
    auto cps = utf8::decode(doc.full_text());
    std::size_t start = cps.size(), end = 0;
    for (const auto& s : mention.spans) {
        start = std::min(start, s.start);
        end = std::max(end, s.end);
    }
    if (mention.spans.empty()) start = end = 0;
    std::size_t left_begin =
        start > static_cast<std::size_t>(ctx_len) ? start - static_cast<std::size_t>(ctx_len) : 0;
    std::size_t right_end = std::min(cps.size(), end + static_cast<std::size_t>(ctx_len));
    std::string ctx_l = trim_ws(utf8::encode(
        {cps.begin() + static_cast<long>(left_begin), cps.begin() + static_cast<long>(start)}));
    std::string ctx_r = trim_ws(utf8::encode(
        {cps.begin() + static_cast<long>(std::min(end, cps.size())),
         cps.begin() + static_cast<long>(right_end)}));

    std::string mention_part = mention.text;
    if (mention.long_form) mention_part += " (" + *mention.long_form + ")";

    std::string serialized = "[CLS]";
    if (!ctx_l.empty()) serialized += " " + ctx_l;
    serialized += " [START] " + mention_part + " [END]";
    if (!ctx_r.empty()) serialized += " " + ctx_r;
    return {serialized, ctx_len};
}

ConceptEncoding encode_concept(const Concept& entry) {
    if (entry.aliases.empty())
        throw SchemaError("concept " + entry.concept_id + " has no aliases to encode");
    std::string type = entry.semantic_types.empty() ? "" : entry.semantic_types.front();
    std::string serialized = type + " [TYPE] " + entry.canonical_name + " [TITLE]";
    bool first = true;
    for (const auto& a : entry.aliases) {
        if (a.value == entry.canonical_name) continue;
        serialized += first ? " " : " [SEP] ";
        serialized += a.value;
        first = false;
    }
    return {serialized};
}

ConceptEncoding encode_nil() { return {"[UNK]"}; }

const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names = {
        "cg_score",        "cg_reciprocal_rank", "trigram_jaccard",
        "exact_match",     "group_match",        "log_alias_count",
        "nil_indicator",
    };
    return names;
}

ScorerParams initial_params() {
    ScorerParams p;
    p.weights.assign(feature_names().size(), 0.0);
    p.weights[0] = 1.0;  // cg-score feature: untrained scorer mirrors the CG
    return p;
}

std::vector<double> candidate_features(
    const std::string& mention_text, const std::string& mention_type,
    const Candidate& candidate, std::size_t cg_rank, const KnowledgeBase& kb,
    const std::map<std::string, std::string>& type_to_group) {
    std::vector<double> f(feature_names().size(), 0.0);
    if (candidate.concept_id == kNilConceptId) {
        f[6] = 1.0;
        return f;
    }
    f[0] = candidate.score;
    f[1] = 1.0 / static_cast<double>(1 + cg_rank);
    auto cit = kb.concepts.find(candidate.concept_id);
    if (cit != kb.concepts.end()) {
        const Concept& c = cit->second;
        auto mention_grams = trigram_set(mention_text);
        std::string mention_lower = utf8::to_lower(mention_text);
        double best_jaccard = 0.0;
        bool exact = false;
        for (const auto& a : c.aliases) {
            best_jaccard = std::max(best_jaccard,
                                    trigram_jaccard(mention_grams, trigram_set(a.value)));
            if (utf8::to_lower(a.value) == mention_lower) exact = true;
        }
        f[2] = best_jaccard;
        f[3] = exact ? 1.0 : 0.0;
        if (!mention_type.empty()) {
            std::string group = mention_group(mention_type, type_to_group);
            for (const auto& g : kb.groups_of(c))
                if (g == group) f[4] = 1.0;
        }
        f[5] = std::log(1.0 + static_cast<double>(c.aliases.size()));
    }
    return f;
}

TrainingBatch build_batch(const Mention& mention, const CandidateList& cl,
                          const std::string& gold_id, int max_k,
                          const KnowledgeBase& kb,
                          const std::map<std::string, std::string>& type_to_group) {
    if (max_k < 2) throw ConfigError("batch size k must be >= 2");
    TrainingBatch batch;
    batch.mention_id = mention.id;
    std::size_t n_cands =
        std::min(cl.candidates.size(), static_cast<std::size_t>(max_k - 1));
    std::string mtype = mention.entity_type.value_or("");
    for (std::size_t i = 0; i < n_cands; ++i) {
        const Candidate& c = cl.candidates[i];
        batch.concept_ids.push_back(c.concept_id);
        batch.cg_scores.push_back(c.score);
        batch.features.push_back(
            candidate_features(mention.text, mtype, c, i, kb, type_to_group));
    }
    batch.nil_index = batch.concept_ids.size();
    batch.concept_ids.push_back(kNilConceptId);
    batch.cg_scores.push_back(0.0);  // c-score of the NIL slot
    batch.features.push_back(candidate_features(
        mention.text, mtype, Candidate{kNilConceptId, 0.0, CandidateSource::ensemble},
        batch.nil_index, kb, type_to_group));
    batch.gold_index = batch.nil_index;
    for (std::size_t i = 0; i < n_cands; ++i)
        if (batch.concept_ids[i] == gold_id) {
            batch.gold_index = i;
            break;
        }
    return batch;
}

std::vector<double> score_candidates(const ScorerParams& params,
                                     const TrainingBatch& batch) {
    if (params.feature_version != kFeatureVersion)
        throw ConsistencyError("feature-version mismatch: model has '" +
                               params.feature_version + "', scorer expects '" +
                               kFeatureVersion + "'");
    if (params.weights.size() != feature_names().size())
        throw ConsistencyError("weight vector has wrong length");
    std::vector<double> s(batch.size(), 0.0);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        double v = params.bias;
        const auto& f = batch.features[i];
        for (std::size_t j = 0; j < params.weights.size(); ++j)
            v += params.weights[j] * f[j];
        s[i] = v;
    }
    return s;
}

LossGrad loss_and_grad(const ScorerParams& params, const TrainingBatch& batch,
                       double lambda) {
    if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
    const std::size_t k = batch.size();
    const std::size_t d = params.weights.size();
    std::vector<double> s = score_candidates(params, batch);

    double mx = *std::max_element(s.begin(), s.end());
    double sum_exp = 0.0;
    for (double v : s) sum_exp += std::exp(v - mx);
    double lse = mx + std::log(sum_exp);
    double softmax_term = -s[batch.gold_index] + lse;

    double reg_sq = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double diff = s[i] - batch.cg_scores[i];
        reg_sq += diff * diff;
    }
    double reg = std::sqrt(reg_sq);

    LossGrad out;
    out.softmax_term = softmax_term;
    out.regularizer = reg;
    out.loss = softmax_term + lambda * reg;

    // d loss / d s_i, then chain through s_i = w . f_i + b.
    double reg_denom = std::max(reg, 1e-12);
    out.grad.assign(d + 1, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        double p = std::exp(s[i] - lse);
        double ds = p - (i == batch.gold_index ? 1.0 : 0.0) +
                    lambda * (s[i] - batch.cg_scores[i]) / reg_denom;
        const auto& f = batch.features[i];
        for (std::size_t j = 0; j < d; ++j) out.grad[j] += ds * f[j];
        out.grad[d] += ds;
    }

    if (!std::isfinite(out.loss))
        throw NumericError("non-finite loss value");
    for (double g : out.grad)
        if (!std::isfinite(g)) throw NumericError("non-finite gradient component");
    return out;
}

namespace {

std::map<std::string, CandidateList> rerank_all(
    const ScorerParams& params, const Dataset& ds,
    const std::map<std::string, CandidateList>& cands, const KnowledgeBase& kb,
    const std::map<std::string, std::string>& type_to_group) {
    std::map<std::string, CandidateList> out;
    for (const auto& [split, docs] : ds.splits)
        for (const auto& doc : docs)
            for (const auto& m : doc.mentions) {
                auto it = cands.find(m.id);
                if (it == cands.end()) continue;
                out[m.id] = rerank(params, it->second, m, kb, type_to_group);
            }
    return out;
}

double validation_f1(const ScorerParams& params, const Dataset& val,
                     const std::map<std::string, CandidateList>& val_cands,
                     const KnowledgeBase& kb,
                     const std::map<std::string, std::string>& type_to_group) {
    Predictions pred;
    pred.docs = val;
    pred.candidates = rerank_all(params, val, val_cands, kb, type_to_group);
    return evaluate(val, pred, {1}).f1_at_1;
}

}  // namespace

TrainResult train_reranker(const Dataset& train,
                           const std::map<std::string, CandidateList>& train_cands,
                           const Dataset& val,
                           const std::map<std::string, CandidateList>& val_cands,
                           const KnowledgeBase& kb,
                           const std::map<std::string, std::string>& type_to_group,
                           const RerankerConfig& cfg) {
    if (cfg.k < 2) throw ConfigError("k must be >= 2");
    std::vector<TrainingBatch> batches;
    for (const auto& [split, docs] : train.splits) {
        for (const auto& doc : docs) {
            for (const auto& m : doc.mentions) {
                if (m.gold_concepts.empty()) continue;
                auto it = train_cands.find(m.id);
                if (it == train_cands.end())
                    throw ConsistencyError("training mention " + m.id +
                                           " has no candidate list");
                // One batch per gold concept.
                for (const auto& ref : m.gold_concepts)
                    batches.push_back(
                        build_batch(m, it->second, ref.db_id, cfg.k, kb, type_to_group));
            }
        }
    }
    if (batches.empty()) throw ConfigError("empty training set");

    ScorerParams params = initial_params();
    TrainResult result;
    result.params = params;
    result.report.best_epoch = -1;
    result.report.best_validation_f1 =
        validation_f1(params, val, val_cands, kb, type_to_group);

    std::vector<std::size_t> order(batches.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    SplitMix64 rng(cfg.seed);
    const std::size_t d = params.weights.size();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        deterministic_shuffle(order, rng);
        double loss_sum = 0.0, reg_sum = 0.0;
        for (std::size_t idx : order) {
            LossGrad lg = loss_and_grad(params, batches[idx], cfg.lambda);
            loss_sum += lg.loss;
            reg_sum += lg.regularizer;
            for (std::size_t j = 0; j < d; ++j)
                params.weights[j] -= cfg.learning_rate * lg.grad[j];
            params.bias -= cfg.learning_rate * lg.grad[d];
        }
        EpochStats stats;
        stats.epoch = epoch;
        stats.mean_loss = loss_sum / static_cast<double>(batches.size());
        stats.mean_regularizer = reg_sum / static_cast<double>(batches.size());
        stats.validation_f1 = validation_f1(params, val, val_cands, kb, type_to_group);
        result.report.epochs.push_back(stats);
        if (stats.validation_f1 > result.report.best_validation_f1) {
            result.report.best_validation_f1 = stats.validation_f1;
            result.report.best_epoch = epoch;
            result.params = params;
        }
    }
    return result;
}

CandidateList rerank(const ScorerParams& params, const CandidateList& cl,
                     const Mention& mention, const KnowledgeBase& kb,
                     const std::map<std::string, std::string>& type_to_group) {
    TrainingBatch batch = build_batch(
        mention, cl, "", static_cast<int>(cl.candidates.size()) + 2, kb, type_to_group);
    std::vector<double> s = score_candidates(params, batch);

    std::vector<std::size_t> order(batch.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (s[a] != s[b]) return s[a] > s[b];
        return batch.concept_ids[a] < batch.concept_ids[b];
    });

    CandidateList out;
    out.mention_id = cl.mention_id.empty() ? mention.id : cl.mention_id;
    out.abstain = order.front() == batch.nil_index;
    for (std::size_t i : order) {
        if (i == batch.nil_index) continue;
        CandidateSource source = i < cl.candidates.size() ? cl.candidates[i].source
                                                          : CandidateSource::ensemble;
        out.candidates.push_back({batch.concept_ids[i], s[i], source});
    }
    return out;
}

namespace {

std::string fnv_digest(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json report_to_json(const TrainReport& report) {
    json j;
    j["best_epoch"] = report.best_epoch;
    j["best_validation_f1"] = report.best_validation_f1;
    j["epochs"] = json::array();
    for (const auto& e : report.epochs)
        j["epochs"].push_back({{"epoch", e.epoch},
                               {"mean_loss", e.mean_loss},
                               {"mean_regularizer", e.mean_regularizer},
                               {"validation_f1", e.validation_f1}});
    return j;
}

}  // namespace

void save_model(const ScorerParams& params, const RerankerConfig& cfg,
                const TrainReport& report, const std::string& kb_hash,
                const std::string& path) {
    json j;
    j["feature_version"] = params.feature_version;
    j["weights"] = params.weights;
    j["bias"] = params.bias;
    j["config"] = {{"k", cfg.k},           {"lambda", cfg.lambda},
                   {"learning_rate", cfg.learning_rate},
                   {"epochs", cfg.epochs}, {"ctx_len", cfg.ctx_len},
                   {"seed", cfg.seed}};
    j["kb_hash"] = kb_hash;
    json jr = report_to_json(report);
    j["train_report"] = jr;
    j["train_report_digest"] = fnv_digest(jr.dump());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write model file " + path);
    out << j.dump(2) << '\n';
}

LoadedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ParseError("malformed model file " + path + ": " + e.what());
    }
    LoadedModel m;
    m.params.feature_version = j.value("feature_version", "");
    if (m.params.feature_version != kFeatureVersion)
        throw ConsistencyError("feature-version mismatch in " + path + ": '" +
                               m.params.feature_version + "' vs '" + kFeatureVersion + "'");
    m.params.weights = j.value("weights", std::vector<double>{});
    m.params.bias = j.value("bias", 0.0);
    if (m.params.weights.size() != feature_names().size())
        throw ConsistencyError("model weight count does not match feature set");
    if (j.contains("config")) {
        const auto& c = j["config"];
        m.config.k = c.value("k", 64);
        m.config.lambda = c.value("lambda", 1.0);
        m.config.learning_rate = c.value("learning_rate", 1e-2);
        m.config.epochs = c.value("epochs", 20);
        m.config.ctx_len = c.value("ctx_len", 128);
        m.config.seed = c.value("seed", std::uint64_t{42});
    }
    m.kb_hash = j.value("kb_hash", "");
    return m;
}

}  // namespace mednorm
