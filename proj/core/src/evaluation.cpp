#include "mednorm/evaluation.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mednorm/errors.hpp"
#include "mednorm/utf8.hpp"

namespace mednorm {

using nlohmann::json;

namespace {

// Location of a mention: split, document and exact span set.
using SpanKey = std::tuple<std::string, std::string, std::vector<Span>>;

struct GoldUnit {
    SpanKey key;
    std::string concept_id;
    std::string mention_text;
};

std::vector<GoldUnit> collect_gold_units(const Dataset& gold) {
    std::vector<GoldUnit> units;
    for (const auto& [split, docs] : gold.splits)
        for (const auto& doc : docs)
            for (const auto& m : doc.mentions)
                for (const auto& ref : m.gold_concepts)
                    units.push_back({{split, doc.id, m.spans}, ref.db_id, m.text});
    return units;
}

// Concept id -> 1-based rank among predicted mentions at this location.
// Abstaining lists rank NIL first, pushing everything down one.
std::map<std::string, int> best_ranks_at(
    const std::map<SpanKey, std::vector<const CandidateList*>>& by_span,
    const SpanKey& key) {
    std::map<std::string, int> ranks;
    auto it = by_span.find(key);
    if (it == by_span.end()) return ranks;
    for (const CandidateList* cl : it->second) {
        int offset = cl->abstain ? 2 : 1;
        for (std::size_t i = 0; i < cl->candidates.size(); ++i) {
            int rank = static_cast<int>(i) + offset;
            auto [rit, inserted] = ranks.emplace(cl->candidates[i].concept_id, rank);
            if (!inserted && rank < rit->second) rit->second = rank;
        }
    }
    return ranks;
}

std::size_t token_length(const std::string& text) {
    std::istringstream ss(text);
    std::string tok;
    std::size_t n = 0;
    while (ss >> tok) ++n;
    return n;
}

}  // namespace

EvalReport evaluate(const Dataset& gold, const Predictions& predicted,
                    const std::vector<int>& ks) {
    for (const auto& [split, docs] : gold.splits) {
        auto pit = predicted.docs.splits.find(split);
        if (pit == predicted.docs.splits.end())
            throw ConsistencyError("predicted dataset has no split '" + split + "'");
        std::set<std::string> gold_ids, pred_ids;
        for (const auto& d : docs) gold_ids.insert(d.id);
        for (const auto& d : pit->second) pred_ids.insert(d.id);
        if (gold_ids != pred_ids)
            throw ConsistencyError("document ids differ in split '" + split + "'");
    }

    std::map<SpanKey, std::vector<const CandidateList*>> by_span;
    std::vector<std::pair<SpanKey, std::string>> predicted_pairs;  // top-1 per mention
    for (const auto& [split, docs] : predicted.docs.splits) {
        for (const auto& doc : docs) {
            for (const auto& m : doc.mentions) {
                auto cit = predicted.candidates.find(m.id);
                if (cit == predicted.candidates.end()) continue;
                const CandidateList& cl = cit->second;
                SpanKey key{split, doc.id, m.spans};
                by_span[key].push_back(&cl);
                if (!cl.abstain && !cl.candidates.empty())
                    predicted_pairs.emplace_back(key, cl.candidates.front().concept_id);
            }
        }
    }

    auto units = collect_gold_units(gold);

    EvalReport report;
    report.gold_pairs = units.size();
    report.predicted_pairs = predicted_pairs.size();

    std::vector<int> all_ks = ks;
    if (std::find(all_ks.begin(), all_ks.end(), 1) == all_ks.end()) all_ks.push_back(1);
    std::sort(all_ks.begin(), all_ks.end());

    std::map<int, std::size_t> tp_at_k;
    for (const auto& unit : units) {
        auto ranks = best_ranks_at(by_span, unit.key);
        auto rit = ranks.find(unit.concept_id);
        if (rit == ranks.end()) continue;
        for (int k : all_ks)
            if (rit->second <= k) ++tp_at_k[k];
    }
    report.true_positives = tp_at_k[1];

    // Precision counts predicted (span, top-1) pairs that hit some gold unit.
    std::set<std::pair<SpanKey, std::string>> gold_keys;
    for (const auto& unit : units) gold_keys.insert({unit.key, unit.concept_id});
    std::size_t tp_predicted = 0;
    for (const auto& pair : predicted_pairs)
        if (gold_keys.count(pair)) ++tp_predicted;

    report.recall_at_1 = units.empty() ? 0.0
                                       : static_cast<double>(tp_at_k[1]) /
                                             static_cast<double>(units.size());
    report.precision_at_1 = predicted_pairs.empty()
                                ? 0.0
                                : static_cast<double>(tp_predicted) /
                                      static_cast<double>(predicted_pairs.size());
    double p = report.precision_at_1, r = report.recall_at_1;
    report.f1_at_1 = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    for (int k : all_ks)
        report.recall_at_k[k] = units.empty() ? 0.0
                                              : static_cast<double>(tp_at_k[k]) /
                                                    static_cast<double>(units.size());
    return report;
}

void error_breakdown(const Dataset& gold, const Predictions& predicted,
                     const KnowledgeBase& kb, EvalReport& report) {
    std::map<SpanKey, std::vector<const CandidateList*>> by_span;
    for (const auto& [split, docs] : predicted.docs.splits)
        for (const auto& doc : docs)
            for (const auto& m : doc.mentions) {
                auto cit = predicted.candidates.find(m.id);
                if (cit != predicted.candidates.end())
                    by_span[{split, doc.id, m.spans}].push_back(&cit->second);
            }

    report.by_mention_length.clear();
    report.by_shared_aliases.clear();
    for (const auto& unit : collect_gold_units(gold)) {
        auto ranks = best_ranks_at(by_span, unit.key);
        auto rit = ranks.find(unit.concept_id);
        bool tp1 = rit != ranks.end() && rit->second <= 1;

        auto& len_row = report.by_mention_length[token_length(unit.mention_text)];
        ++len_row.gold_units;
        if (tp1) ++len_row.true_positives;

        std::size_t max_shared = 0;
        auto git = kb.concepts.find(unit.concept_id);
        if (git != kb.concepts.end()) {
            std::set<std::string> gold_aliases;
            for (const auto& a : git->second.aliases)
                gold_aliases.insert(utf8::to_lower(a.value));
            auto sit = by_span.find(unit.key);
            if (sit != by_span.end()) {
                for (const CandidateList* cl : sit->second) {
                    for (const auto& c : cl->candidates) {
                        auto cit = kb.concepts.find(c.concept_id);
                        if (cit == kb.concepts.end()) continue;
                        std::size_t shared = 0;
                        for (const auto& a : cit->second.aliases)
                            if (gold_aliases.count(utf8::to_lower(a.value))) ++shared;
                        max_shared = std::max(max_shared, shared);
                    }
                }
            }
        }
        auto& alias_row = report.by_shared_aliases[max_shared];
        ++alias_row.gold_units;
        if (tp1) ++alias_row.true_positives;
    }
}

std::string EvalReport::to_json() const {
    json j;
    j["precision_at_1"] = precision_at_1;
    j["recall_at_1"] = recall_at_1;
    j["f1_at_1"] = f1_at_1;
    json rk = json::object();
    for (const auto& [k, v] : recall_at_k) rk[std::to_string(k)] = v;
    j["recall_at_k"] = rk;
    j["counts"] = {{"gold_pairs", gold_pairs},
                   {"predicted_pairs", predicted_pairs},
                   {"true_positives", true_positives}};
    json bl = json::object(), ba = json::object();
    for (const auto& [len, row] : by_mention_length)
        bl[std::to_string(len)] = {{"gold_units", row.gold_units},
                                   {"true_positives", row.true_positives}};
    for (const auto& [n, row] : by_shared_aliases)
        ba[std::to_string(n)] = {{"gold_units", row.gold_units},
                                 {"true_positives", row.true_positives}};
    j["breakdowns"] = {{"by_mention_length", bl}, {"by_shared_aliases", ba}};
    return j.dump(2);
}

std::string EvalReport::to_table() const {
    std::ostringstream out;
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-18s %8s\n", "metric", "value");
    out << buf;
    auto line = [&](const std::string& name, double v) {
        std::snprintf(buf, sizeof buf, "%-18s %8.4f\n", name.c_str(), v);
        out << buf;
    };
    line("precision@1", precision_at_1);
    line("recall@1", recall_at_1);
    line("f1@1", f1_at_1);
    for (const auto& [k, v] : recall_at_k) line("recall@" + std::to_string(k), v);
    std::snprintf(buf, sizeof buf, "%-18s %8zu\n", "gold_pairs", gold_pairs);
    out << buf;
    std::snprintf(buf, sizeof buf, "%-18s %8zu\n", "predicted_pairs", predicted_pairs);
    out << buf;
    std::snprintf(buf, sizeof buf, "%-18s %8zu\n", "true_positives", true_positives);
    out << buf;
    if (!by_mention_length.empty()) {
        out << "\ntrue positives@1 by mention token length\n";
        for (const auto& [len, row] : by_mention_length) {
            std::snprintf(buf, sizeof buf, "  len=%-3zu %6zu / %zu\n", len,
                          row.true_positives, row.gold_units);
            out << buf;
        }
    }
    if (!by_shared_aliases.empty()) {
        out << "\ntrue positives@1 by max shared aliases\n";
        for (const auto& [n, row] : by_shared_aliases) {
            std::snprintf(buf, sizeof buf, "  shared=%-3zu %6zu / %zu\n", n,
                          row.true_positives, row.gold_units);
            out << buf;
        }
    }
    return out.str();
}

}  // namespace mednorm
