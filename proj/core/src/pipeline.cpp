#include "mednorm/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "mednorm/errors.hpp"

namespace mednorm {

using nlohmann::json;

std::map<std::string, std::vector<CandidateList>> generate_candidates(
    const Dataset& ds, const std::vector<GeneratorHandle>& generators, int k) {
    if (k < 1) throw ConfigError("k must be >= 1");
    std::set<std::string> hashes;
    for (const auto& g : generators)
        if (!g.kb_hash.empty()) hashes.insert(g.kb_hash);
    if (hashes.size() > 1)
        throw ConsistencyError("generators built against different KBs (kb_hash mismatch)");

    std::vector<std::string> mention_ids;
    std::vector<std::string> mention_texts;
    for (const auto& [split, docs] : ds.splits) {
        for (const auto& doc : docs) {
            for (const auto& m : doc.mentions) {
                mention_ids.push_back(m.id);
                mention_texts.push_back(m.text);
            }
        }
    }
    std::map<std::string, std::vector<CandidateList>> out;
    for (const auto& id : mention_ids) out[id];  // every mention gets an entry
    for (const auto& g : generators) {
        auto lists = g.query(mention_texts, k);
        if (lists.size() != mention_ids.size())
            throw ConsistencyError("generator '" + g.name +
                                   "' returned wrong number of lists");
        for (std::size_t i = 0; i < lists.size(); ++i) {
            lists[i].mention_id = mention_ids[i];
            out[mention_ids[i]].push_back(std::move(lists[i]));
        }
    }
    return out;
}

CandidateList ensemble_merge(const std::vector<CandidateList>& lists) {
    CandidateList merged;
    std::map<std::string, double> best;
    for (const auto& cl : lists) {
        if (merged.mention_id.empty()) merged.mention_id = cl.mention_id;
        if (!cl.mention_id.empty() && cl.mention_id != merged.mention_id)
            throw ConsistencyError("ensemble_merge over different mentions: '" +
                                   merged.mention_id + "' vs '" + cl.mention_id + "'");
        for (const auto& c : cl.candidates) {
            auto [it, inserted] = best.emplace(c.concept_id, c.score);
            if (!inserted && c.score > it->second) it->second = c.score;
        }
    }
    for (const auto& [id, score] : best)
        merged.candidates.push_back({id, score, CandidateSource::ensemble});
    sort_candidates(merged.candidates);
    return merged;
}

CandidateList filter_by_semantic_group(
    const CandidateList& cl, const std::string& mention_type, const KnowledgeBase& kb,
    const std::map<std::string, std::string>& type_to_group, FilterStats& stats) {
    auto git = type_to_group.find(mention_type);
    if (git == type_to_group.end()) {
        ++stats.unknown_type_warnings;
        return cl;
    }
    const std::string& group = git->second;
    CandidateList out;
    out.mention_id = cl.mention_id;
    out.abstain = cl.abstain;
    for (const auto& c : cl.candidates) {
        auto cit = kb.concepts.find(c.concept_id);
        bool keep = false;
        if (cit != kb.concepts.end()) {
            bool any_mapped = false;
            for (const auto& t : cit->second.semantic_types) {
                auto mit = kb.group_map.find(t);
                if (mit == kb.group_map.end()) continue;
                any_mapped = true;
                if (mit->second == group) {
                    keep = true;  // any-match over the concept's types
                    break;
                }
            }
            if (!any_mapped) {
                // No type of this concept is covered by the group map: keep
                // rather than over-filter, but record the gap.
                ++stats.unmapped_concept_types;
                keep = true;
            }
        }
        if (keep)
            out.candidates.push_back(c);
        else
            ++stats.removed;
    }
    return out;
}

std::string serialize_candidates(const std::vector<CandidateList>& lists) {
    std::string out;
    for (const auto& cl : lists) {
        json j;
        j["mention_id"] = cl.mention_id;
        j["candidates"] = json::array();
        for (const auto& c : cl.candidates)
            j["candidates"].push_back({{"concept_id", c.concept_id},
                                       {"score", c.score},
                                       {"source", to_string(c.source)}});
        if (cl.abstain) j["abstain"] = true;
        out += j.dump();
        out += '\n';
    }
    return out;
}

void save_candidates(const std::vector<CandidateList>& lists, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write candidate file " + path);
    out << serialize_candidates(lists);
}

std::vector<CandidateList> load_candidates(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open candidate file " + path);
    std::vector<CandidateList> lists;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("candidate file line " + std::to_string(lineno) + ": " +
                             e.what());
        }
        CandidateList cl;
        cl.mention_id = j.value("mention_id", "");
        if (cl.mention_id.empty())
            throw SchemaError("candidate file line " + std::to_string(lineno) +
                              ": missing mention_id");
        cl.abstain = j.value("abstain", false);
        for (const auto& jc : j.value("candidates", json::array())) {
            Candidate c;
            c.concept_id = jc.value("concept_id", "");
            c.score = jc.value("score", 0.0);
            c.source = candidate_source_from_string(jc.value("source", "sparse"));
            cl.candidates.push_back(std::move(c));
        }
        lists.push_back(std::move(cl));
    }
    return lists;
}

}  // namespace mednorm
