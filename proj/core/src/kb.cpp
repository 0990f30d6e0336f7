#include "mednorm/kb.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "mednorm/errors.hpp"
#include "mednorm/utf8.hpp"

namespace mednorm {

using nlohmann::json;

std::size_t KnowledgeBase::alias_count() const {
    std::size_t n = 0;
    for (const auto& [id, c] : concepts) n += c.aliases.size();
    return n;
}

std::vector<std::string> KnowledgeBase::groups_of(const Concept& c) const {
    std::vector<std::string> out;
    for (const auto& t : c.semantic_types) {
        auto it = group_map.find(t);
        if (it != group_map.end() &&
            std::find(out.begin(), out.end(), it->second) == out.end())
            out.push_back(it->second);
    }
    return out;
}

namespace {

// UMLS semantic groups table (TUI -> group), restricted to the groups used
// by the shipped configurations. Override via a TSV for full coverage.
constexpr std::pair<const char*, const char*> kDefaultGroups[] = {
    // ANAT
    {"T017", "ANAT"}, {"T029", "ANAT"}, {"T023", "ANAT"}, {"T030", "ANAT"},
    {"T031", "ANAT"}, {"T022", "ANAT"}, {"T025", "ANAT"}, {"T026", "ANAT"},
    {"T018", "ANAT"}, {"T021", "ANAT"}, {"T024", "ANAT"},
    // CHEM
    {"T116", "CHEM"}, {"T195", "CHEM"}, {"T123", "CHEM"}, {"T122", "CHEM"},
    {"T103", "CHEM"}, {"T120", "CHEM"}, {"T104", "CHEM"}, {"T200", "CHEM"},
    {"T196", "CHEM"}, {"T126", "CHEM"}, {"T131", "CHEM"}, {"T125", "CHEM"},
    {"T129", "CHEM"}, {"T130", "CHEM"}, {"T197", "CHEM"}, {"T114", "CHEM"},
    {"T109", "CHEM"}, {"T121", "CHEM"}, {"T192", "CHEM"}, {"T127", "CHEM"},
    // DEVI
    {"T203", "DEVI"}, {"T074", "DEVI"}, {"T075", "DEVI"},
    // DISO
    {"T020", "DISO"}, {"T190", "DISO"}, {"T049", "DISO"}, {"T019", "DISO"},
    {"T047", "DISO"}, {"T050", "DISO"}, {"T033", "DISO"}, {"T037", "DISO"},
    {"T048", "DISO"}, {"T191", "DISO"}, {"T046", "DISO"}, {"T184", "DISO"},
    // GEOG
    {"T083", "GEOG"},
    // LIVB
    {"T100", "LIVB"}, {"T011", "LIVB"}, {"T008", "LIVB"}, {"T194", "LIVB"},
    {"T007", "LIVB"}, {"T012", "LIVB"}, {"T204", "LIVB"}, {"T099", "LIVB"},
    {"T013", "LIVB"}, {"T004", "LIVB"}, {"T096", "LIVB"}, {"T016", "LIVB"},
    {"T015", "LIVB"}, {"T001", "LIVB"}, {"T101", "LIVB"}, {"T002", "LIVB"},
    {"T098", "LIVB"}, {"T097", "LIVB"}, {"T014", "LIVB"}, {"T005", "LIVB"},
    // OBJC
    {"T071", "OBJC"}, {"T168", "OBJC"}, {"T073", "OBJC"}, {"T072", "OBJC"},
    {"T167", "OBJC"},
    // PHEN
    {"T038", "PHEN"}, {"T069", "PHEN"}, {"T068", "PHEN"}, {"T034", "PHEN"},
    {"T070", "PHEN"}, {"T067", "PHEN"},
    // PHYS
    {"T043", "PHYS"}, {"T201", "PHYS"}, {"T045", "PHYS"}, {"T041", "PHYS"},
    {"T044", "PHYS"}, {"T032", "PHYS"}, {"T040", "PHYS"}, {"T042", "PHYS"},
    {"T039", "PHYS"},
    // PROC
    {"T060", "PROC"}, {"T065", "PROC"}, {"T058", "PROC"}, {"T059", "PROC"},
    {"T063", "PROC"}, {"T062", "PROC"}, {"T061", "PROC"},
};

// ISO 639-1 -> UMLS MRCONSO LAT code.
const std::map<std::string, std::string>& lat_codes() {
    static const std::map<std::string, std::string> m = {
        {"en", "ENG"}, {"fr", "FRE"}, {"de", "GER"}, {"es", "SPA"},
        {"nl", "DUT"}, {"it", "ITA"}, {"pt", "POR"}, {"ru", "RUS"},
        {"ja", "JPN"}, {"cs", "CZE"}, {"hu", "HUN"}, {"pl", "POL"},
        {"sv", "SWE"}, {"fi", "FIN"}, {"no", "NOR"}, {"da", "DAN"},
        {"tr", "TUR"}, {"ko", "KOR"}, {"zh", "CHI"}, {"eu", "BAQ"},
        {"lv", "LAV"}, {"el", "GRE"}, {"hr", "SCR"}, {"uk", "UKR"},
        {"he", "HEB"}, {"ar", "ARA"}, {"et", "EST"},
    };
    return m;
}

std::vector<std::string> split_pipe(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == '|') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

void sort_and_dedup_aliases(Concept& c) {
    std::sort(c.aliases.begin(), c.aliases.end(),
              [](const Alias& a, const Alias& b) {
                  return std::tie(a.language, a.value) < std::tie(b.language, b.value);
              });
    c.aliases.erase(std::unique(c.aliases.begin(), c.aliases.end()), c.aliases.end());
}

std::vector<std::string> yaml_string_list(const YAML::Node& node) {
    std::vector<std::string> out;
    if (!node) return out;
    if (node.IsScalar()) {
        out.push_back(node.as<std::string>());
        return out;
    }
    for (const auto& item : node) out.push_back(item.as<std::string>());
    return out;
}

void check_keys(const YAML::Node& node, const std::set<std::string>& allowed,
                const std::string& where) {
    for (const auto& kv : node) {
        auto key = kv.first.as<std::string>();
        if (!allowed.count(key))
            throw ConfigError("unknown key '" + key + "' under " + where);
    }
}

KnowledgeBase build_kb_from_rrf(const KbConfig& config,
                                const std::map<std::string, std::string>& gmap) {
    std::string conso_path = config.meta_path + "/MRCONSO.RRF";
    std::string sty_path = config.meta_path + "/MRSTY.RRF";
    std::ifstream sty(sty_path);
    if (!sty) throw IoError("cannot open " + sty_path);
    std::map<std::string, std::vector<std::string>> cui_types;
    std::string line;
    std::size_t row = 0;
    while (std::getline(sty, line)) {
        ++row;
        if (line.empty()) continue;
        auto f = split_pipe(line);
        if (f.size() < 2)
            throw ParseError("malformed MRSTY row " + std::to_string(row));
        auto& types = cui_types[f[0]];
        if (std::find(types.begin(), types.end(), f[1]) == types.end())
            types.push_back(f[1]);
    }

    std::set<std::string> wanted_lats;
    for (const auto& lang : config.languages) {
        auto it = lat_codes().find(lang);
        if (it == lat_codes().end())
            throw ConfigError("unknown language code '" + lang + "'");
        wanted_lats.insert(it->second);
    }
    std::map<std::string, std::string> lat_to_lang;
    for (const auto& [l2, lat] : lat_codes()) lat_to_lang[lat] = l2;
    std::set<std::string> wanted_sabs(config.source_vocabularies.begin(),
                                      config.source_vocabularies.end());
    std::set<std::string> wanted_groups(config.semantic_groups.begin(),
                                        config.semantic_groups.end());

    std::ifstream conso(conso_path);
    if (!conso) throw IoError("cannot open " + conso_path);
    KnowledgeBase kb;
    kb.name = config.name;
    kb.group_map = gmap;
    std::map<std::string, std::string> preferred;  // cui -> preferred term
    row = 0;
    while (std::getline(conso, line)) {
        ++row;
        if (line.empty()) continue;
        auto f = split_pipe(line);
        if (f.size() < 17)
            throw ParseError("malformed MRCONSO row " + std::to_string(row));
        const std::string& cui = f[0];
        const std::string& lat = f[1];
        const std::string& str = f[14];
        const std::string& suppress = f[16];
        if (!wanted_lats.empty() && !wanted_lats.count(lat)) continue;
        if (!wanted_sabs.empty() && !wanted_sabs.count(f[11])) continue;
        if (!config.include_suppressed && suppress != "N" && !suppress.empty()) continue;
        if (str.empty()) continue;
        if (!wanted_groups.empty()) {
            auto tit = cui_types.find(cui);
            bool in_group = false;
            if (tit != cui_types.end()) {
                for (const auto& t : tit->second) {
                    auto git = gmap.find(t);
                    if (git != gmap.end() && wanted_groups.count(git->second)) {
                        in_group = true;
                        break;
                    }
                }
            }
            if (!in_group) continue;
        }
        auto& c = kb.concepts[cui];
        if (c.concept_id.empty()) {
            c.concept_id = cui;
            auto tit = cui_types.find(cui);
            if (tit != cui_types.end()) {
                c.semantic_types = tit->second;
                std::sort(c.semantic_types.begin(), c.semantic_types.end());
            }
        }
        c.aliases.push_back({str, lat_to_lang.at(lat)});
        // TS=P, STT=PF, ISPREF=Y marks the preferred term of the concept.
        if (f[2] == "P" && f[4] == "PF" && f[6] == "Y" && !preferred.count(cui))
            preferred[cui] = str;
    }
    if (kb.concepts.empty())
        throw ConfigError("KB build produced no concepts (check languages/groups)");
    for (auto& [cui, c] : kb.concepts) {
        sort_and_dedup_aliases(c);
        auto pit = preferred.find(cui);
        c.canonical_name = pit != preferred.end() ? pit->second : c.aliases.front().value;
    }
    return kb;
}

Concept parse_concept_line(const std::string& line, std::size_t lineno) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError("KB line " + std::to_string(lineno) + ": " + e.what());
    }
    Concept c;
    if (!j.contains("concept_id"))
        throw SchemaError("KB line " + std::to_string(lineno) + ": missing concept_id");
    c.concept_id = j["concept_id"].get<std::string>();
    c.canonical_name = j.value("canonical_name", "");
    for (const auto& t : j.value("semantic_types", json::array()))
        c.semantic_types.push_back(t.get<std::string>());
    for (const auto& a : j.value("aliases", json::array())) {
        Alias alias{a.value("value", ""), a.value("language", "")};
        if (alias.value.empty())
            throw SchemaError("KB line " + std::to_string(lineno) + ": empty alias value");
        c.aliases.push_back(std::move(alias));
    }
    if (c.aliases.empty())
        throw SchemaError("KB line " + std::to_string(lineno) + ": concept " +
                          c.concept_id + " has no aliases");
    if (c.canonical_name.empty()) c.canonical_name = c.aliases.front().value;
    bool canonical_listed = false;
    for (const auto& a : c.aliases)
        if (a.value == c.canonical_name) canonical_listed = true;
    if (!canonical_listed) c.aliases.push_back({c.canonical_name, "en"});
    sort_and_dedup_aliases(c);
    return c;
}

}  // namespace

std::map<std::string, std::string> default_group_map() {
    std::map<std::string, std::string> m;
    for (const auto& [t, g] : kDefaultGroups) m[t] = g;
    return m;
}

std::map<std::string, std::string> load_group_map(const std::string& tsv_path) {
    std::ifstream in(tsv_path);
    if (!in) throw IoError("cannot open group map " + tsv_path);
    std::map<std::string, std::string> m;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw ParseError("group map line " + std::to_string(lineno) +
                             ": expected 'type<TAB>group'");
        m[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return m;
}

KbConfig load_kb_config(const std::string& yaml_path) {
    YAML::Node root;
    try {
        root = YAML::LoadFile(yaml_path);
    } catch (const YAML::Exception& e) {
        throw ConfigError("cannot parse " + yaml_path + ": " + e.what());
    }
    check_keys(root, {"name", "dict"}, "config root");
    KbConfig cfg;
    if (!root["name"]) throw ConfigError("missing 'name'");
    cfg.name = root["name"].as<std::string>();
    const auto& dict = root["dict"];
    if (!dict) throw ConfigError("missing 'dict' section");
    check_keys(dict, {"umls", "jsonl"}, "dict");
    if (dict["umls"]) {
        const auto& u = dict["umls"];
        check_keys(u,
                   {"lang", "meta_path", "semantic_groups", "sabs",
                    "semantic_group_map", "include_suppressed"},
                   "dict.umls");
        cfg.source = KbSource::umls_rrf;
        cfg.languages = yaml_string_list(u["lang"]);
        if (!u["meta_path"]) throw ConfigError("dict.umls requires meta_path");
        cfg.meta_path = u["meta_path"].as<std::string>();
        cfg.semantic_groups = yaml_string_list(u["semantic_groups"]);
        cfg.source_vocabularies = yaml_string_list(u["sabs"]);
        if (u["semantic_group_map"])
            cfg.group_map_path = u["semantic_group_map"].as<std::string>();
        if (u["include_suppressed"])
            cfg.include_suppressed = u["include_suppressed"].as<bool>();
    } else if (dict["jsonl"]) {
        const auto& d = dict["jsonl"];
        check_keys(d, {"path", "lang", "semantic_groups", "semantic_group_map"},
                   "dict.jsonl");
        cfg.source = KbSource::jsonl;
        if (!d["path"]) throw ConfigError("dict.jsonl requires path");
        cfg.jsonl_path = d["path"].as<std::string>();
        cfg.languages = yaml_string_list(d["lang"]);
        cfg.semantic_groups = yaml_string_list(d["semantic_groups"]);
        if (d["semantic_group_map"])
            cfg.group_map_path = d["semantic_group_map"].as<std::string>();
    } else {
        throw ConfigError("dict section must contain 'umls' or 'jsonl'");
    }
    return cfg;
}

KnowledgeBase build_kb(const KbConfig& config) {
    auto gmap = config.group_map_path.empty() ? default_group_map()
                                              : load_group_map(config.group_map_path);
    if (config.source == KbSource::umls_rrf) {
        if (config.meta_path.empty())
            throw ConfigError("umls_rrf source requires meta_path");
        return build_kb_from_rrf(config, gmap);
    }
    KnowledgeBase kb = load_kb(config.jsonl_path);
    kb.name = config.name;
    kb.group_map = gmap;
    if (!config.languages.empty() || !config.semantic_groups.empty()) {
        std::set<std::string> langs(config.languages.begin(), config.languages.end());
        std::set<std::string> groups(config.semantic_groups.begin(),
                                     config.semantic_groups.end());
        KnowledgeBase filtered;
        filtered.name = kb.name;
        filtered.group_map = kb.group_map;
        for (const auto& [id, c] : kb.concepts) {
            Concept kept = c;
            if (!langs.empty()) {
                kept.aliases.erase(
                    std::remove_if(kept.aliases.begin(), kept.aliases.end(),
                                   [&](const Alias& a) { return !langs.count(a.language); }),
                    kept.aliases.end());
                if (kept.aliases.empty()) continue;
                bool canonical_listed = false;
                for (const auto& a : kept.aliases)
                    if (a.value == kept.canonical_name) canonical_listed = true;
                if (!canonical_listed) kept.canonical_name = kept.aliases.front().value;
            }
            if (!groups.empty()) {
                bool in_group = false;
                for (const auto& g : kb.groups_of(c))
                    if (groups.count(g)) in_group = true;
                if (!in_group) continue;
            }
            filtered.concepts[id] = std::move(kept);
        }
        if (filtered.concepts.empty())
            throw ConfigError("KB build produced no concepts (check languages/groups)");
        kb = std::move(filtered);
    }
    return kb;
}

KnowledgeBase load_kb(const std::string& jsonl_path) {
    std::ifstream in(jsonl_path);
    if (!in) throw IoError("cannot open KB file " + jsonl_path);
    KnowledgeBase kb;
    kb.group_map = default_group_map();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        Concept c = parse_concept_line(line, lineno);
        if (kb.concepts.count(c.concept_id))
            throw SchemaError("duplicate concept_id " + c.concept_id + " at line " +
                              std::to_string(lineno));
        kb.concepts[c.concept_id] = std::move(c);
    }
    if (kb.concepts.empty())
        throw ConfigError("KB file " + jsonl_path + " contains no concepts");
    return kb;
}

std::string serialize_kb(const KnowledgeBase& kb) {
    std::string out;
    for (const auto& [id, c] : kb.concepts) {
        json j;
        j["concept_id"] = c.concept_id;
        j["canonical_name"] = c.canonical_name;
        j["semantic_types"] = c.semantic_types;
        j["aliases"] = json::array();
        for (const auto& a : c.aliases)
            j["aliases"].push_back({{"language", a.language}, {"value", a.value}});
        out += j.dump();
        out += '\n';
    }
    return out;
}

void save_kb(const KnowledgeBase& kb, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write KB file " + path);
    out << serialize_kb(kb);
}

std::string kb_hash(const KnowledgeBase& kb) {
    std::string bytes = serialize_kb(kb);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

KnowledgeBase add_alias_source(const KnowledgeBase& kb, const std::string& tsv_path,
                               AliasReport& report) {
    std::ifstream in(tsv_path);
    if (!in) throw IoError("cannot open alias file " + tsv_path);
    KnowledgeBase out = kb;
    std::string line;
    std::size_t lineno = 0;
    std::set<std::string> unknown;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, '\t')) f.push_back(field);
        if (f.size() < 3)
            throw ParseError("alias file line " + std::to_string(lineno) +
                             ": expected concept_id<TAB>value<TAB>language");
        auto it = out.concepts.find(f[0]);
        if (it == out.concepts.end()) {
            unknown.insert(f[0]);
            continue;
        }
        std::string lowered = utf8::to_lower(f[1]);
        bool present = false;
        for (const auto& a : it->second.aliases)
            if (utf8::to_lower(a.value) == lowered) present = true;
        if (present) {
            ++report.skipped;
        } else {
            it->second.aliases.push_back({f[1], f[2]});
            sort_and_dedup_aliases(it->second);
            ++report.added;
        }
    }
    report.unknown_ids.assign(unknown.begin(), unknown.end());
    return out;
}

}  // namespace mednorm
