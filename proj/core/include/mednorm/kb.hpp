#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mednorm {

struct Alias {
    std::string value;
    std::string language;  // 2-letter code

    friend bool operator==(const Alias&, const Alias&) = default;
    friend auto operator<=>(const Alias&, const Alias&) = default;
};

struct Concept {
    std::string concept_id;
    std::string canonical_name;
    std::vector<std::string> semantic_types;
    std::vector<Alias> aliases;  // sorted by (language, value), includes canonical

    friend bool operator==(const Concept&, const Concept&) = default;
};

struct KnowledgeBase {
    std::string name;
    std::map<std::string, Concept> concepts;          // keyed by concept_id
    std::map<std::string, std::string> group_map;     // semantic_type -> group

    std::size_t alias_count() const;
    // Semantic groups of a concept via group_map; unmapped types are skipped.
    std::vector<std::string> groups_of(const Concept& c) const;
};

enum class KbSource { umls_rrf, jsonl };

struct KbConfig {
    std::string name;
    KbSource source = KbSource::jsonl;
    std::string meta_path;                      // umls_rrf: dir with MRCONSO/MRSTY
    std::string jsonl_path;                     // jsonl source
    std::vector<std::string> languages;         // 2-letter codes
    std::vector<std::string> semantic_groups;   // empty = keep all
    std::vector<std::string> source_vocabularies;  // empty = keep all (SAB filter)
    std::string group_map_path;                 // TSV type -> group; empty = builtin
    bool include_suppressed = false;
};

// Parses a YAML file with the documented key structure
// (name, dict.umls.lang / meta_path / semantic_groups / sabs, or
// dict.jsonl.path). Unknown keys are errors.
KbConfig load_kb_config(const std::string& yaml_path);

// Builds a KB from the configured source. Concepts are kept when at least
// one alias exists in a configured language and, if semantic groups are
// configured, at least one semantic type maps into them.
KnowledgeBase build_kb(const KbConfig& config);

KnowledgeBase load_kb(const std::string& jsonl_path);

// JSONL, one concept per line, sorted by concept_id; byte-deterministic.
std::string serialize_kb(const KnowledgeBase& kb);
void save_kb(const KnowledgeBase& kb, const std::string& path);

// FNV-1a 64 over the serialized KB; stages use it to detect mismatched
// KB/index/model combinations.
std::string kb_hash(const KnowledgeBase& kb);

struct AliasReport {
    std::size_t added = 0;
    std::size_t skipped = 0;
    std::vector<std::string> unknown_ids;
};

// Extends alias lists from a TSV of (concept_id, value, language) rows.
// Duplicates (case-insensitive per concept) are skipped; unknown ids are
// reported, never fatal.
KnowledgeBase add_alias_source(const KnowledgeBase& kb, const std::string& tsv_path,
                               AliasReport& report);

// Builtin semantic_type -> group table (UMLS semantic groups subset); used
// when KbConfig.group_map_path is empty.
std::map<std::string, std::string> default_group_map();
std::map<std::string, std::string> load_group_map(const std::string& tsv_path);

}  // namespace mednorm
