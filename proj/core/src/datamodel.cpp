#include "mednorm/datamodel.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "mednorm/errors.hpp"
#include "mednorm/utf8.hpp"

namespace mednorm {

using nlohmann::json;

std::string Document::full_text() const {
    std::size_t total = 0;
    for (const auto& p : passages)
        total = std::max(total, p.offset + utf8::length(p.text));
    std::vector<char32_t> buf(total, U' ');
    for (const auto& p : passages) {
        auto cps = utf8::decode(p.text);
        std::copy(cps.begin(), cps.end(), buf.begin() + static_cast<long>(p.offset));
    }
    return utf8::encode(buf);
}

std::size_t Dataset::mention_count() const {
    std::size_t n = 0;
    for (const auto& [name, docs] : splits)
        for (const auto& d : docs) n += d.mentions.size();
    return n;
}

namespace {

std::string mention_text_from_spans(const std::string& full,
                                    const std::vector<Span>& spans) {
    std::string out;
    for (std::size_t i = 0; i < spans.size(); ++i) {
        if (i) out += ' ';
        out += utf8::substr(full, spans[i].start, spans[i].end);
    }
    return out;
}

const json& require(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw SchemaError("missing field '" + std::string(key) + "' in " + where);
    return *it;
}

Document parse_document(const json& jd) {
    Document doc;
    doc.id = require(jd, "id", "document").get<std::string>();
    for (const auto& jp : require(jd, "passages", "document " + doc.id)) {
        Passage p;
        p.id = require(jp, "id", "passage of " + doc.id).get<std::string>();
        p.text = require(jp, "text", "passage of " + doc.id).get<std::string>();
        p.offset = require(jp, "offset", "passage of " + doc.id).get<std::size_t>();
        doc.passages.push_back(std::move(p));
    }
    if (jd.contains("entities")) {
        for (const auto& je : jd["entities"]) {
            Mention m;
            m.id = require(je, "id", "entity of " + doc.id).get<std::string>();
            for (const auto& jo : require(je, "offsets", "entity " + m.id)) {
                if (!jo.is_array() || jo.size() != 2)
                    throw SchemaError("offsets must be [start,end] pairs in entity " + m.id);
                m.spans.push_back({jo[0].get<std::size_t>(), jo[1].get<std::size_t>()});
            }
            m.text = require(je, "text", "entity " + m.id).get<std::string>();
            if (je.contains("type") && !je["type"].is_null())
                m.entity_type = je["type"].get<std::string>();
            if (je.contains("normalized")) {
                for (const auto& jn : je["normalized"]) {
                    ConceptRef ref;
                    ref.db_name = jn.value("db_name", "");
                    ref.db_id = require(jn, "db_id", "entity " + m.id).get<std::string>();
                    if (ref.db_id.empty())
                        throw SchemaError("empty db_id in entity " + m.id);
                    m.gold_concepts.push_back(std::move(ref));
                }
            }
            if (je.contains("long_form") && !je["long_form"].is_null())
                m.long_form = je["long_form"].get<std::string>();
            doc.mentions.push_back(std::move(m));
        }
    }
    return doc;
}

void check_document(const Document& doc) {
    std::size_t prev_end = 0;
    bool first = true;
    for (const auto& p : doc.passages) {
        if (!first && p.offset < prev_end)
            throw SpanError("overlapping or non-ascending passages in document " + doc.id);
        prev_end = p.offset + utf8::length(p.text);
        first = false;
    }
    std::string full = doc.full_text();
    std::size_t full_len = utf8::length(full);
    for (const auto& m : doc.mentions) {
        for (const auto& s : m.spans) {
            if (s.start >= s.end)
                throw SpanError("empty or inverted span in mention " + m.id);
            if (s.end > full_len)
                throw SpanError("span beyond text in document " + doc.id +
                                ", mention " + m.id);
        }
    }
}

json mention_to_json(const Mention& m) {
    json je;
    je["id"] = m.id;
    je["offsets"] = json::array();
    for (const auto& s : m.spans) je["offsets"].push_back({s.start, s.end});
    je["text"] = m.text;
    if (m.entity_type) je["type"] = *m.entity_type;
    je["normalized"] = json::array();
    for (const auto& r : m.gold_concepts)
        je["normalized"].push_back({{"db_name", r.db_name}, {"db_id", r.db_id}});
    if (m.long_form) je["long_form"] = *m.long_form;
    return je;
}

json document_to_json(const Document& d) {
    json jd;
    jd["id"] = d.id;
    jd["passages"] = json::array();
    for (const auto& p : d.passages)
        jd["passages"].push_back({{"id", p.id}, {"text", p.text}, {"offset", p.offset}});
    jd["entities"] = json::array();
    for (const auto& m : d.mentions) jd["entities"].push_back(mention_to_json(m));
    return jd;
}

}  // namespace

Dataset load_dataset(const std::string& path, DatasetFormat) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file " + path);
    json root;
    try {
        in >> root;
    } catch (const json::parse_error& e) {
        throw ParseError("malformed JSON in " + path + ": " + e.what());
    }
    Dataset ds;
    auto parse_split = [](const json& jroot) {
        std::vector<Document> docs;
        for (const auto& jd : require(jroot, "documents", "dataset root")) {
            Document doc = parse_document(jd);
            check_document(doc);
            docs.push_back(std::move(doc));
        }
        return docs;
    };
    if (root.contains("splits")) {
        for (const auto& [name, jroot] : root["splits"].items())
            ds.splits[name] = parse_split(jroot);
    } else {
        ds.splits["all"] = parse_split(root);
    }
    for (const auto& [name, docs] : ds.splits) {
        std::set<std::string> ids;
        for (const auto& d : docs)
            if (!ids.insert(d.id).second)
                throw SchemaError("duplicate document id " + d.id + " in split " + name);
    }
    return ds;
}

std::string serialize_dataset(const Dataset& ds) {
    json root;
    auto split_json = [](const std::vector<Document>& docs) {
        json j;
        j["documents"] = json::array();
        for (const auto& d : docs) j["documents"].push_back(document_to_json(d));
        return j;
    };
    if (ds.splits.size() == 1 && ds.splits.begin()->first == "all") {
        root = split_json(ds.splits.begin()->second);
    } else {
        for (const auto& [name, docs] : ds.splits)
            root["splits"][name] = split_json(docs);
    }
    return root.dump(2) + "\n";
}

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset file " + path);
    out << serialize_dataset(ds);
}

Document from_ner_spans(
    const std::string& doc_id, const std::string& text,
    const std::vector<std::tuple<std::size_t, std::size_t, std::string>>& spans) {
    Document doc;
    doc.id = doc_id;
    doc.passages.push_back({doc_id + "_p0", text, 0});
    std::size_t text_len = utf8::length(text);
    std::size_t i = 0;
    for (const auto& [start, end, type] : spans) {
        if (start >= end || end > text_len)
            throw SpanError("NER span (" + std::to_string(start) + "," +
                            std::to_string(end) + ") out of bounds in " + doc_id);
        Mention m;
        m.id = doc_id + "_m" + std::to_string(i++);
        m.spans.push_back({start, end});
        m.text = utf8::substr(text, start, end);
        if (!type.empty()) m.entity_type = type;
        doc.mentions.push_back(std::move(m));
    }
    return doc;
}

std::vector<std::string> validate_dataset(const Dataset& ds) {
    std::vector<std::string> violations;
    for (const auto& [split, docs] : ds.splits) {
        std::set<std::string> ids;
        for (const auto& d : docs) {
            if (!ids.insert(d.id).second)
                violations.push_back("split " + split + ": duplicate document id " + d.id);
            std::size_t prev_end = 0;
            bool first = true;
            for (const auto& p : d.passages) {
                if (!first && p.offset < prev_end)
                    violations.push_back("document " + d.id +
                                         ": passage offsets overlap or descend");
                prev_end = p.offset + utf8::length(p.text);
                first = false;
            }
            std::string full = d.full_text();
            std::size_t full_len = utf8::length(full);
            for (const auto& m : d.mentions) {
                bool spans_ok = true;
                for (const auto& s : m.spans) {
                    if (s.start >= s.end) {
                        violations.push_back("document " + d.id + ", mention " + m.id +
                                             ": span start >= end");
                        spans_ok = false;
                    } else if (s.end > full_len) {
                        violations.push_back("document " + d.id + ", mention " + m.id +
                                             ": span beyond document text");
                        spans_ok = false;
                    }
                }
                if (spans_ok) {
                    std::string expected = mention_text_from_spans(full, m.spans);
                    if (expected != m.text)
                        violations.push_back("document " + d.id + ", mention " + m.id +
                                             ": text mismatch, expected '" + expected +
                                             "' got '" + m.text + "'");
                }
                for (const auto& r : m.gold_concepts)
                    if (r.db_id.empty())
                        violations.push_back("document " + d.id + ", mention " + m.id +
                                             ": empty gold db_id");
            }
        }
    }
    return violations;
}

}  // namespace mednorm
