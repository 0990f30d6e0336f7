#include "mednorm/projection.hpp"

#include <algorithm>

#include <json.hpp>

#include "mednorm/errors.hpp"
#include "mednorm/utf8.hpp"

namespace mednorm {

using nlohmann::json;

MarkedText insert_markers(const Document& doc) {
    std::vector<const Mention*> mentions;
    for (const auto& m : doc.mentions) {
        if (m.spans.size() != 1)
            throw SpanError("insert_markers requires contiguous mentions (mention " +
                            m.id + ")");
        mentions.push_back(&m);
    }
    std::sort(mentions.begin(), mentions.end(),
              [](const Mention* a, const Mention* b) {
                  return a->spans[0].start < b->spans[0].start;
              });
    for (std::size_t i = 1; i < mentions.size(); ++i)
        if (mentions[i]->spans[0].start < mentions[i - 1]->spans[0].end)
            throw SpanError("insert_markers requires non-overlapping mentions (" +
                            mentions[i - 1]->id + " / " + mentions[i]->id + ")");

    auto cps = utf8::decode(doc.full_text());
    MarkedText out;
    std::size_t next = 0;
    for (std::size_t pos = 0; pos <= cps.size(); ++pos) {
        while (next < mentions.size() && mentions[next]->spans[0].start == pos) {
            // Marker open; close is emitted when pos reaches the span end.
            out.text += '[';
            out.origin_mention_ids.push_back(mentions[next]->id);
            ++next;
        }
        if (next > 0 && mentions[next - 1]->spans[0].end == pos) out.text += ']';
        if (pos == cps.size()) break;
        char32_t cp = cps[pos];
        if (cp == U'[' || cp == U']') {
            out.text += '\\';
            out.escaping_applied = true;
        }
        utf8::append(out.text, cp);
    }
    return out;
}

RecoveryResult recover_spans(const std::string& translated,
                             std::size_t expected_pairs) {
    RecoveredSpans rec;
    std::vector<Span> spans;
    auto cps = utf8::decode(translated);
    std::string clean;
    std::size_t clean_len = 0;
    bool open = false;
    std::size_t open_at = 0;
    for (std::size_t i = 0; i < cps.size(); ++i) {
        char32_t cp = cps[i];
        if (cp == U'\\' && i + 1 < cps.size() &&
            (cps[i + 1] == U'[' || cps[i + 1] == U']')) {
            utf8::append(clean, cps[i + 1]);
            ++clean_len;
            ++i;
            continue;
        }
        if (cp == U'[') {
            if (open) return RecoveryFailure{"unbalanced", "nested opening marker"};
            open = true;
            open_at = clean_len;
            continue;
        }
        if (cp == U']') {
            if (!open) return RecoveryFailure{"unbalanced", "closing marker without opener"};
            open = false;
            spans.push_back({open_at, clean_len});
            continue;
        }
        utf8::append(clean, cp);
        ++clean_len;
    }
    if (open) return RecoveryFailure{"unbalanced", "unclosed marker"};
    if (spans.size() != expected_pairs)
        return RecoveryFailure{"count_mismatch",
                               "expected " + std::to_string(expected_pairs) +
                                   " pairs, found " + std::to_string(spans.size())};
    rec.clean_text = std::move(clean);
    rec.spans = std::move(spans);
    return rec;
}

std::string LossReport::to_json() const {
    json j;
    j["entities_in"] = entities_in;
    j["entities_out"] = entities_out;
    j["lost"] = entities_in - entities_out;
    j["loss_percent"] = loss_percent();
    return j.dump(2);
}

namespace {

// Greedy partition into non-overlapping groups of contiguous mentions.
// Discontiguous mentions cannot be carried by a single marker pair and are
// reported back as unprojectable.
void partition_passes(const Document& doc,
                      std::vector<std::vector<const Mention*>>& passes,
                      std::size_t& unprojectable) {
    for (const auto& m : doc.mentions) {
        if (m.spans.size() != 1) {
            ++unprojectable;
            continue;
        }
        bool placed = false;
        for (auto& pass : passes) {
            bool overlaps = false;
            for (const Mention* other : pass)
                if (m.spans[0].start < other->spans[0].end &&
                    other->spans[0].start < m.spans[0].end)
                    overlaps = true;
            if (!overlaps) {
                pass.push_back(&m);
                placed = true;
                break;
            }
        }
        if (!placed) passes.push_back({&m});
    }
}

}  // namespace

ProjectionResult project_dataset(const Dataset& ds, const TranslateFn& translate) {
    ProjectionResult result;
    for (const auto& [split, docs] : ds.splits) {
        std::vector<Document> out_docs;
        for (const auto& doc : docs) {
            result.report.entities_in += doc.mentions.size();
            std::vector<std::vector<const Mention*>> passes;
            std::size_t unprojectable = 0;
            partition_passes(doc, passes, unprojectable);
            for (std::size_t p = 0; p < passes.size(); ++p) {
                Document pass_doc;
                pass_doc.id = doc.id;
                pass_doc.passages = doc.passages;
                std::vector<const Mention*> sorted = passes[p];
                std::sort(sorted.begin(), sorted.end(),
                          [](const Mention* a, const Mention* b) {
                              return a->spans[0].start < b->spans[0].start;
                          });
                for (const Mention* m : sorted) pass_doc.mentions.push_back(*m);

                MarkedText marked = insert_markers(pass_doc);
                std::string translated;
                try {
                    translated = translate(marked.text);
                } catch (const std::exception&) {
                    continue;  // transport failure: entities counted as loss
                }
                auto recovery = recover_spans(translated, marked.origin_mention_ids.size());
                if (std::holds_alternative<RecoveryFailure>(recovery)) continue;
                auto& rec = std::get<RecoveredSpans>(recovery);

                Document out_doc;
                out_doc.id = passes.size() > 1 ? doc.id + "#p" + std::to_string(p) : doc.id;
                out_doc.passages.push_back({out_doc.id + "_p0", rec.clean_text, 0});
                // Labels inherited strictly by positional marker order.
                for (std::size_t i = 0; i < rec.spans.size(); ++i) {
                    const Mention& origin = pass_doc.mentions[i];
                    Mention m;
                    m.id = out_doc.id + "_m" + std::to_string(i);
                    m.spans.push_back(rec.spans[i]);
                    m.text = utf8::substr(rec.clean_text, rec.spans[i].start,
                                          rec.spans[i].end);
                    m.entity_type = origin.entity_type;
                    m.gold_concepts = origin.gold_concepts;
                    out_doc.mentions.push_back(std::move(m));
                }
                result.report.entities_out += out_doc.mentions.size();
                out_docs.push_back(std::move(out_doc));
            }
        }
        result.dataset.splits[split] = std::move(out_docs);
    }
    return result;
}

}  // namespace mednorm
