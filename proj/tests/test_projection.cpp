#include <doctest.h>

#include <string>

#include "mednorm/errors.hpp"
#include "mednorm/projection.hpp"

using namespace mednorm;

namespace {

Document doc_with_mentions(const std::string& text,
                           std::vector<std::pair<std::size_t, std::size_t>> spans) {
    Document doc;
    doc.id = "d1";
    doc.passages.push_back({"p0", text, 0});
    int i = 0;
    for (auto [s, e] : spans) {
        Mention m;
        m.id = "m" + std::to_string(i++);
        m.spans = {{s, e}};
        m.text = text.substr(s, e - s);  // ASCII fixtures only
        m.gold_concepts = {{"kb", "C" + std::to_string(i)}};
        doc.mentions.push_back(std::move(m));
    }
    return doc;
}

}  // namespace

TEST_CASE("markers wrap mentions and escape pre-existing brackets") {
    Document doc = doc_with_mentions("pain [severe] in knee", {{0, 4}, {17, 21}});
    MarkedText marked = insert_markers(doc);
    CHECK(marked.text == "[pain] \\[severe\\] in [knee]");
    CHECK(marked.origin_mention_ids == std::vector<std::string>{"m0", "m1"});
    CHECK(marked.escaping_applied);

    Document plain = doc_with_mentions("no brackets here", {{3, 11}});
    CHECK(!insert_markers(plain).escaping_applied);
}

TEST_CASE("marker insertion rejects overlap and discontiguous spans") {
    Document overlap = doc_with_mentions("abcdef", {{0, 4}, {2, 6}});
    CHECK_THROWS_AS(insert_markers(overlap), SpanError);

    Document disc = doc_with_mentions("abcdef", {{0, 2}});
    disc.mentions[0].spans.push_back({4, 6});
    CHECK_THROWS_AS(insert_markers(disc), SpanError);
}

TEST_CASE("span recovery round-trips and reports defects as data") {
    auto ok = recover_spans("le [genou] douloureux", 1);
    REQUIRE(std::holds_alternative<RecoveredSpans>(ok));
    auto& rec = std::get<RecoveredSpans>(ok);
    CHECK(rec.clean_text == "le genou douloureux");
    CHECK(rec.spans == std::vector<Span>{{3, 8}});

    auto escaped = recover_spans("a \\[b\\] [c]", 1);
    REQUIRE(std::holds_alternative<RecoveredSpans>(escaped));
    CHECK(std::get<RecoveredSpans>(escaped).clean_text == "a [b] c");

    auto unclosed = recover_spans("a [b c", 1);
    REQUIRE(std::holds_alternative<RecoveryFailure>(unclosed));
    CHECK(std::get<RecoveryFailure>(unclosed).defect == "unbalanced");

    auto nested = recover_spans("a [[b]] c", 1);
    REQUIRE(std::holds_alternative<RecoveryFailure>(nested));
    CHECK(std::get<RecoveryFailure>(nested).defect == "unbalanced");

    auto stray = recover_spans("a b] c", 0);
    REQUIRE(std::holds_alternative<RecoveryFailure>(stray));
    CHECK(std::get<RecoveryFailure>(stray).defect == "unbalanced");

    auto dropped = recover_spans("a b c", 2);
    REQUIRE(std::holds_alternative<RecoveryFailure>(dropped));
    CHECK(std::get<RecoveryFailure>(dropped).defect == "count_mismatch");
}

TEST_CASE("identity translation loses nothing and keeps spans") {
    Dataset ds;
    ds.splits["all"] = {doc_with_mentions("knee pain after running", {{0, 4}, {5, 9}}),
                        doc_with_mentions("severe headache", {{7, 15}})};
    ProjectionResult res = project_dataset(ds, [](const std::string& s) { return s; });
    CHECK(res.report.entities_in == 3);
    CHECK(res.report.entities_out == 3);
    CHECK(res.report.loss_percent() == 0.0);
    REQUIRE(res.dataset.splits.at("all").size() == 2);
    const Document& out = res.dataset.splits.at("all")[0];
    CHECK(out.full_text() == "knee pain after running");
    REQUIRE(out.mentions.size() == 2);
    CHECK(out.mentions[0].spans == std::vector<Span>{{0, 4}});
    CHECK(out.mentions[0].text == "knee");
    CHECK(out.mentions[1].spans == std::vector<Span>{{5, 9}});
    CHECK(out.mentions[1].gold_concepts == std::vector<ConceptRef>{{"kb", "C2"}});
}

TEST_CASE("overlapping mentions are split into independent passes") {
    Document doc = doc_with_mentions("abcdef ghij", {{0, 6}, {2, 6}, {7, 11}});
    Dataset ds;
    ds.splits["all"] = {doc};
    ProjectionResult res = project_dataset(ds, [](const std::string& s) { return s; });
    CHECK(res.report.entities_in == 3);
    CHECK(res.report.entities_out == 3);
    const auto& docs = res.dataset.splits.at("all");
    REQUIRE(docs.size() == 2);
    CHECK(docs[0].id == "d1#p0");
    CHECK(docs[1].id == "d1#p1");
    CHECK(docs[0].mentions.size() == 2);  // m0 and the disjoint m2
    CHECK(docs[1].mentions.size() == 1);  // the overlapping m1
}

TEST_CASE("discontiguous mentions and recovery failures count as loss") {
    Document doc = doc_with_mentions("ab cd ef", {{0, 2}});
    Mention disc;
    disc.id = "mx";
    disc.spans = {{3, 5}, {6, 8}};
    disc.text = "cd ef";
    doc.mentions.push_back(disc);
    Dataset ds;
    ds.splits["all"] = {doc};
    ProjectionResult res = project_dataset(ds, [](const std::string& s) { return s; });
    CHECK(res.report.entities_in == 2);
    CHECK(res.report.entities_out == 1);
    CHECK(res.report.loss_percent() == doctest::Approx(50.0));
}

TEST_CASE("a bracket-dropping translator produces the constructed loss") {
    // four documents with 1, 2, 3 and 4 mentions; the translator strips
    // markers only in the 2-mention document -> exactly 2/10 = 20% loss
    Dataset ds;
    ds.splits["all"] = {
        doc_with_mentions("aaa bbb", {{0, 3}}),
        doc_with_mentions("ccc ddd", {{0, 3}, {4, 7}}),
        doc_with_mentions("eee fff ggg", {{0, 3}, {4, 7}, {8, 11}}),
        doc_with_mentions("hhh iii jjj kkk", {{0, 3}, {4, 7}, {8, 11}, {12, 15}})};
    auto translate = [](const std::string& s) {
        if (s.find("ccc") == std::string::npos) return s;
        std::string out;
        for (char c : s)
            if (c != '[' && c != ']') out += c;
        return out;
    };
    ProjectionResult res = project_dataset(ds, translate);
    CHECK(res.report.entities_in == 10);
    CHECK(res.report.entities_out == 8);
    CHECK(res.report.loss_percent() == doctest::Approx(20.0).epsilon(1e-12));
    // the defective document is dropped entirely
    CHECK(res.dataset.splits.at("all").size() == 3);
    CHECK(res.report.to_json().find("loss_percent") != std::string::npos);
}
