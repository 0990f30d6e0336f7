// mednorm command-line interface. Stages communicate through files only:
// dict -> index -> link -> filter -> train-reranker -> rerank -> evaluate,
// plus project for translation-based label projection.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "mednorm/abbrev.hpp"
#include "mednorm/datamodel.hpp"
#include "mednorm/dense_index.hpp"
#include "mednorm/errors.hpp"
#include "mednorm/evaluation.hpp"
#include "mednorm/kb.hpp"
#include "mednorm/manifest.hpp"
#include "mednorm/pipeline.hpp"
#include "mednorm/projection.hpp"
#include "mednorm/reranker.hpp"
#include "mednorm/sparse_index.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mednorm;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_run_manifest(const std::string& stage, const std::string& artifact,
                        const std::string& kb_hash_value,
                        const std::map<std::string, std::string>& params,
                        const std::string& config_digest = "") {
    RunManifest m;
    m.stage = stage;
    m.kb_hash = kb_hash_value;
    m.parameters = params;
    m.config_digest = config_digest;
    m.timestamp = utc_timestamp();
    if (fs::is_directory(artifact)) {
        // Index directories already carry manifest.json; fold the run record
        // into it so each artifact directory has exactly one manifest.
        fs::path mf = fs::path(artifact) / "manifest.json";
        json j = json::parse(read_file(mf.string()));
        j["run"] = json::parse(m.to_json());
        std::ofstream out(mf, std::ios::binary);
        out << j.dump(2) << '\n';
    } else {
        write_manifest(m, artifact);
    }
}

std::string manifest_kb_hash(const std::string& artifact) {
    fs::path mf = fs::is_directory(artifact) ? fs::path(artifact) / "manifest.json"
                                             : fs::path(artifact + ".manifest.json");
    if (!fs::exists(mf)) return "";
    json j = json::parse(read_file(mf.string()));
    return j.value("kb_hash", "");
}

void require_kb_match(const std::string& a_name, const std::string& a_hash,
                      const std::string& b_name, const std::string& b_hash) {
    if (!a_hash.empty() && !b_hash.empty() && a_hash != b_hash)
        throw ConsistencyError("kb_hash mismatch between " + a_name + " (" + a_hash +
                               ") and " + b_name + " (" + b_hash + ")");
}

GeneratorHandle make_generator(const std::string& dir, const std::string& provider_spec,
                               std::vector<std::shared_ptr<void>>& keepalive) {
    json manifest = json::parse(read_file((fs::path(dir) / "manifest.json").string()));
    std::string kind = manifest.value("kind", "");
    if (kind == "tfidf_ngram") {
        auto index = std::make_shared<SparseIndex>(load_sparse_index(dir));
        keepalive.push_back(index);
        return {"sparse", index->kb_hash,
                [index](const std::vector<std::string>& texts, int k) {
                    return query_sparse(*index, texts, k);
                }};
    }
    if (kind == "dense") {
        auto index = std::make_shared<DenseIndex>(load_dense_index(dir));
        keepalive.push_back(index);
        std::shared_ptr<EmbeddingProvider> provider =
            provider_spec.empty() ? make_provider("hash:d=" + std::to_string(index->dim))
                                  : make_provider(provider_spec);
        keepalive.push_back(provider);
        return {"dense", index->kb_hash,
                [index, provider](const std::vector<std::string>& texts, int k) {
                    return query_dense(*index, *provider, texts, k);
                }};
    }
    throw ConsistencyError("unknown index kind '" + kind + "' in " + dir);
}

std::map<std::string, const Mention*> mention_table(const Dataset& ds) {
    std::map<std::string, const Mention*> t;
    for (const auto& [split, docs] : ds.splits)
        for (const auto& doc : docs)
            for (const auto& m : doc.mentions) t[m.id] = &m;
    return t;
}

std::vector<int> parse_ks(const std::string& spec) {
    std::vector<int> ks;
    std::stringstream ss(spec);
    std::string part;
    while (std::getline(ss, part, ','))
        if (!part.empty()) ks.push_back(std::stoi(part));
    if (ks.empty()) ks = {1, 5, 64};
    return ks;
}

int run(int argc, char** argv) {
    CLI::App app{"mednorm: multilingual medical entity normalization toolkit"};
    app.require_subcommand(1);

    // dict
    auto* dict = app.add_subcommand("dict", "build a knowledge base from config");
    std::string dict_config, dict_out, dict_aliases;
    dict->add_option("--config", dict_config, "YAML KB config")->required();
    dict->add_option("--out", dict_out, "output KB JSONL path")->required();
    dict->add_option("--aliases", dict_aliases, "extra alias TSV (concept_id, value, language)");

    // index
    auto* index_cmd = app.add_subcommand("index", "build a retrieval index over a KB");
    std::string idx_kind = "tfidf", idx_kb, idx_out, idx_provider;
    int idx_ngram = 3;
    index_cmd->add_option("--kind", idx_kind, "tfidf | dense")->required();
    index_cmd->add_option("--kb", idx_kb, "KB JSONL")->required();
    index_cmd->add_option("--out", idx_out, "output index directory")->required();
    index_cmd->add_option("--provider", idx_provider,
                          "embedding provider spec (dense): hash[:d=..,n=..] | "
                          "precomputed:<path> | remote:<endpoint>,dim=<d>,name=<id>");
    index_cmd->add_option("--ngram", idx_ngram, "n-gram size (tfidf)");

    // link
    auto* link = app.add_subcommand("link", "generate candidates for a dataset");
    std::vector<std::string> link_indices;
    std::string link_dataset, link_out, link_provider;
    int link_k = kDefaultTopK;
    bool link_expand = false;
    link->add_option("--index", link_indices, "index directory (repeat for ensemble)")
        ->required();
    link->add_option("--dataset", link_dataset, "dataset JSON")->required();
    link->add_option("--k", link_k, "candidates per mention (default 64)");
    link->add_option("--out", link_out, "output candidates JSONL")->required();
    link->add_option("--provider", link_provider, "embedding provider spec for dense indices");
    link->add_flag("--expand-abbreviations", link_expand,
                   "run abbreviation expansion before linking");

    // filter
    auto* filter = app.add_subcommand("filter", "semantic-group filter for candidates");
    std::string flt_cands, flt_dataset, flt_kb, flt_groups, flt_out;
    filter->add_option("--cands", flt_cands, "candidates JSONL")->required();
    filter->add_option("--dataset", flt_dataset, "dataset JSON (entity types)")->required();
    filter->add_option("--kb", flt_kb, "KB JSONL")->required();
    filter->add_option("--groups", flt_groups, "entity_type -> group TSV (default: identity)");
    filter->add_option("--out", flt_out, "output candidates JSONL")->required();

    // train-reranker
    auto* train = app.add_subcommand("train-reranker", "train the candidate re-ranker");
    std::string tr_dataset, tr_cands, tr_kb, tr_groups, tr_out;
    RerankerConfig tr_cfg;
    std::string tr_train_split = "train", tr_val_split = "validation";
    train->add_option("--dataset", tr_dataset, "dataset JSON with train/validation splits")
        ->required();
    train->add_option("--cands", tr_cands, "candidates JSONL")->required();
    train->add_option("--kb", tr_kb, "KB JSONL")->required();
    train->add_option("--groups", tr_groups, "entity_type -> group TSV");
    train->add_option("--out", tr_out, "output model JSON")->required();
    train->add_option("--k", tr_cfg.k, "slate size incl. NIL (default 64)");
    train->add_option("--lambda", tr_cfg.lambda, "rank regularization weight (default 1.0)");
    train->add_option("--lr", tr_cfg.learning_rate, "learning rate (default 1e-2)");
    train->add_option("--epochs", tr_cfg.epochs, "epochs (default 20)");
    train->add_option("--ctx-len", tr_cfg.ctx_len, "context length per side (default 128)");
    train->add_option("--seed", tr_cfg.seed, "RNG seed (default 42)");
    train->add_option("--train-split", tr_train_split, "training split name");
    train->add_option("--val-split", tr_val_split, "validation split name");

    // rerank
    auto* rr = app.add_subcommand("rerank", "re-score candidates with a trained model");
    std::string rr_model, rr_dataset, rr_cands, rr_kb, rr_groups, rr_out;
    rr->add_option("--model", rr_model, "model JSON")->required();
    rr->add_option("--dataset", rr_dataset, "dataset JSON")->required();
    rr->add_option("--cands", rr_cands, "candidates JSONL")->required();
    rr->add_option("--kb", rr_kb, "KB JSONL")->required();
    rr->add_option("--groups", rr_groups, "entity_type -> group TSV");
    rr->add_option("--out", rr_out, "output candidates JSONL")->required();

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "strict span-level evaluation");
    std::string ev_gold, ev_pred, ev_pred_dataset, ev_kb, ev_ks = "1,5,64";
    bool ev_table = false;
    eval->add_option("--gold", ev_gold, "gold dataset JSON")->required();
    eval->add_option("--pred", ev_pred, "predicted candidates JSONL")->required();
    eval->add_option("--pred-dataset", ev_pred_dataset,
                     "dataset carrying predicted spans (default: gold)");
    eval->add_option("--kb", ev_kb, "KB JSONL (enables error breakdowns)");
    eval->add_option("--k", ev_ks, "comma-separated recall@k values");
    eval->add_flag("--table", ev_table, "print aligned text table instead of JSON");

    // project
    auto* proj = app.add_subcommand("project", "marker-based label projection");
    std::string pj_dataset, pj_out, pj_translate = "identity", pj_report;
    proj->add_option("--dataset", pj_dataset, "source dataset JSON")->required();
    proj->add_option("--out", pj_out, "output dataset JSON")->required();
    proj->add_option("--translate", pj_translate,
                     "identity | remote:<endpoint> ({texts}->{texts} protocol)");
    proj->add_option("--loss-report", pj_report, "write the loss report JSON here");

    CLI11_PARSE(app, argc, argv);

    if (*dict) {
        KbConfig cfg = load_kb_config(dict_config);
        KnowledgeBase kb = build_kb(cfg);
        if (!dict_aliases.empty()) {
            AliasReport rep;
            kb = add_alias_source(kb, dict_aliases, rep);
            std::cerr << "aliases: added " << rep.added << ", skipped " << rep.skipped
                      << ", unknown ids " << rep.unknown_ids.size() << "\n";
        }
        save_kb(kb, dict_out);
        write_run_manifest("dict", dict_out, kb_hash(kb),
                           {{"config", dict_config}, {"name", cfg.name}},
                           content_digest(read_file(dict_config)));
        std::cout << "kb: " << kb.concepts.size() << " concepts, " << kb.alias_count()
                  << " aliases, kb_hash=" << kb_hash(kb) << "\n";
        return 0;
    }

    if (*index_cmd) {
        KnowledgeBase kb = load_kb(idx_kb);
        if (idx_kind == "tfidf") {
            SparseIndexParams params;
            params.n = idx_ngram;
            SparseIndex index = build_sparse_index(kb, params);
            save_sparse_index(index, idx_out);
        } else if (idx_kind == "dense") {
            auto provider = make_provider(idx_provider.empty() ? "hash" : idx_provider);
            DenseIndex index = build_dense_index(kb, *provider);
            save_dense_index(index, idx_out);
        } else {
            throw ConfigError("unknown index kind '" + idx_kind + "'");
        }
        write_run_manifest("index", idx_out, kb_hash(kb), {{"kind", idx_kind}});
        std::cout << "index: " << idx_out << " built over " << kb.alias_count()
                  << " alias rows\n";
        return 0;
    }

    if (*link) {
        Dataset ds = load_dataset(link_dataset);
        if (link_expand) ds = expand_abbreviations(ds);
        std::vector<std::shared_ptr<void>> keepalive;
        std::vector<GeneratorHandle> generators;
        for (const auto& dir : link_indices)
            generators.push_back(make_generator(dir, link_provider, keepalive));
        auto per_generator = generate_candidates(ds, generators, link_k);
        std::vector<CandidateList> merged;
        for (auto& [mention_id, lists] : per_generator) {
            CandidateList cl = lists.size() == 1 ? lists.front() : ensemble_merge(lists);
            cl.mention_id = mention_id;
            if (cl.candidates.size() > static_cast<std::size_t>(link_k))
                cl.candidates.resize(static_cast<std::size_t>(link_k));
            merged.push_back(std::move(cl));
        }
        save_candidates(merged, link_out);
        write_run_manifest("link", link_out,
                           generators.empty() ? "" : generators.front().kb_hash,
                           {{"k", std::to_string(link_k)},
                            {"generators", std::to_string(generators.size())}});
        std::cout << "link: " << merged.size() << " mentions\n";
        return 0;
    }

    if (*filter) {
        KnowledgeBase kb = load_kb(flt_kb);
        require_kb_match("candidates", manifest_kb_hash(flt_cands), "kb", kb_hash(kb));
        Dataset ds = load_dataset(flt_dataset);
        auto mentions = mention_table(ds);
        auto type_map = flt_groups.empty() ? std::map<std::string, std::string>{}
                                           : load_group_map(flt_groups);
        FilterStats stats;
        std::vector<CandidateList> out;
        for (const auto& cl : load_candidates(flt_cands)) {
            auto mit = mentions.find(cl.mention_id);
            std::string mtype;
            if (mit != mentions.end() && mit->second->entity_type)
                mtype = *mit->second->entity_type;
            if (mtype.empty()) {
                ++stats.unknown_type_warnings;
                out.push_back(cl);
                continue;
            }
            std::map<std::string, std::string> effective = type_map;
            if (!effective.count(mtype)) effective[mtype] = mtype;
            out.push_back(filter_by_semantic_group(cl, mtype, kb, effective, stats));
        }
        save_candidates(out, flt_out);
        write_run_manifest("filter", flt_out, kb_hash(kb),
                           {{"removed", std::to_string(stats.removed)},
                            {"warnings", std::to_string(stats.unknown_type_warnings)}});
        std::cout << "filter: removed " << stats.removed << " candidates, "
                  << stats.unknown_type_warnings << " unknown-type warnings\n";
        return 0;
    }

    if (*train) {
        KnowledgeBase kb = load_kb(tr_kb);
        require_kb_match("candidates", manifest_kb_hash(tr_cands), "kb", kb_hash(kb));
        Dataset ds = load_dataset(tr_dataset);
        auto type_map = tr_groups.empty() ? std::map<std::string, std::string>{}
                                          : load_group_map(tr_groups);
        auto cands = load_candidates(tr_cands);
        std::map<std::string, CandidateList> by_mention;
        for (auto& cl : cands) by_mention[cl.mention_id] = std::move(cl);
        auto split_of = [&](const std::string& name) {
            Dataset d;
            auto it = ds.splits.find(name);
            if (it == ds.splits.end())
                throw ConfigError("dataset has no split '" + name + "'");
            d.splits[name] = it->second;
            return d;
        };
        Dataset train_ds = split_of(tr_train_split);
        Dataset val_ds = split_of(tr_val_split);
        TrainResult result =
            train_reranker(train_ds, by_mention, val_ds, by_mention, kb, type_map, tr_cfg);
        save_model(result.params, tr_cfg, result.report, kb_hash(kb), tr_out);
        write_run_manifest("train-reranker", tr_out, kb_hash(kb),
                           {{"lambda", std::to_string(tr_cfg.lambda)},
                            {"epochs", std::to_string(tr_cfg.epochs)},
                            {"seed", std::to_string(tr_cfg.seed)}});
        std::cout << "train: best epoch " << result.report.best_epoch << ", val F1@1 "
                  << result.report.best_validation_f1 << "\n";
        return 0;
    }

    if (*rr) {
        KnowledgeBase kb = load_kb(rr_kb);
        LoadedModel model = load_model(rr_model);
        require_kb_match("model", model.kb_hash, "kb", kb_hash(kb));
        require_kb_match("candidates", manifest_kb_hash(rr_cands), "kb", kb_hash(kb));
        Dataset ds = load_dataset(rr_dataset);
        auto mentions = mention_table(ds);
        auto type_map = rr_groups.empty() ? std::map<std::string, std::string>{}
                                          : load_group_map(rr_groups);
        std::vector<CandidateList> out;
        for (const auto& cl : load_candidates(rr_cands)) {
            auto mit = mentions.find(cl.mention_id);
            if (mit == mentions.end())
                throw ConsistencyError("candidate list for unknown mention " +
                                       cl.mention_id);
            out.push_back(rerank(model.params, cl, *mit->second, kb, type_map));
        }
        save_candidates(out, rr_out);
        write_run_manifest("rerank", rr_out, kb_hash(kb), {{"model", rr_model}});
        std::cout << "rerank: " << out.size() << " mentions\n";
        return 0;
    }

    if (*eval) {
        Dataset gold = load_dataset(ev_gold);
        Predictions pred;
        pred.docs = ev_pred_dataset.empty() ? gold : load_dataset(ev_pred_dataset);
        for (auto& cl : load_candidates(ev_pred)) pred.candidates[cl.mention_id] = cl;
        EvalReport report = evaluate(gold, pred, parse_ks(ev_ks));
        if (!ev_kb.empty()) {
            KnowledgeBase kb = load_kb(ev_kb);
            error_breakdown(gold, pred, kb, report);
        }
        std::cout << (ev_table ? report.to_table() : report.to_json() + "\n");
        return 0;
    }

    if (*proj) {
        Dataset ds = load_dataset(pj_dataset);
        TranslateFn translate;
        if (pj_translate == "identity") {
            translate = [](const std::string& text) { return text; };
        } else if (pj_translate.rfind("remote:", 0) == 0) {
            std::string endpoint = pj_translate.substr(7);
            translate = [endpoint](const std::string& text) {
                auto scheme_end = endpoint.find("://");
                std::size_t host_start =
                    scheme_end == std::string::npos ? 0 : scheme_end + 3;
                auto path_start = endpoint.find('/', host_start);
                std::string base = path_start == std::string::npos
                                       ? endpoint
                                       : endpoint.substr(0, path_start);
                std::string path = path_start == std::string::npos
                                       ? "/translate"
                                       : endpoint.substr(path_start);
                json body;
                body["texts"] = std::vector<std::string>{text};
                httplib::Client client(base);
                auto res = client.Post(path, body.dump(), "application/json");
                if (!res || res->status != 200)
                    throw TransportError("translation service unreachable");
                json reply = json::parse(res->body);
                return reply["texts"].at(0).get<std::string>();
            };
        } else {
            throw ConfigError("unknown translate mode '" + pj_translate + "'");
        }
        ProjectionResult result = project_dataset(ds, translate);
        save_dataset(result.dataset, pj_out);
        write_run_manifest("project", pj_out, "",
                           {{"entities_in", std::to_string(result.report.entities_in)},
                            {"entities_out", std::to_string(result.report.entities_out)}});
        if (!pj_report.empty()) {
            std::ofstream rep(pj_report, std::ios::binary);
            rep << result.report.to_json() << '\n';
        }
        std::cout << result.report.to_json() << "\n";
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        std::cerr << "mednorm " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "mednorm error: " << e.what() << "\n";
        return 2;
    }
}
