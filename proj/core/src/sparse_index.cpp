#include "mednorm/sparse_index.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>

#include "mednorm/errors.hpp"
#include "mednorm/utf8.hpp"

namespace mednorm {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> char_ngrams(const std::string& text, int n, bool lowercase) {
    std::string prepared = lowercase ? utf8::to_lower(text) : text;
    auto cps = utf8::decode(prepared);
    // Single-space padding on both ends makes n-grams word-boundary aware.
    std::vector<char32_t> padded;
    padded.reserve(cps.size() + 2);
    padded.push_back(U' ');
    padded.insert(padded.end(), cps.begin(), cps.end());
    padded.push_back(U' ');
    std::vector<std::string> grams;
    if (padded.size() < static_cast<std::size_t>(n)) return grams;
    for (std::size_t i = 0; i + n <= padded.size(); ++i) {
        std::string g;
        for (int j = 0; j < n; ++j) utf8::append(g, padded[i + j]);
        grams.push_back(std::move(g));
    }
    return grams;
}

namespace {

std::map<std::string, int> term_counts(const std::string& text,
                                       const SparseIndexParams& p) {
    std::map<std::string, int> counts;
    for (auto& g : char_ngrams(text, p.n, p.lowercase)) ++counts[g];
    return counts;
}

}  // namespace

std::vector<std::pair<std::uint32_t, double>> SparseIndex::vectorize(
    const std::string& text) const {
    std::vector<std::pair<std::uint32_t, double>> vec;
    double norm_sq = 0.0;
    for (const auto& [gram, tf] : term_counts(text, params)) {
        auto it = vocabulary.find(gram);
        if (it == vocabulary.end()) continue;
        double w = static_cast<double>(tf) * idf[it->second];
        vec.emplace_back(it->second, w);
        norm_sq += w * w;
    }
    if (norm_sq > 0.0) {
        double inv = 1.0 / std::sqrt(norm_sq);
        for (auto& [col, w] : vec) w *= inv;
    }
    return vec;
}

SparseIndex build_sparse_index(const KnowledgeBase& kb, SparseIndexParams params) {
    if (kb.concepts.empty()) throw ConfigError("cannot index an empty KB");
    SparseIndex index;
    index.params = params;
    index.kb_hash = kb_hash(kb);

    // Rows in (concept_id, alias) order for deterministic output.
    std::vector<std::map<std::string, int>> row_terms;
    for (const auto& [id, c] : kb.concepts) {
        for (const auto& a : c.aliases) {
            index.row_concepts.push_back(id);
            index.row_aliases.push_back(a.value);
            row_terms.push_back(term_counts(a.value, params));
        }
    }
    const std::size_t n_rows = row_terms.size();

    std::map<std::string, std::uint32_t> df;
    for (const auto& terms : row_terms)
        for (const auto& [gram, tf] : terms) ++df[gram];
    std::uint32_t col = 0;
    for (const auto& [gram, d] : df) index.vocabulary[gram] = col++;
    index.idf.resize(df.size());
    for (const auto& [gram, d] : df)
        index.idf[index.vocabulary[gram]] =
            std::log((1.0 + static_cast<double>(n_rows)) / (1.0 + static_cast<double>(d))) + 1.0;

    index.row_offsets.push_back(0);
    for (const auto& terms : row_terms) {
        double norm_sq = 0.0;
        std::size_t begin = index.values.size();
        for (const auto& [gram, tf] : terms) {
            std::uint32_t c = index.vocabulary.at(gram);
            double w = static_cast<double>(tf) * index.idf[c];
            index.columns.push_back(c);
            index.values.push_back(w);
            norm_sq += w * w;
        }
        double inv = norm_sq > 0.0 ? 1.0 / std::sqrt(norm_sq) : 0.0;
        for (std::size_t i = begin; i < index.values.size(); ++i) index.values[i] *= inv;
        index.row_offsets.push_back(index.values.size());
    }
    return index;
}

std::vector<CandidateList> query_sparse(const SparseIndex& index,
                                        const std::vector<std::string>& mentions,
                                        int k) {
    if (k < 1) throw ConfigError("k must be >= 1");
    std::vector<CandidateList> out;
    out.reserve(mentions.size());
    std::vector<double> query_dense(index.idf.size(), 0.0);
    for (const auto& mention : mentions) {
        auto qvec = index.vectorize(mention);
        for (auto& [c, w] : qvec) query_dense[c] = w;
        std::map<std::string, double> best;  // concept -> max cosine
        for (std::size_t r = 0; r < index.row_count(); ++r) {
            double dot = 0.0;
            for (std::uint64_t i = index.row_offsets[r]; i < index.row_offsets[r + 1]; ++i)
                dot += index.values[i] * query_dense[index.columns[i]];
            if (dot <= 0.0) continue;
            auto [it, inserted] = best.emplace(index.row_concepts[r], dot);
            if (!inserted && dot > it->second) it->second = dot;
        }
        for (auto& [c, w] : qvec) query_dense[c] = 0.0;
        CandidateList cl;
        for (const auto& [id, score] : best)
            cl.candidates.push_back({id, score, CandidateSource::sparse});
        sort_candidates(cl.candidates);
        if (cl.candidates.size() > static_cast<std::size_t>(k))
            cl.candidates.resize(static_cast<std::size_t>(k));
        out.push_back(std::move(cl));
    }
    return out;
}

namespace {

template <typename T>
void write_binary(const fs::path& path, const std::vector<T>& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(T)));
}

template <typename T>
std::vector<T> read_binary(const fs::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw IoError("cannot read " + path.string());
    auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes % sizeof(T) != 0)
        throw ParseError("truncated binary file " + path.string());
    std::vector<T> data(bytes / sizeof(T));
    in.seekg(0);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(bytes));
    return data;
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& l : lines) out << l << '\n';
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

}  // namespace

void save_sparse_index(const SparseIndex& index, const std::string& dir) {
    fs::create_directories(dir);
    json manifest;
    manifest["format_version"] = SparseIndex::kFormatVersion;
    manifest["kind"] = "tfidf_ngram";
    manifest["params"] = {{"n", index.params.n}, {"lowercase", index.params.lowercase}};
    manifest["kb_hash"] = index.kb_hash;
    manifest["idf_formula"] = "ln((1+N)/(1+df))+1";
    std::ofstream mf(fs::path(dir) / "manifest.json", std::ios::binary);
    if (!mf) throw IoError("cannot write manifest in " + dir);
    mf << manifest.dump(2) << '\n';

    std::vector<std::string> vocab(index.vocabulary.size());
    for (const auto& [gram, col] : index.vocabulary) vocab[col] = gram;
    write_lines(fs::path(dir) / "vocab.txt", vocab);
    write_binary(fs::path(dir) / "idf.f64le", index.idf);
    write_binary(fs::path(dir) / "row_offsets.u64le", index.row_offsets);
    write_binary(fs::path(dir) / "columns.u32le", index.columns);
    write_binary(fs::path(dir) / "values.f64le", index.values);
    write_lines(fs::path(dir) / "row_concepts.txt", index.row_concepts);
    write_lines(fs::path(dir) / "row_aliases.txt", index.row_aliases);
}

SparseIndex load_sparse_index(const std::string& dir) {
    std::ifstream mf(fs::path(dir) / "manifest.json");
    if (!mf) throw IoError("cannot open manifest in " + dir);
    json manifest;
    try {
        mf >> manifest;
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed index manifest: ") + e.what());
    }
    if (manifest.value("kind", "") != "tfidf_ngram")
        throw ConsistencyError("index at " + dir + " is not a tfidf_ngram index");
    if (manifest.value("format_version", 0) != SparseIndex::kFormatVersion)
        throw ConsistencyError("unsupported sparse index format_version");
    SparseIndex index;
    index.params.n = manifest["params"].value("n", 3);
    index.params.lowercase = manifest["params"].value("lowercase", true);
    index.kb_hash = manifest.value("kb_hash", "");
    auto vocab = read_lines(fs::path(dir) / "vocab.txt");
    for (std::uint32_t c = 0; c < vocab.size(); ++c) index.vocabulary[vocab[c]] = c;
    index.idf = read_binary<double>(fs::path(dir) / "idf.f64le");
    index.row_offsets = read_binary<std::uint64_t>(fs::path(dir) / "row_offsets.u64le");
    index.columns = read_binary<std::uint32_t>(fs::path(dir) / "columns.u32le");
    index.values = read_binary<double>(fs::path(dir) / "values.f64le");
    index.row_concepts = read_lines(fs::path(dir) / "row_concepts.txt");
    index.row_aliases = read_lines(fs::path(dir) / "row_aliases.txt");
    if (index.row_offsets.empty() ||
        index.row_offsets.size() != index.row_concepts.size() + 1)
        throw ParseError("inconsistent sparse index files in " + dir);
    return index;
}

}  // namespace mednorm
