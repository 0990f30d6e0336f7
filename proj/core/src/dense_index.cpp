#include "mednorm/dense_index.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "mednorm/errors.hpp"
#include "mednorm/sparse_index.hpp"

namespace mednorm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char b : s) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    return h;
}

void l2_normalize(std::vector<float>& v) {
    double norm_sq = 0.0;
    for (float x : v) norm_sq += static_cast<double>(x) * x;
    if (norm_sq <= 0.0) return;
    float inv = static_cast<float>(1.0 / std::sqrt(norm_sq));
    for (float& x : v) x *= inv;
}

}  // namespace

HashNgramProvider::HashNgramProvider(int dim, int n) : dim_(dim), n_(n) {
    if (dim < 1) throw ConfigError("hash provider dim must be >= 1");
}

std::string HashNgramProvider::identity() const {
    return "hash_ngram/1:d=" + std::to_string(dim_) + ",n=" + std::to_string(n_);
}

std::vector<std::vector<float>> HashNgramProvider::embed(
    const std::vector<std::string>& texts) const {
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        std::vector<float> v(static_cast<std::size_t>(dim_), 0.0f);
        for (const auto& gram : char_ngrams(text, n_, /*lowercase=*/true)) {
            std::uint64_t h = fnv1a(gram);
            auto bucket = static_cast<std::size_t>(h % static_cast<std::uint64_t>(dim_));
            float sign = (h >> 63) ? -1.0f : 1.0f;
            v[bucket] += sign;
        }
        l2_normalize(v);
        out.push_back(std::move(v));
    }
    return out;
}

PrecomputedProvider::PrecomputedProvider(const std::string& jsonl_path)
    : path_(jsonl_path) {
    std::ifstream in(jsonl_path);
    if (!in) throw IoError("cannot open vector file " + jsonl_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("vector file line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!j.contains("text") || !j.contains("vector"))
            throw SchemaError("vector file line " + std::to_string(lineno) +
                              ": expected {text, vector}");
        std::vector<float> v = j["vector"].get<std::vector<float>>();
        if (dim_ == 0) dim_ = static_cast<int>(v.size());
        if (static_cast<int>(v.size()) != dim_)
            throw SchemaError("vector file line " + std::to_string(lineno) +
                              ": inconsistent dimension");
        vectors_[j["text"].get<std::string>()] = std::move(v);
    }
    if (vectors_.empty()) throw ConfigError("vector file " + jsonl_path + " is empty");
}

std::string PrecomputedProvider::identity() const {
    return "precomputed/1:" + fs::path(path_).filename().string();
}

std::vector<std::vector<float>> PrecomputedProvider::embed(
    const std::vector<std::string>& texts) const {
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        auto it = vectors_.find(text);
        if (it == vectors_.end())
            throw IoError("no precomputed vector for text '" + text + "'");
        out.push_back(it->second);
    }
    return out;
}

RemoteProvider::RemoteProvider(std::string endpoint, int dim, std::string model_name,
                               int max_retries)
    : endpoint_(std::move(endpoint)),
      dim_(dim),
      model_name_(std::move(model_name)),
      max_retries_(max_retries) {
    if (endpoint_.empty()) {
        const char* env = std::getenv("MEDNORM_EMBED_ENDPOINT");
        if (!env) throw ConfigError("remote provider needs an endpoint "
                                    "(flag or MEDNORM_EMBED_ENDPOINT)");
        endpoint_ = env;
    }
}

std::string RemoteProvider::identity() const {
    return "remote/1:" + model_name_ + ",d=" + std::to_string(dim_);
}

std::vector<std::vector<float>> RemoteProvider::embed(
    const std::vector<std::string>& texts) const {
    auto scheme_end = endpoint_.find("://");
    std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    auto path_start = endpoint_.find('/', host_start);
    std::string base = path_start == std::string::npos ? endpoint_
                                                       : endpoint_.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/embed"
                                                       : endpoint_.substr(path_start);
    json body;
    body["texts"] = texts;
    std::string payload = body.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= max_retries_; ++attempt) {
        httplib::Client client(base);
        client.set_read_timeout(30, 0);
        auto res = client.Post(path, payload, "application/json");
        if (!res) {
            last_error = "connection failed";
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        json reply;
        try {
            reply = json::parse(res->body);
        } catch (const json::parse_error& e) {
            throw TransportError(std::string("invalid JSON from embedding service: ") +
                                 e.what());
        }
        auto vectors = reply.value("vectors", json::array());
        if (vectors.size() != texts.size())
            throw TransportError("embedding service returned " +
                                 std::to_string(vectors.size()) + " vectors for " +
                                 std::to_string(texts.size()) + " texts");
        std::vector<std::vector<float>> out;
        for (const auto& jv : vectors) {
            std::vector<float> v = jv.get<std::vector<float>>();
            if (static_cast<int>(v.size()) != dim_)
                throw TransportError("embedding service returned wrong dimension");
            out.push_back(std::move(v));
        }
        return out;
    }
    throw TransportError("embedding service unreachable after " +
                         std::to_string(max_retries_ + 1) + " attempts (" +
                         last_error + ")");
}

std::vector<std::vector<float>> embed_texts(const EmbeddingProvider& provider,
                                            const std::vector<std::string>& texts) {
    auto out = provider.embed(texts);
    for (const auto& v : out)
        if (static_cast<int>(v.size()) != provider.dim())
            throw NumericError("provider returned vector of wrong dimension");
    return out;
}

DenseIndex build_dense_index(const KnowledgeBase& kb,
                             const EmbeddingProvider& provider) {
    if (kb.concepts.empty()) throw ConfigError("cannot index an empty KB");
    DenseIndex index;
    index.provider_identity = provider.identity();
    index.dim = provider.dim();
    index.kb_hash = kb_hash(kb);
    std::vector<std::string> texts;
    for (const auto& [id, c] : kb.concepts) {
        for (const auto& a : c.aliases) {
            index.row_concepts.push_back(id);
            index.row_aliases.push_back(a.value);
            texts.push_back(a.value);
        }
    }
    index.rows = embed_texts(provider, texts);
    for (auto& row : index.rows) l2_normalize(row);
    return index;
}

std::vector<CandidateList> query_dense(const DenseIndex& index,
                                       const EmbeddingProvider& provider,
                                       const std::vector<std::string>& mentions,
                                       int k) {
    if (k < 1) throw ConfigError("k must be >= 1");
    if (provider.identity() != index.provider_identity)
        throw ConsistencyError("provider identity '" + provider.identity() +
                               "' does not match index identity '" +
                               index.provider_identity + "'");
    auto queries = embed_texts(provider, mentions);
    std::vector<CandidateList> out;
    out.reserve(mentions.size());
    for (auto& q : queries) {
        l2_normalize(q);
        std::map<std::string, double> best;
        for (std::size_t r = 0; r < index.rows.size(); ++r) {
            double dot = 0.0;
            const auto& row = index.rows[r];
            for (std::size_t i = 0; i < row.size(); ++i)
                dot += static_cast<double>(row[i]) * q[i];
            auto [it, inserted] = best.emplace(index.row_concepts[r], dot);
            if (!inserted && dot > it->second) it->second = dot;
        }
        CandidateList cl;
        for (const auto& [id, score] : best)
            cl.candidates.push_back({id, score, CandidateSource::dense});
        sort_candidates(cl.candidates);
        if (cl.candidates.size() > static_cast<std::size_t>(k))
            cl.candidates.resize(static_cast<std::size_t>(k));
        out.push_back(std::move(cl));
    }
    return out;
}

void save_dense_index(const DenseIndex& index, const std::string& dir) {
    fs::create_directories(dir);
    json manifest;
    manifest["format_version"] = DenseIndex::kFormatVersion;
    manifest["kind"] = "dense";
    manifest["provider_identity"] = index.provider_identity;
    manifest["dim"] = index.dim;
    manifest["kb_hash"] = index.kb_hash;
    manifest["normalization"] = "l2_rows_and_queries";
    std::ofstream mf(fs::path(dir) / "manifest.json", std::ios::binary);
    if (!mf) throw IoError("cannot write manifest in " + dir);
    mf << manifest.dump(2) << '\n';

    std::ofstream vec(fs::path(dir) / "vectors.f32le", std::ios::binary);
    if (!vec) throw IoError("cannot write vectors in " + dir);
    for (const auto& row : index.rows)
        vec.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(float)));

    std::ofstream rc(fs::path(dir) / "row_concepts.txt", std::ios::binary);
    for (const auto& id : index.row_concepts) rc << id << '\n';
    std::ofstream ra(fs::path(dir) / "row_aliases.txt", std::ios::binary);
    for (const auto& a : index.row_aliases) ra << a << '\n';
}

DenseIndex load_dense_index(const std::string& dir) {
    std::ifstream mf(fs::path(dir) / "manifest.json");
    if (!mf) throw IoError("cannot open manifest in " + dir);
    json manifest;
    try {
        mf >> manifest;
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed index manifest: ") + e.what());
    }
    if (manifest.value("kind", "") != "dense")
        throw ConsistencyError("index at " + dir + " is not a dense index");
    if (manifest.value("format_version", 0) != DenseIndex::kFormatVersion)
        throw ConsistencyError("unsupported dense index format_version");
    DenseIndex index;
    index.provider_identity = manifest.value("provider_identity", "");
    index.dim = manifest.value("dim", 0);
    index.kb_hash = manifest.value("kb_hash", "");

    std::ifstream rc(fs::path(dir) / "row_concepts.txt");
    if (!rc) throw IoError("cannot read row_concepts in " + dir);
    std::string line;
    while (std::getline(rc, line)) index.row_concepts.push_back(line);
    std::ifstream ra(fs::path(dir) / "row_aliases.txt");
    if (!ra) throw IoError("cannot read row_aliases in " + dir);
    while (std::getline(ra, line)) index.row_aliases.push_back(line);

    std::ifstream vec(fs::path(dir) / "vectors.f32le", std::ios::binary | std::ios::ate);
    if (!vec) throw IoError("cannot read vectors in " + dir);
    auto bytes = static_cast<std::size_t>(vec.tellg());
    std::size_t expected =
        index.row_concepts.size() * static_cast<std::size_t>(index.dim) * sizeof(float);
    if (bytes != expected) throw ParseError("inconsistent dense index files in " + dir);
    vec.seekg(0);
    index.rows.resize(index.row_concepts.size());
    for (auto& row : index.rows) {
        row.resize(static_cast<std::size_t>(index.dim));
        vec.read(reinterpret_cast<char*>(row.data()),
                 static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    return index;
}

std::unique_ptr<EmbeddingProvider> make_provider(const std::string& spec) {
    auto colon = spec.find(':');
    std::string kind = colon == std::string::npos ? spec : spec.substr(0, colon);
    std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (kind == "hash") {
        int d = 256, n = 3;
        std::stringstream ss(rest);
        std::string kv;
        while (std::getline(ss, kv, ',')) {
            if (kv.empty()) continue;
            auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw ConfigError("bad provider option '" + kv + "'");
            std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
            if (key == "d") d = std::stoi(val);
            else if (key == "n") n = std::stoi(val);
            else throw ConfigError("unknown hash provider option '" + key + "'");
        }
        return std::make_unique<HashNgramProvider>(d, n);
    }
    if (kind == "precomputed") {
        if (rest.empty()) throw ConfigError("precomputed provider needs a path");
        return std::make_unique<PrecomputedProvider>(rest);
    }
    if (kind == "remote") {
        std::string endpoint, name = "unnamed";
        int d = 0;
        std::stringstream ss(rest);
        std::string part;
        while (std::getline(ss, part, ',')) {
            if (part.rfind("dim=", 0) == 0) d = std::stoi(part.substr(4));
            else if (part.rfind("name=", 0) == 0) name = part.substr(5);
            else if (endpoint.empty()) endpoint = part;
            else throw ConfigError("bad remote provider option '" + part + "'");
        }
        if (d < 1) throw ConfigError("remote provider needs dim=<d>");
        return std::make_unique<RemoteProvider>(endpoint, d, name);
    }
    throw ConfigError("unknown provider spec '" + spec + "'");
}

}  // namespace mednorm
