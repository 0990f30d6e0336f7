#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mednorm/candidates.hpp"
#include "mednorm/kb.hpp"

namespace mednorm {

// Contract for dense text embedders. Implementations must be deterministic
// for a fixed identity() and always return vectors of dim().
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual int dim() const = 0;
    virtual std::string identity() const = 0;
    virtual std::vector<std::vector<float>> embed(
        const std::vector<std::string>& texts) const = 0;
};

// Signed-hash character n-gram embedder. Offline stand-in for neural
// encoders: n-grams are hashed into d buckets with a +/-1 sign bit and the
// result is L2-normalized.
class HashNgramProvider : public EmbeddingProvider {
public:
    explicit HashNgramProvider(int dim = 256, int n = 3);
    int dim() const override { return dim_; }
    std::string identity() const override;
    std::vector<std::vector<float>> embed(
        const std::vector<std::string>& texts) const override;

private:
    int dim_;
    int n_;
};

// Looks vectors up in a JSONL file of {"text":..., "vector":[...]} lines.
// Unknown texts are errors naming the text.
class PrecomputedProvider : public EmbeddingProvider {
public:
    explicit PrecomputedProvider(const std::string& jsonl_path);
    int dim() const override { return dim_; }
    std::string identity() const override;
    std::vector<std::vector<float>> embed(
        const std::vector<std::string>& texts) const override;

private:
    std::string path_;
    int dim_ = 0;
    std::map<std::string, std::vector<float>> vectors_;
};

// JSON-over-HTTP provider: POST {"texts":[...]} -> {"vectors":[[...]]}.
// Endpoint like "http://host:port/embed"; retries transient failures up to
// the retry budget before raising a transport error.
class RemoteProvider : public EmbeddingProvider {
public:
    RemoteProvider(std::string endpoint, int dim, std::string model_name,
                   int max_retries = 3);
    int dim() const override { return dim_; }
    std::string identity() const override;
    std::vector<std::vector<float>> embed(
        const std::vector<std::string>& texts) const override;

private:
    std::string endpoint_;
    int dim_;
    std::string model_name_;
    int max_retries_;
};

struct DenseIndex {
    static constexpr int kFormatVersion = 1;

    std::string provider_identity;
    int dim = 0;
    std::string kb_hash;
    std::vector<std::vector<float>> rows;  // L2-normalized, one per alias
    std::vector<std::string> row_concepts;
    std::vector<std::string> row_aliases;
};

// One embedding per text, in input order.
std::vector<std::vector<float>> embed_texts(const EmbeddingProvider& provider,
                                            const std::vector<std::string>& texts);

DenseIndex build_dense_index(const KnowledgeBase& kb,
                             const EmbeddingProvider& provider);

// Cosine ranking with per-concept max dedup; requires the provider identity
// recorded at build time.
std::vector<CandidateList> query_dense(const DenseIndex& index,
                                       const EmbeddingProvider& provider,
                                       const std::vector<std::string>& mentions,
                                       int k);

void save_dense_index(const DenseIndex& index, const std::string& dir);
DenseIndex load_dense_index(const std::string& dir);

// Builds a provider from a spec string: "hash" / "hash:d=256,n=3",
// "precomputed:<path>", "remote:<endpoint>,dim=<d>,name=<id>". The remote
// endpoint may also come from MEDNORM_EMBED_ENDPOINT.
std::unique_ptr<EmbeddingProvider> make_provider(const std::string& spec);

}  // namespace mednorm
