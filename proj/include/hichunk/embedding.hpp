#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

namespace hichunk {

// Stored sparsely so hashed bag-of-words vectors and dense model vectors share a type.
using Embedding = Eigen::SparseVector<double>;

class EmbedderError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<Embedding> embed(const std::vector<std::string>& texts) const = 0;
    virtual Eigen::Index dimension() const = 0;
    virtual std::string name() const = 0;
};

// Cosine similarity; 0 when either vector is zero.
double cosine(const Embedding& a, const Embedding& b);

// Term-frequency vector over lowercased alphanumeric words, hashed into 2^30 buckets.
class BagOfWordsEmbedder final : public Embedder {
public:
    static constexpr Eigen::Index kDimension = Eigen::Index{1} << 30;

    std::vector<Embedding> embed(const std::vector<std::string>& texts) const override;
    Eigen::Index dimension() const override { return kDimension; }
    std::string name() const override { return "bow"; }

    Embedding embed_one(const std::string& text) const;
};

// OpenAI-style embeddings endpoint: POST {model, input[]} -> {data: [{embedding: []}]}.
struct HttpEmbedderConfig {
    std::string url;  // e.g. http://localhost:8080/v1/embeddings
    std::string model;
    std::string api_key;  // resolved from the environment by the caller; may be empty
    std::chrono::milliseconds timeout{30000};
    std::size_t batch_size = 64;
};

class HttpEmbedder final : public Embedder {
public:
    explicit HttpEmbedder(HttpEmbedderConfig config);

    std::vector<Embedding> embed(const std::vector<std::string>& texts) const override;
    Eigen::Index dimension() const override { return dimension_; }
    std::string name() const override { return "http:" + config_.model; }

private:
    HttpEmbedderConfig config_;
    mutable std::atomic<Eigen::Index> dimension_{0};
};

std::unique_ptr<Embedder> make_embedder(const std::string& kind, const HttpEmbedderConfig& http = {});

}  // namespace hichunk
