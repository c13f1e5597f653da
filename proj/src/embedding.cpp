#include "hichunk/embedding.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>

#include <json.hpp>

#include "http_client.hpp"

namespace hichunk {

double cosine(const Embedding& a, const Embedding& b) {
    double na = a.norm();
    double nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return a.dot(b) / (na * nb);
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

bool is_word_char(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

}  // namespace

Embedding BagOfWordsEmbedder::embed_one(const std::string& text) const {
    std::map<Eigen::Index, double> counts;
    std::string word;
    auto flush = [&] {
        if (word.empty()) return;
        counts[static_cast<Eigen::Index>(fnv1a(word) % static_cast<std::uint64_t>(kDimension))] += 1.0;
        word.clear();
    };
    for (unsigned char c : text) {
        if (is_word_char(c))
            word += static_cast<char>(std::tolower(c));
        else
            flush();
    }
    flush();
    Embedding v(kDimension);
    v.reserve(static_cast<Eigen::Index>(counts.size()));
    for (const auto& [idx, count] : counts) v.insertBack(idx) = count;
    return v;
}

std::vector<Embedding> BagOfWordsEmbedder::embed(const std::vector<std::string>& texts) const {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
}

HttpEmbedder::HttpEmbedder(HttpEmbedderConfig config) : config_(std::move(config)) {
    if (config_.url.empty()) throw EmbedderError("http embedder needs a url");
    if (config_.batch_size == 0) config_.batch_size = 1;
}

std::vector<Embedding> HttpEmbedder::embed(const std::vector<std::string>& texts) const {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (std::size_t begin = 0; begin < texts.size(); begin += config_.batch_size) {
        std::size_t end = std::min(texts.size(), begin + config_.batch_size);
        nlohmann::json req{{"model", config_.model},
                           {"input", std::vector<std::string>(texts.begin() + static_cast<std::ptrdiff_t>(begin),
                                                              texts.begin() + static_cast<std::ptrdiff_t>(end))}};
        std::string body;
        try {
            body = detail::post_json(config_.url, req.dump(), config_.api_key, config_.timeout);
        } catch (const detail::HttpError& e) {
            throw EmbedderError(e.what());
        }
        try {
            auto j = nlohmann::json::parse(body);
            const auto& data = j.at("data");
            if (data.size() != end - begin) throw EmbedderError("embedding count does not match input count");
            for (const auto& item : data) {
                auto values = item.at("embedding").get<std::vector<double>>();
                auto dim = static_cast<Eigen::Index>(values.size());
                Eigen::Index expected = 0;
                if (!dimension_.compare_exchange_strong(expected, dim) && expected != dim)
                    throw EmbedderError("inconsistent embedding dimension");
                Embedding v(dim);
                for (Eigen::Index i = 0; i < dim; ++i) {
                    double x = values[static_cast<std::size_t>(i)];
                    if (!std::isfinite(x)) throw EmbedderError("non-finite embedding value");
                    if (x != 0.0) v.insertBack(i) = x;
                }
                out.push_back(std::move(v));
            }
        } catch (const nlohmann::json::exception& e) {
            throw EmbedderError(std::string("malformed embedding response: ") + e.what());
        }
    }
    return out;
}

std::unique_ptr<Embedder> make_embedder(const std::string& kind, const HttpEmbedderConfig& http) {
    if (kind == "bow") return std::make_unique<BagOfWordsEmbedder>();
    if (kind == "http") return std::make_unique<HttpEmbedder>(http);
    throw EmbedderError("unknown embedder kind: " + kind);
}

}  // namespace hichunk
