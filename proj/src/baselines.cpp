#include "hichunk/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hichunk {

ChunkedDocument fixed_chunk(const std::vector<Sentence>& sentences, std::size_t size, const std::string& doc_id) {
    if (size < 1) throw std::invalid_argument("chunk size must be >= 1");
    auto tree = build_tree(sentences, {}, kDefaultMaxLevels, doc_id);
    auto units = fixed_size_split(tree, size);
    return {std::move(tree), std::move(units)};
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("percentile of an empty set");
    std::sort(values.begin(), values.end());
    double rank = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(rank));
    auto hi = std::min(lo + 1, values.size() - 1);
    double frac = rank - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

ChunkedDocument semantic_chunk(const std::vector<Sentence>& sentences, const Embedder& embedder,
                               double breakpoint_percentile, const std::string& doc_id) {
    if (sentences.size() < 2) throw std::invalid_argument("semantic chunking needs at least two sentences");
    if (!(breakpoint_percentile > 0.0 && breakpoint_percentile <= 100.0))
        throw std::invalid_argument("breakpoint percentile must be in (0, 100]");

    std::vector<std::string> texts;
    texts.reserve(sentences.size());
    for (const auto& s : sentences) texts.push_back(s.text);
    auto vectors = embedder.embed(texts);
    if (vectors.size() != texts.size()) throw EmbedderError("embedder returned the wrong number of vectors");

    std::vector<double> sims;
    for (std::size_t i = 0; i + 1 < vectors.size(); ++i) sims.push_back(cosine(vectors[i], vectors[i + 1]));

    std::vector<ChunkPoint> points{{1, 1, false}};
    if (breakpoint_percentile < 100.0) {
        double threshold = percentile(sims, breakpoint_percentile);
        double top = *std::max_element(sims.begin(), sims.end());
        // Ties at the threshold count as breaks unless every similarity is tied, otherwise a
        // block of zero similarities (common with sparse embedders) hides every seam.
        for (std::size_t i = 0; i < sims.size(); ++i)
            if (sims[i] < threshold || (sims[i] == threshold && threshold < top))
                points.push_back({static_cast<SentenceId>(i) + 2, 1, false});
    }

    auto tree = build_tree(sentences, points, kDefaultMaxLevels, doc_id);
    std::vector<RetrievalUnit> units;
    for (NodeId leaf : tree.leaves()) {
        const auto& n = tree.node(leaf);
        RetrievalUnit u;
        u.unit_id = static_cast<int>(units.size());
        u.doc_order = u.unit_id;
        u.leaf_node = leaf;
        u.start_sentence = n.start_sentence;
        u.end_sentence = n.end_sentence;
        u.text = tree.node_text(leaf);
        u.token_len = n.token_len;
        units.push_back(std::move(u));
    }
    return {std::move(tree), std::move(units)};
}

}  // namespace hichunk
