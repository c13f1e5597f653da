#pragma once

#include <cstddef>
#include <vector>

#include "hichunk/embedding.hpp"
#include "hichunk/tree.hpp"

namespace hichunk {

// A chunked document: its tree and the retrieval units carved from it.
struct ChunkedDocument {
    ChunkTree tree;
    std::vector<RetrievalUnit> units;
};

// Fixed-size baseline: greedy sentence packing over the whole document. The tree is a
// single level-1 leaf so the units still link to a node.
ChunkedDocument fixed_chunk(const std::vector<Sentence>& sentences, std::size_t size = kDefaultChunkSize,
                            const std::string& doc_id = {});

inline constexpr double kDefaultBreakpointPercentile = 10.0;

// Semantic baseline: a boundary goes before sentence i+1 wherever cos(e_i, e_{i+1}) is
// below the given percentile (linear interpolation) of all adjacent similarities, or equal
// to it while some similarity is higher. Percentile 100 disables boundaries. Each span becomes one level-1 leaf and one unit.
ChunkedDocument semantic_chunk(const std::vector<Sentence>& sentences, const Embedder& embedder,
                               double breakpoint_percentile = kDefaultBreakpointPercentile,
                               const std::string& doc_id = {});

// Linear-interpolated percentile of `values` (p in [0, 100]).
double percentile(std::vector<double> values, double p);

}  // namespace hichunk
