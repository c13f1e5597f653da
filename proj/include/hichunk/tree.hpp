#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hichunk/text.hpp"

namespace hichunk {

inline constexpr int kDefaultMaxLevels = 4;
inline constexpr std::size_t kDefaultChunkSize = 200;

struct ChunkPoint {
    SentenceId sentence_id = 0;
    int level = 1;
    bool is_title = false;

    bool operator==(const ChunkPoint&) const = default;
};

using NodeId = int;

// A node owns the half-open sentence range [start_sentence, end_sentence).
struct TreeNode {
    NodeId node_id = 0;
    int level = 0;
    SentenceId start_sentence = 1;
    SentenceId end_sentence = 1;
    bool is_title = false;
    std::vector<NodeId> children;
    std::optional<NodeId> parent;
    std::size_t token_len = 0;

    bool is_leaf() const { return children.empty(); }
    bool operator==(const TreeNode&) const = default;
};

class TreeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Immutable hierarchical document structure. Node 0 is the root (level 0, [1, N+1)).
// Node ids follow pre-order, so iterating nodes() visits them in document order.
class ChunkTree {
public:
    ChunkTree() = default;
    ChunkTree(std::string doc_id, std::vector<Sentence> sentences, std::vector<TreeNode> nodes);

    const std::string& doc_id() const { return doc_id_; }
    const std::vector<Sentence>& sentences() const { return sentences_; }
    const std::vector<TreeNode>& nodes() const { return nodes_; }
    const TreeNode& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    const TreeNode& root() const { return nodes_.front(); }
    std::size_t sentence_count() const { return sentences_.size(); }

    int depth() const;
    std::vector<NodeId> leaves() const;
    // Sentences [start, end) joined by single spaces.
    std::string text(SentenceId start, SentenceId end) const;
    std::string node_text(NodeId id) const { return text(node(id).start_sentence, node(id).end_sentence); }
    // Sum of sentence token_len over [start, end).
    std::size_t range_tokens(SentenceId start, SentenceId end) const;
    // Chunk points reconstructed from non-root node starts (one per sentence, shallowest level).
    std::vector<ChunkPoint> chunk_points() const;

    // Throws TreeError when a structural invariant does not hold.
    void validate() const;

    bool operator==(const ChunkTree&) const = default;

private:
    std::string doc_id_;
    std::vector<Sentence> sentences_;
    std::vector<TreeNode> nodes_;
    std::vector<std::size_t> prefix_tokens_;
};

// Builds the tree from chunk points. A level-l point opens a node at level l and closes
// every open node at level >= l. Skipped levels get an intermediate node starting at the
// same sentence; a parent whose first child starts after it gets a leading filler child.
// Sentence 1 is an implicit level-1 start when no point names it.
ChunkTree build_tree(std::vector<Sentence> sentences, std::vector<ChunkPoint> points,
                     int max_levels = kDefaultMaxLevels, std::string doc_id = {});

struct RetrievalUnit {
    int unit_id = 0;
    std::string text;
    std::size_t token_len = 0;
    NodeId leaf_node = 0;
    int doc_order = 0;
    SentenceId start_sentence = 1;
    SentenceId end_sentence = 1;

    bool operator==(const RetrievalUnit&) const = default;
};

// Greedy whole-sentence packing of each leaf into units of at most `size` tokens.
std::vector<RetrievalUnit> fixed_size_split(const ChunkTree& tree, std::size_t size = kDefaultChunkSize);

// Drops every node deeper than max_level; the ancestor at max_level keeps the range.
ChunkTree truncate_levels(const ChunkTree& tree, int max_level);

inline constexpr int kTreeSchemaVersion = 1;

std::string serialize_tree(const ChunkTree& tree);
ChunkTree deserialize_tree(const std::string& document);

std::string serialize_units(const std::vector<RetrievalUnit>& units);
std::vector<RetrievalUnit> deserialize_units(const std::string& document, const ChunkTree& tree);

}  // namespace hichunk
