#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hichunk/embedding.hpp"
#include "hichunk/text.hpp"
#include "hichunk/tree.hpp"

namespace hichunk {

inline constexpr std::size_t kDefaultBudget = 4096;

struct RankedEntry {
    int unit_id = 0;
    double score = 0.0;

    bool operator==(const RankedEntry&) const = default;
};

// Units by descending cosine score, ties by ascending doc_order.
struct RankedList {
    std::string query;
    std::vector<RankedEntry> entries;
};

RankedList rank_units(const std::vector<RetrievalUnit>& units, const std::string& query, const Embedder& embedder);

// Same ranking from precomputed unit vectors (one per unit, in unit order).
RankedList rank_units(const std::vector<RetrievalUnit>& units, const std::vector<Embedding>& unit_vectors,
                      const std::string& query, const Embedder& embedder);

// Adaptive merge threshold: (len(p) / 3) * (1 + tk_cur / T).
double theta_star(double tk_cur, double node_len, double budget);

// The hierarchy Auto-Merge walks: every tree node plus every retrieval unit, with one
// element per distinct sentence range. A unit spanning its whole leaf is that leaf, and
// a node with the same range as its parent is that parent. Element 0 is the root.
class MergeIndex {
public:
    struct Element {
        SentenceId start_sentence = 1;
        SentenceId end_sentence = 1;
        std::size_t token_len = 0;
        int level = 0;
        std::optional<int> parent;
        std::vector<int> children;
        std::optional<NodeId> tree_node;  // shallowest tree node with this range
        std::optional<int> unit_id;
    };

    MergeIndex(const ChunkTree& tree, const std::vector<RetrievalUnit>& units);

    const ChunkTree& tree() const { return *tree_; }
    const std::vector<RetrievalUnit>& units() const { return *units_; }
    const std::vector<Element>& elements() const { return elements_; }
    const Element& element(int id) const { return elements_.at(static_cast<std::size_t>(id)); }
    int element_for_unit(int unit_id) const;

    bool covers(int ancestor, int descendant) const;
    std::string label(int id) const;

private:
    const ChunkTree* tree_;
    const std::vector<RetrievalUnit>* units_;
    std::vector<Element> elements_;
    std::vector<int> unit_element_;
};

// Elements selected so far, in insertion order. A merge puts the parent where the first
// member it covers was and removes the others, so no member is an ancestor of another.
using RetrievedSet = std::vector<int>;

struct MergeConditions {
    bool enough_children = false;  // |ret ∩ children(p)| >= 2
    bool enough_length = false;    // sum len(ret ∩ children(p)) >= theta*
    bool fits_budget = false;      // T - tk_cur >= len(p)
    double theta = 0.0;
    std::size_t covered_len = 0;

    bool all() const { return enough_children && enough_length && fits_budget; }
};

MergeConditions check_merge_conditions(const MergeIndex& index, const RetrievedSet& retrieved, int parent,
                                       std::size_t tk_cur, std::size_t budget);

std::size_t retrieved_tokens(const MergeIndex& index, const RetrievedSet& retrieved);

struct AuditEvent {
    enum class Kind { add, covered, merge, reject, budget_stop };
    Kind kind = Kind::add;
    int rank = 0;  // 1-based position in the ranked list
    int element = 0;
    std::size_t tk_cur = 0;
    MergeConditions conditions;
};

const char* to_string(AuditEvent::Kind kind);

struct ContextPart {
    int element = 0;
    SentenceId start_sentence = 1;
    SentenceId end_sentence = 1;  // exclusive; includes a partially kept sentence
    std::string text;
    std::size_t token_len = 0;
    bool truncated = false;

    bool operator==(const ContextPart&) const = default;
};

struct AssembledContext {
    std::string text;  // parts in document order, separated by a blank line
    std::size_t token_len = 0;
    std::vector<ContextPart> parts;  // document order
    RetrievedSet retrieved;          // insertion order, before truncation
    bool truncated = false;
    std::vector<AuditEvent> audit;
};

inline constexpr const char* kContextDelimiter = "\n\n";

// Called with the retrieved set after every add and merge step.
using RetrievalObserver = std::function<void(const RetrievedSet&)>;

AssembledContext auto_merge(const RankedList& ranked, const MergeIndex& index, std::size_t budget,
                            const Tokenizer& tokenizer = default_tokenizer(), const RetrievalObserver& observer = {});

// Units in rank order until the budget is reached, no merging.
AssembledContext flat_retrieve(const RankedList& ranked, const MergeIndex& index, std::size_t budget,
                               const Tokenizer& tokenizer = default_tokenizer());

// Keeps members in `retrieved` order until `budget` tokens, cutting the first member that
// does not fit at a sentence boundary and then inside the sentence that overflows.
AssembledContext build_context(const MergeIndex& index, const RetrievedSet& retrieved, std::size_t budget,
                               const Tokenizer& tokenizer = default_tokenizer());

// Structured audit document (JSON) for a retrieval.
std::string audit_to_json(const MergeIndex& index, const AssembledContext& context, const std::string& doc_id,
                          const std::string& query, std::size_t budget, const std::string& strategy);

}  // namespace hichunk
