#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hichunk/backend.hpp"
#include "hichunk/tree.hpp"

namespace hichunk {

struct InferenceConfig {
    std::size_t window_token_limit = 16384;
    int max_levels = kDefaultMaxLevels;
    RetryPolicy retry;
};

// Chunk points grouped by level: levels[0] holds level 1. Each list is sorted by sentence
// id without duplicates.
struct ChunkPointSet {
    std::vector<std::vector<ChunkPoint>> levels;

    explicit ChunkPointSet(int max_levels = kDefaultMaxLevels) : levels(static_cast<std::size_t>(max_levels)) {}

    const std::vector<ChunkPoint>& level(int l) const { return levels.at(static_cast<std::size_t>(l - 1)); }
    std::vector<ChunkPoint> flatten() const;  // sorted by (sentence_id, level)
    bool empty() const;

    bool operator==(const ChunkPointSet&) const = default;
};

ChunkPointSet group_by_level(const std::vector<ChunkPoint>& points, int max_levels);

// One-past-the-end sentence id of the longest window starting at `start` whose tokens fit
// in `limit`. A single oversized sentence is admitted alone.
SentenceId select_window(const std::vector<Sentence>& sentences, SentenceId start, std::size_t limit);

struct ResidualLine {
    int level = 1;
    std::string text;

    bool operator==(const ResidualLine&) const = default;
};
using ResidualLines = std::vector<ResidualLine>;

// Instruction the chunking model was trained with.
extern const std::string_view kChunkingInstruction;

// Instruction, then ">>> Input text:", then residual context lines "(L<level>) @ <text>",
// then the window as "<i> @ <text>" with i starting at 1.
std::string build_prompt(std::span<const Sentence> window, const ResidualLines& residual = {});

struct ParseResult {
    std::vector<ChunkPoint> points;  // document coordinates, sorted, one per sentence
    std::vector<std::string> warnings;
};

// Parses "<line>, <level>, <True|False>" lines. Malformed and out-of-window lines are
// skipped with a warning; levels above max_levels are clamped with a warning.
ParseResult parse_chunk_output(std::string_view raw, SentenceId window_offset, int window_size,
                               int max_levels = kDefaultMaxLevels);

// Drops global points at ids >= window_start and adds the local ones.
ChunkPointSet merge_points(const ChunkPointSet& global, const ChunkPointSet& local, SentenceId window_start);

// For each level, the most recent point whose segment is still open, down to the deepest
// open level. Throws std::invalid_argument when level 1 is empty.
ResidualLines get_residual_lines(const ChunkPointSet& global, const std::vector<Sentence>& sentences);

struct IterationTrace {
    SentenceId window_start = 0;
    SentenceId window_end = 0;
    std::size_t residual_lines = 0;
    std::size_t local_level1 = 0;
    SentenceId next_start = 0;
    bool restarted = false;  // next window begins at the last local level-1 point
};

struct InferenceResult {
    ChunkTree tree;
    ChunkPointSet points;
    std::vector<IterationTrace> trace;
    std::vector<std::string> warnings;
    std::size_t backend_calls = 0;
    double backend_seconds = 0.0;
};

class InferenceError : public std::runtime_error {
public:
    InferenceError(const std::string& what, ChunkPointSet partial)
        : std::runtime_error(what), partial_(std::move(partial)) {}
    const ChunkPointSet& partial() const { return partial_; }

private:
    ChunkPointSet partial_;
};

// Iterative windowed inference over a whole document.
InferenceResult hichunk_document(const std::vector<Sentence>& sentences, GenerationBackend& backend,
                                 const InferenceConfig& config = {}, const std::string& doc_id = {});

}  // namespace hichunk
