#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hichunk/baselines.hpp"
#include "hichunk/inference.hpp"
#include "hichunk/retrieval.hpp"

namespace hichunk {

enum class TaskType { T0, T1, T2 };

struct QAItem {
    std::string qa_id;
    std::string doc_id;
    std::string question;
    std::string answer;
    std::vector<SentenceId> evidence_sentence_ids;
    TaskType task_type = TaskType::T0;

    bool operator==(const QAItem&) const = default;
};

struct GoldStructure {
    std::string doc_id;
    std::vector<ChunkPoint> points;

    bool operator==(const GoldStructure&) const = default;
};

std::string to_string(TaskType t);
TaskType parse_task_type(const std::string& s);

std::vector<QAItem> load_qa(const std::string& path);
void save_qa(const std::string& path, const std::vector<QAItem>& items);
std::vector<GoldStructure> load_gold(const std::string& path);
void save_gold(const std::string& path, const std::vector<GoldStructure>& gold);

enum class F1Mode { level_1, level_2, level_all };

struct PRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Exact-position matching. Level modes keep only points of that level on both sides;
// level_all ignores levels. Both sides empty scores 1.
PRF chunk_point_f1(const std::vector<ChunkPoint>& predicted, const std::vector<ChunkPoint>& gold, F1Mode mode);

// Lowercase, collapse whitespace.
std::string normalize_for_match(std::string_view text);

// Fraction of the item's evidence sentences whose normalized text occurs in the context.
// An empty evidence list scores 1 and adds a warning.
double evidence_recall(const std::string& context_text, const QAItem& item, const std::vector<Sentence>& sentences,
                       std::vector<std::string>* warnings = nullptr);

enum class Chunker { fc, sc, hc };
enum class Strategy { flat, auto_merge };

std::string to_string(Chunker c);
std::string to_string(Strategy s);
Chunker parse_chunker(const std::string& s);
Strategy parse_strategy(const std::string& s);

struct Method {
    std::string name;
    Chunker chunker = Chunker::fc;
    Strategy strategy = Strategy::flat;
};

// FC200, SC, HC200, HC200+AM.
std::vector<Method> standard_methods();

// Everything a pipeline run needs besides the documents.
struct PipelineEnv {
    GenerationBackend* backend = nullptr;  // required for Chunker::hc
    const Embedder* embedder = nullptr;
    const Tokenizer* tokenizer = &default_tokenizer();
    InferenceConfig inference;
    std::size_t chunk_size = kDefaultChunkSize;
    double sc_percentile = kDefaultBreakpointPercentile;
    int jobs = 1;
};

struct EvalDocument {
    std::string doc_id;
    std::vector<Sentence> sentences;
};

struct ChunkOutcome {
    ChunkedDocument chunked;
    std::vector<ChunkPoint> predicted_points;  // HC: inferred points; baselines: unit starts at level 1
    double wall_seconds = 0.0;
    double backend_seconds = 0.0;
    std::vector<std::string> warnings;
};

ChunkOutcome chunk_document(const EvalDocument& doc, Chunker chunker, const PipelineEnv& env);

AssembledContext retrieve(const ChunkedDocument& doc, const RankedList& ranked, Strategy strategy, std::size_t budget,
                          const Tokenizer& tokenizer = default_tokenizer());

inline const std::vector<std::size_t> kDefaultBudgets{2048, 2560, 3072, 3584, 4096};

struct MetricRow {
    std::string method;
    std::size_t budget = 0;
    double evidence_recall = 0.0;
    std::optional<double> f1_l1;
    std::optional<double> f1_l2;
    std::optional<double> f1_all;
    double wall_time_s = 0.0;
    std::size_t qa_count = 0;
    std::size_t documents_failed = 0;
};

// Chunk-point F1 columns are filled for documents that have an entry in `gold`.
std::vector<MetricRow> budget_sweep(const std::vector<EvalDocument>& docs, const std::vector<QAItem>& qa,
                                    const std::vector<Method>& methods, const std::vector<std::size_t>& budgets,
                                    const PipelineEnv& env, const std::vector<GoldStructure>& gold = {});

struct ChunkingRow {
    std::string method;
    PRF l1;
    PRF l2;
    PRF all;
    std::size_t documents = 0;
    std::size_t documents_failed = 0;
};

// Chunk-point accuracy per chunker, averaged over documents with gold structure.
std::vector<ChunkingRow> chunking_accuracy(const std::vector<EvalDocument>& docs,
                                           const std::vector<GoldStructure>& gold,
                                           const std::vector<Chunker>& chunkers, const PipelineEnv& env);

struct LevelRow {
    std::string setting;  // "L1".."Lk" or "LA"
    int max_level = 0;    // 0 for LA
    double evidence_recall = 0.0;
    std::size_t qa_count = 0;
};

// Evidence recall under auto_merge after truncating the tree to each max level.
std::vector<LevelRow> max_level_ablation(const ChunkTree& tree, const std::vector<QAItem>& qa, int max_levels,
                                         std::size_t budget, const PipelineEnv& env);

// Recall summed over documents, so several trees can be pooled.
std::vector<LevelRow> max_level_ablation(const std::vector<ChunkTree>& trees, const std::vector<QAItem>& qa,
                                         int max_levels, std::size_t budget, const PipelineEnv& env);

struct TimingRow {
    std::string method;
    std::string doc_id;  // empty for the per-method mean row
    double wall_seconds = 0.0;
    double backend_seconds = 0.0;
    double local_seconds = 0.0;
    double chunk_count = 0.0;
};

std::vector<TimingRow> timing_report(const std::vector<EvalDocument>& docs, const std::vector<Chunker>& chunkers,
                                     const PipelineEnv& env);

std::string format_metric_table(const std::vector<MetricRow>& rows);
std::string format_chunking_table(const std::vector<ChunkingRow>& rows);
std::string format_level_table(const std::vector<LevelRow>& rows);
std::string format_timing_table(const std::vector<TimingRow>& rows, bool include_times = true);

}  // namespace hichunk
