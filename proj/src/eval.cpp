#include "hichunk/eval.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "parallel.hpp"

namespace hichunk {

using nlohmann::json;

std::string to_string(TaskType t) {
    switch (t) {
        case TaskType::T0: return "T0";
        case TaskType::T1: return "T1";
        case TaskType::T2: return "T2";
    }
    return "T0";
}

TaskType parse_task_type(const std::string& s) {
    if (s == "T0") return TaskType::T0;
    if (s == "T1") return TaskType::T1;
    if (s == "T2") return TaskType::T2;
    throw std::invalid_argument("unknown task type: " + s);
}

namespace {

template <class Fn>
void for_each_jsonl(const std::string& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            fn(json::parse(line));
        } catch (const json::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

double mean(double sum, std::size_t n) { return n == 0 ? 0.0 : sum / static_cast<double>(n); }

std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace

std::vector<QAItem> load_qa(const std::string& path) {
    std::vector<QAItem> items;
    for_each_jsonl(path, [&](const json& j) {
        QAItem q;
        q.qa_id = j.at("qa_id").get<std::string>();
        q.doc_id = j.at("doc_id").get<std::string>();
        q.question = j.at("question").get<std::string>();
        q.answer = j.value("answer", std::string{});
        q.evidence_sentence_ids = j.at("evidence_sentence_ids").get<std::vector<SentenceId>>();
        q.task_type = parse_task_type(j.value("task_type", std::string("T0")));
        if (q.task_type != TaskType::T0 && q.evidence_sentence_ids.empty())
            throw std::invalid_argument("qa " + q.qa_id + ": T1/T2 items need evidence");
        items.push_back(std::move(q));
    });
    return items;
}

void save_qa(const std::string& path, const std::vector<QAItem>& items) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& q : items)
        out << json{{"qa_id", q.qa_id},
                    {"doc_id", q.doc_id},
                    {"question", q.question},
                    {"answer", q.answer},
                    {"evidence_sentence_ids", q.evidence_sentence_ids},
                    {"task_type", to_string(q.task_type)}}
                   .dump()
            << "\n";
}

std::vector<GoldStructure> load_gold(const std::string& path) {
    std::vector<GoldStructure> gold;
    for_each_jsonl(path, [&](const json& j) {
        GoldStructure g;
        g.doc_id = j.at("doc_id").get<std::string>();
        for (const auto& p : j.at("points")) {
            if (!p.is_array() || p.size() != 3) throw std::invalid_argument("gold points are [sentence_id, level, is_title]");
            g.points.push_back({p[0].get<SentenceId>(), p[1].get<int>(), p[2].get<bool>()});
        }
        gold.push_back(std::move(g));
    });
    return gold;
}

void save_gold(const std::string& path, const std::vector<GoldStructure>& gold) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& g : gold) {
        json points = json::array();
        for (const auto& p : g.points) points.push_back(json::array({p.sentence_id, p.level, p.is_title}));
        out << json{{"doc_id", g.doc_id}, {"points", std::move(points)}}.dump() << "\n";
    }
}

PRF chunk_point_f1(const std::vector<ChunkPoint>& predicted, const std::vector<ChunkPoint>& gold, F1Mode mode) {
    auto select = [mode](const std::vector<ChunkPoint>& points) {
        std::set<SentenceId> ids;
        for (const auto& p : points) {
            if (mode == F1Mode::level_1 && p.level != 1) continue;
            if (mode == F1Mode::level_2 && p.level != 2) continue;
            ids.insert(p.sentence_id);
        }
        return ids;
    };
    auto pred = select(predicted);
    auto ref = select(gold);
    if (pred.empty() && ref.empty()) return {1.0, 1.0, 1.0};
    std::size_t matched = 0;
    for (auto id : pred) matched += ref.count(id);
    PRF r;
    r.precision = pred.empty() ? 0.0 : static_cast<double>(matched) / static_cast<double>(pred.size());
    r.recall = ref.empty() ? 0.0 : static_cast<double>(matched) / static_cast<double>(ref.size());
    r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    return r;
}

std::string normalize_for_match(std::string_view text) {
    auto s = normalize_whitespace(text);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

double evidence_recall(const std::string& context_text, const QAItem& item, const std::vector<Sentence>& sentences,
                       std::vector<std::string>* warnings) {
    if (item.evidence_sentence_ids.empty()) {
        if (warnings) warnings->push_back("qa " + item.qa_id + " has no evidence; recall counted as 1");
        return 1.0;
    }
    auto ctx = normalize_for_match(context_text);
    std::size_t found = 0;
    for (auto id : item.evidence_sentence_ids) {
        if (id < 1 || static_cast<std::size_t>(id) > sentences.size())
            throw std::invalid_argument("qa " + item.qa_id + " cites missing sentence " + std::to_string(id));
        if (ctx.find(normalize_for_match(sentences[static_cast<std::size_t>(id - 1)].text)) != std::string::npos)
            ++found;
    }
    return static_cast<double>(found) / static_cast<double>(item.evidence_sentence_ids.size());
}

std::string to_string(Chunker c) {
    switch (c) {
        case Chunker::fc: return "fc";
        case Chunker::sc: return "sc";
        case Chunker::hc: return "hc";
    }
    return "fc";
}

std::string to_string(Strategy s) { return s == Strategy::flat ? "flat" : "auto_merge"; }

Chunker parse_chunker(const std::string& s) {
    if (s == "fc") return Chunker::fc;
    if (s == "sc") return Chunker::sc;
    if (s == "hc") return Chunker::hc;
    throw std::invalid_argument("unknown chunking method: " + s);
}

Strategy parse_strategy(const std::string& s) {
    if (s == "flat") return Strategy::flat;
    if (s == "auto_merge") return Strategy::auto_merge;
    throw std::invalid_argument("unknown retrieval strategy: " + s);
}

std::vector<Method> standard_methods() {
    return {{"FC200", Chunker::fc, Strategy::flat},
            {"SC", Chunker::sc, Strategy::flat},
            {"HC200", Chunker::hc, Strategy::flat},
            {"HC200+AM", Chunker::hc, Strategy::auto_merge}};
}

ChunkOutcome chunk_document(const EvalDocument& doc, Chunker chunker, const PipelineEnv& env) {
    ChunkOutcome out;
    auto t0 = std::chrono::steady_clock::now();
    auto unit_starts = [](const std::vector<RetrievalUnit>& units) {
        std::vector<ChunkPoint> pts;
        for (const auto& u : units) pts.push_back({u.start_sentence, 1, false});
        return pts;
    };
    switch (chunker) {
        case Chunker::fc:
            out.chunked = fixed_chunk(doc.sentences, env.chunk_size, doc.doc_id);
            out.predicted_points = unit_starts(out.chunked.units);
            break;
        case Chunker::sc: {
            if (!env.embedder) throw std::invalid_argument("semantic chunking needs an embedder");
            if (doc.sentences.size() < 2)
                out.chunked = fixed_chunk(doc.sentences, env.chunk_size, doc.doc_id);
            else
                out.chunked = semantic_chunk(doc.sentences, *env.embedder, env.sc_percentile, doc.doc_id);
            out.predicted_points = unit_starts(out.chunked.units);
            break;
        }
        case Chunker::hc: {
            if (!env.backend) throw std::invalid_argument("hierarchical chunking needs a generation backend");
            auto inferred = hichunk_document(doc.sentences, *env.backend, env.inference, doc.doc_id);
            out.backend_seconds = inferred.backend_seconds;
            out.warnings = std::move(inferred.warnings);
            out.predicted_points = inferred.points.flatten();
            auto units = fixed_size_split(inferred.tree, env.chunk_size);
            out.chunked = {std::move(inferred.tree), std::move(units)};
            break;
        }
    }
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

AssembledContext retrieve(const ChunkedDocument& doc, const RankedList& ranked, Strategy strategy, std::size_t budget,
                          const Tokenizer& tokenizer) {
    MergeIndex index(doc.tree, doc.units);
    return strategy == Strategy::flat ? flat_retrieve(ranked, index, budget, tokenizer)
                                      : auto_merge(ranked, index, budget, tokenizer);
}

namespace {

std::map<std::string, std::vector<const QAItem*>> group_qa(const std::vector<QAItem>& qa) {
    std::map<std::string, std::vector<const QAItem*>> by_doc;
    for (const auto& q : qa) by_doc[q.doc_id].push_back(&q);
    return by_doc;
}

std::vector<Embedding> embed_units(const ChunkedDocument& doc, const Embedder& embedder) {
    std::vector<std::string> texts;
    texts.reserve(doc.units.size());
    for (const auto& u : doc.units) texts.push_back(u.text);
    return embedder.embed(texts);
}

}  // namespace

std::vector<MetricRow> budget_sweep(const std::vector<EvalDocument>& docs, const std::vector<QAItem>& qa,
                                    const std::vector<Method>& methods, const std::vector<std::size_t>& budgets,
                                    const PipelineEnv& env, const std::vector<GoldStructure>& gold) {
    if (!env.embedder) throw std::invalid_argument("budget sweep needs an embedder");
    std::map<std::string, const GoldStructure*> gold_by_doc;
    for (const auto& g : gold) gold_by_doc[g.doc_id] = &g;
    if (budgets.empty()) throw std::invalid_argument("budget sweep needs at least one budget");
    auto by_doc = group_qa(qa);

    struct DocResult {
        std::vector<std::vector<double>> recall_sum;  // [method][budget]
        std::vector<bool> failed;
        std::vector<double> wall;
        std::vector<std::array<double, 3>> f1;  // [method] -> l1, l2, all
        bool has_gold = false;
        std::size_t qa_count = 0;
    };
    std::vector<DocResult> results(docs.size());

    detail::parallel_for(docs.size(), env.jobs, [&](std::size_t d) {
        const auto& doc = docs[d];
        auto& r = results[d];
        r.recall_sum.assign(methods.size(), std::vector<double>(budgets.size(), 0.0));
        r.failed.assign(methods.size(), false);
        r.wall.assign(methods.size(), 0.0);
        r.f1.assign(methods.size(), {0.0, 0.0, 0.0});
        auto it = by_doc.find(doc.doc_id);
        if (it == by_doc.end()) return;
        r.qa_count = it->second.size();
        auto g = gold_by_doc.find(doc.doc_id);
        r.has_gold = g != gold_by_doc.end();

        // Methods sharing a chunker reuse one chunking run.
        std::map<Chunker, std::optional<ChunkOutcome>> chunked;
        std::map<Chunker, std::vector<Embedding>> vectors;
        for (std::size_t m = 0; m < methods.size(); ++m) {
            const auto& method = methods[m];
            try {
                auto& slot = chunked[method.chunker];
                if (!slot) {
                    slot = chunk_document(doc, method.chunker, env);
                    vectors[method.chunker] = embed_units(slot->chunked, *env.embedder);
                }
                r.wall[m] = slot->wall_seconds;
                if (r.has_gold) {
                    const auto& pred = slot->predicted_points;
                    const auto& gp = g->second->points;
                    r.f1[m] = {chunk_point_f1(pred, gp, F1Mode::level_1).f1, chunk_point_f1(pred, gp, F1Mode::level_2).f1,
                               chunk_point_f1(pred, gp, F1Mode::level_all).f1};
                }
                MergeIndex index(slot->chunked.tree, slot->chunked.units);
                for (const auto* item : it->second) {
                    auto ranked = rank_units(slot->chunked.units, vectors[method.chunker], item->question, *env.embedder);
                    for (std::size_t b = 0; b < budgets.size(); ++b) {
                        auto ctx = method.strategy == Strategy::flat
                                       ? flat_retrieve(ranked, index, budgets[b], *env.tokenizer)
                                       : auto_merge(ranked, index, budgets[b], *env.tokenizer);
                        r.recall_sum[m][b] += evidence_recall(ctx.text, *item, doc.sentences);
                    }
                }
            } catch (const std::exception&) {
                r.failed[m] = true;
                std::fill(r.recall_sum[m].begin(), r.recall_sum[m].end(), 0.0);
            }
        }
    });

    std::vector<MetricRow> rows;
    for (std::size_t m = 0; m < methods.size(); ++m) {
        for (std::size_t b = 0; b < budgets.size(); ++b) {
            MetricRow row;
            row.method = methods[m].name;
            row.budget = budgets[b];
            double sum = 0.0, wall = 0.0;
            std::array<double, 3> f1{0.0, 0.0, 0.0};
            std::size_t timed = 0, scored = 0;
            for (const auto& r : results) {
                if (r.failed.empty() || r.qa_count == 0) continue;
                if (r.failed[m]) {
                    ++row.documents_failed;
                    continue;
                }
                sum += r.recall_sum[m][b];
                row.qa_count += r.qa_count;
                wall += r.wall[m];
                ++timed;
                if (r.has_gold) {
                    for (int k = 0; k < 3; ++k) f1[k] += r.f1[m][k];
                    ++scored;
                }
            }
            row.evidence_recall = mean(sum, row.qa_count);
            if (scored) {
                row.f1_l1 = mean(f1[0], scored);
                row.f1_l2 = mean(f1[1], scored);
                row.f1_all = mean(f1[2], scored);
            }
            row.wall_time_s = mean(wall, timed);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::vector<ChunkingRow> chunking_accuracy(const std::vector<EvalDocument>& docs,
                                           const std::vector<GoldStructure>& gold,
                                           const std::vector<Chunker>& chunkers, const PipelineEnv& env) {
    std::map<std::string, const GoldStructure*> gold_by_doc;
    for (const auto& g : gold) gold_by_doc[g.doc_id] = &g;

    struct Scores {
        std::vector<std::optional<std::array<PRF, 3>>> per_chunker;
    };
    std::vector<Scores> results(docs.size());
    detail::parallel_for(docs.size(), env.jobs, [&](std::size_t d) {
        auto it = gold_by_doc.find(docs[d].doc_id);
        if (it == gold_by_doc.end()) return;
        auto& s = results[d].per_chunker;
        s.resize(chunkers.size());
        for (std::size_t c = 0; c < chunkers.size(); ++c) {
            try {
                auto out = chunk_document(docs[d], chunkers[c], env);
                s[c] = std::array<PRF, 3>{chunk_point_f1(out.predicted_points, it->second->points, F1Mode::level_1),
                                          chunk_point_f1(out.predicted_points, it->second->points, F1Mode::level_2),
                                          chunk_point_f1(out.predicted_points, it->second->points, F1Mode::level_all)};
            } catch (const std::exception&) {
                s[c].reset();
            }
        }
    });

    std::vector<ChunkingRow> rows;
    for (std::size_t c = 0; c < chunkers.size(); ++c) {
        ChunkingRow row;
        row.method = to_string(chunkers[c]);
        std::array<PRF, 3> sum{};
        for (const auto& r : results) {
            if (r.per_chunker.empty()) continue;
            if (!r.per_chunker[c]) {
                ++row.documents_failed;
                continue;
            }
            ++row.documents;
            for (std::size_t k = 0; k < 3; ++k) {
                sum[k].precision += (*r.per_chunker[c])[k].precision;
                sum[k].recall += (*r.per_chunker[c])[k].recall;
                sum[k].f1 += (*r.per_chunker[c])[k].f1;
            }
        }
        auto avg = [&](const PRF& p) {
            return PRF{mean(p.precision, row.documents), mean(p.recall, row.documents), mean(p.f1, row.documents)};
        };
        row.l1 = avg(sum[0]);
        row.l2 = avg(sum[1]);
        row.all = avg(sum[2]);
        rows.push_back(row);
    }
    return rows;
}

std::vector<LevelRow> max_level_ablation(const ChunkTree& tree, const std::vector<QAItem>& qa, int max_levels,
                                         std::size_t budget, const PipelineEnv& env) {
    return max_level_ablation(std::vector<ChunkTree>{tree}, qa, max_levels, budget, env);
}

std::vector<LevelRow> max_level_ablation(const std::vector<ChunkTree>& trees, const std::vector<QAItem>& qa,
                                         int max_levels, std::size_t budget, const PipelineEnv& env) {
    if (!env.embedder) throw std::invalid_argument("level ablation needs an embedder");
    if (max_levels < 1) throw std::invalid_argument("max_levels must be >= 1");
    std::vector<LevelRow> rows;
    for (int level = 1; level <= max_levels + 1; ++level) {
        LevelRow row;
        row.max_level = level <= max_levels ? level : 0;
        row.setting = row.max_level ? "L" + std::to_string(level) : "LA";
        rows.push_back(row);
    }
    std::vector<std::vector<double>> sums(trees.size(), std::vector<double>(rows.size(), 0.0));
    std::vector<std::size_t> counts(trees.size(), 0);
    detail::parallel_for(trees.size(), env.jobs, [&](std::size_t t) {
        const auto& tree = trees[t];
        std::vector<const QAItem*> items;
        for (const auto& q : qa)
            if (tree.doc_id().empty() || q.doc_id == tree.doc_id()) items.push_back(&q);
        counts[t] = items.size();
        if (items.empty()) return;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            auto truncated = rows[r].max_level ? truncate_levels(tree, rows[r].max_level) : tree;
            auto units = fixed_size_split(truncated, env.chunk_size);
            std::vector<std::string> texts;
            for (const auto& u : units) texts.push_back(u.text);
            auto vectors = env.embedder->embed(texts);
            MergeIndex index(truncated, units);
            for (const auto* item : items) {
                auto ranked = rank_units(units, vectors, item->question, *env.embedder);
                auto ctx = auto_merge(ranked, index, budget, *env.tokenizer);
                sums[t][r] += evidence_recall(ctx.text, *item, truncated.sentences());
            }
        }
    });
    for (std::size_t r = 0; r < rows.size(); ++r) {
        double sum = 0.0;
        for (std::size_t t = 0; t < trees.size(); ++t) {
            sum += sums[t][r];
            rows[r].qa_count += counts[t];
        }
        rows[r].evidence_recall = mean(sum, rows[r].qa_count);
    }
    return rows;
}

std::vector<TimingRow> timing_report(const std::vector<EvalDocument>& docs, const std::vector<Chunker>& chunkers,
                                     const PipelineEnv& env) {
    std::vector<TimingRow> rows;
    for (auto chunker : chunkers) {
        TimingRow mean_row;
        mean_row.method = to_string(chunker);
        std::vector<TimingRow> per_doc(docs.size());
        detail::parallel_for(docs.size(), env.jobs, [&](std::size_t d) {
            auto out = chunk_document(docs[d], chunker, env);
            per_doc[d] = {to_string(chunker),
                          docs[d].doc_id,
                          out.wall_seconds,
                          out.backend_seconds,
                          std::max(0.0, out.wall_seconds - out.backend_seconds),
                          static_cast<double>(out.chunked.units.size())};
        });
        for (const auto& r : per_doc) {
            mean_row.wall_seconds += r.wall_seconds;
            mean_row.backend_seconds += r.backend_seconds;
            mean_row.local_seconds += r.local_seconds;
            mean_row.chunk_count += r.chunk_count;
        }
        auto n = docs.size();
        mean_row.wall_seconds = mean(mean_row.wall_seconds, n);
        mean_row.backend_seconds = mean(mean_row.backend_seconds, n);
        mean_row.local_seconds = mean(mean_row.local_seconds, n);
        mean_row.chunk_count = mean(mean_row.chunk_count, n);
        rows.insert(rows.end(), per_doc.begin(), per_doc.end());
        rows.push_back(mean_row);
    }
    return rows;
}

std::string format_metric_table(const std::vector<MetricRow>& rows) {
    auto opt = [](const std::optional<double>& v) { return v ? fixed(*v) : std::string("-"); };
    std::string out = "method\tbudget\tevidence_recall\tf1_l1\tf1_l2\tf1_all\tqa_count\tdocuments_failed\n";
    for (const auto& r : rows)
        out += r.method + "\t" + std::to_string(r.budget) + "\t" + fixed(r.evidence_recall) + "\t" + opt(r.f1_l1) +
               "\t" + opt(r.f1_l2) + "\t" + opt(r.f1_all) + "\t" + std::to_string(r.qa_count) + "\t" +
               std::to_string(r.documents_failed) + "\n";
    return out;
}

std::string format_chunking_table(const std::vector<ChunkingRow>& rows) {
    std::string out = "method\tf1_l1\tf1_l2\tf1_all\tp_all\tr_all\tdocuments\tdocuments_failed\n";
    for (const auto& r : rows)
        out += r.method + "\t" + fixed(r.l1.f1) + "\t" + fixed(r.l2.f1) + "\t" + fixed(r.all.f1) + "\t" +
               fixed(r.all.precision) + "\t" + fixed(r.all.recall) + "\t" + std::to_string(r.documents) + "\t" +
               std::to_string(r.documents_failed) + "\n";
    return out;
}

std::string format_level_table(const std::vector<LevelRow>& rows) {
    std::string out = "setting\tevidence_recall\tqa_count\n";
    for (const auto& r : rows) out += r.setting + "\t" + fixed(r.evidence_recall) + "\t" + std::to_string(r.qa_count) + "\n";
    return out;
}

std::string format_timing_table(const std::vector<TimingRow>& rows, bool include_times) {
    std::string out = "method\tdoc_id\twall_s\tbackend_s\tlocal_s\tchunks\n";
    for (const auto& r : rows) {
        auto t = [&](double v) { return include_times ? fixed(v, 6) : std::string("-"); };
        out += r.method + "\t" + (r.doc_id.empty() ? std::string("MEAN") : r.doc_id) + "\t" + t(r.wall_seconds) +
               "\t" + t(r.backend_seconds) + "\t" + t(r.local_seconds) + "\t" + fixed(r.chunk_count, 2) + "\n";
    }
    return out;
}

}  // namespace hichunk
