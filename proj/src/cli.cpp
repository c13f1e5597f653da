#include "hichunk/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <algorithm>
#include <iostream>
#include <sstream>

#include "hichunk/config.hpp"
#include "hichunk/synth.hpp"
#include "parallel.hpp"

namespace hichunk {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Raised for failures that map to a specific exit code.
struct CliError : std::runtime_error {
    CliError(int code, const std::string& what) : std::runtime_error(what), code(code) {}
    int code;
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

// File-name stem for a document id. Path separators and other awkward bytes become '_'.
std::string file_stem(const std::string& doc_id) {
    std::string s;
    for (char c : doc_id) {
        bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
        s += ok ? c : '_';
    }
    if (s.empty() || s[0] == '.') s.insert(s.begin(), '_');
    return s;
}

std::string flag_name(const std::string& key) {
    std::string s = key;
    std::replace(s.begin(), s.end(), '_', '-');
    return "--" + s;
}

std::vector<EvalDocument> load_eval_documents(const std::string& path, const RunConfig& config) {
    const auto& tok = get_tokenizer(config.tokenizer);
    std::vector<EvalDocument> docs;
    for (auto& d : load_documents(path)) docs.push_back({d.doc_id, split_sentences(d.text, config.max_sentence_chars, tok)});
    return docs;
}

json prf_json(const PRF& p) { return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}}; }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

struct Globals {
    std::string config_path;
    int jobs = 0;
    std::uint64_t seed = 0;
    std::string out;
    std::map<std::string, std::string> flags;
};

RunConfig resolve(const Globals& g) {
    std::map<std::string, std::string> file_values;
    if (!g.config_path.empty()) file_values = load_config_file(g.config_path);
    auto flags = g.flags;
    if (g.jobs > 0) flags["jobs"] = std::to_string(g.jobs);
    return resolve_config(file_values, flags);
}

int cmd_chunk(const Globals& g, const std::string& input, const std::string& method, std::ostream& out,
              std::ostream& err) {
    auto config = resolve(g);
    auto chunker = parse_chunker(method);
    config.validate(chunker == Chunker::hc, chunker == Chunker::sc);
    if (g.out.empty()) throw CliError(kExitUsage, "chunk needs --out <store directory>");

    auto backend = chunker == Chunker::hc ? make_backend(config) : nullptr;
    auto embedder = chunker == Chunker::sc ? make_embedder(config) : nullptr;
    auto env = make_pipeline_env(config, backend.get(), embedder.get());
    auto docs = load_eval_documents(input, config);

    std::vector<std::string> summaries(docs.size()), diagnostics(docs.size());
    std::vector<char> ok(docs.size(), 0);
    detail::parallel_for(docs.size(), config.jobs, [&](std::size_t i) {
        const auto& doc = docs[i];
        try {
            if (doc.sentences.empty()) throw EmptyInputError("document has no text");
            auto outcome = chunk_document(doc, chunker, env);
            for (const auto& w : outcome.warnings) diagnostics[i] += "warning: " + doc.doc_id + ": " + w + "\n";
            auto stem = (fs::path(g.out) / file_stem(doc.doc_id)).string();
            write_file(stem + ".tree.json", serialize_tree(outcome.chunked.tree));
            write_file(stem + ".units.json", serialize_units(outcome.chunked.units));
            summaries[i] = doc.doc_id + "\t" + std::to_string(outcome.chunked.tree.nodes().size()) + " nodes\t" +
                           std::to_string(outcome.chunked.units.size()) + " units\n";
            ok[i] = 1;
        } catch (const std::exception& e) {
            diagnostics[i] += "error: " + doc.doc_id + ": " + e.what() + "\n";
        }
    });
    std::size_t failed = 0;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        out << summaries[i];
        err << diagnostics[i];
        failed += ok[i] ? 0 : 1;
    }
    if (failed) {
        err << failed << " of " << docs.size() << " documents failed\n";
        return kExitFailure;
    }
    return kExitOk;
}

int cmd_retrieve(const Globals& g, const std::string& store, const std::string& doc_id, const std::string& query,
                 std::optional<std::size_t> budget_flag, std::optional<std::string> strategy_flag,
                 const std::string& audit_path, std::ostream& out) {
    auto config = resolve(g);
    if (budget_flag) config.set("budget", std::to_string(*budget_flag));
    if (strategy_flag) config.set("strategy", *strategy_flag);
    config.validate(false, true);

    auto stem = fs::path(store) / file_stem(doc_id);
    fs::path tree_path = stem.string() + ".tree.json";
    fs::path units_path = stem.string() + ".units.json";
    if (!fs::exists(tree_path) || !fs::exists(units_path))
        throw CliError(kExitNotFound, "document '" + doc_id + "' not found in " + store);
    auto tree = deserialize_tree(read_file(tree_path));
    if (tree.doc_id() != doc_id) throw CliError(kExitNotFound, "document '" + doc_id + "' not found in " + store);
    auto units = deserialize_units(read_file(units_path), tree);

    auto embedder = make_embedder(config);
    const auto& tok = get_tokenizer(config.tokenizer);
    auto ranked = rank_units(units, query, *embedder);
    MergeIndex index(tree, units);
    auto strategy = parse_strategy(config.strategy);
    auto ctx = strategy == Strategy::flat ? flat_retrieve(ranked, index, config.budget, tok)
                                          : auto_merge(ranked, index, config.budget, tok);
    out << ctx.text << "\n";

    fs::path audit = audit_path;
    if (audit.empty()) audit = (g.out.empty() ? fs::path(store) : fs::path(g.out)) / (file_stem(doc_id) + ".audit.json");
    write_file(audit, audit_to_json(index, ctx, doc_id, query, config.budget, config.strategy));
    return kExitOk;
}

struct EvalInputs {
    std::vector<EvalDocument> docs;
    std::vector<QAItem> qa;
    std::vector<GoldStructure> gold;
};

EvalInputs eval_inputs(const Globals& g, const RunConfig& config, const std::string& docs_path,
                       const std::string& qa_path, const std::string& gold_path, int count) {
    EvalInputs in;
    if (docs_path.empty()) {
        for (auto& sd : generate_corpus(g.seed, count)) {
            in.docs.push_back(sd.eval_document());
            in.gold.push_back(sd.gold);
            for (auto& q : sd.qa) in.qa.push_back(q);
        }
    } else {
        in.docs = load_eval_documents(docs_path, config);
    }
    if (!qa_path.empty()) in.qa = load_qa(qa_path);
    if (!gold_path.empty()) in.gold = load_gold(gold_path);
    return in;
}

int cmd_eval(const Globals& g, const std::string& suite, const std::string& docs_path, const std::string& qa_path,
             const std::string& gold_path, int count, std::optional<std::size_t> budget_flag, std::ostream& out) {
    auto config = resolve(g);
    if (budget_flag) config.set("budget", std::to_string(*budget_flag));
    config.validate(true, true);
    auto in = eval_inputs(g, config, docs_path, qa_path, gold_path, count);
    if (in.docs.empty()) throw CliError(kExitEmptySuite, "no documents to evaluate");

    auto backend = make_backend(config);
    auto embedder = make_embedder(config);
    auto env = make_pipeline_env(config, backend.get(), embedder.get());
    const std::vector<Chunker> chunkers{Chunker::fc, Chunker::sc, Chunker::hc};

    bool needs_qa = suite == "retrieval" || suite == "sweep" || suite == "level_ablation";
    if (needs_qa && in.qa.empty()) throw CliError(kExitEmptySuite, "empty QA set: suite '" + suite + "' has nothing to score");
    if (suite == "chunking" && in.gold.empty())
        throw CliError(kExitEmptySuite, "no gold structure: suite 'chunking' has nothing to score");

    json results{{"suite", suite}, {"documents", in.docs.size()}, {"qa_items", in.qa.size()}};
    std::string table;
    if (suite == "retrieval" || suite == "sweep") {
        std::vector<std::size_t> budgets = suite == "sweep" ? kDefaultBudgets : std::vector<std::size_t>{config.budget};
        auto rows = budget_sweep(in.docs, in.qa, standard_methods(), budgets, env, in.gold);
        table = format_metric_table(rows);
        json arr = json::array();
        for (const auto& r : rows)
            arr.push_back({{"method", r.method},
                           {"budget", r.budget},
                           {"evidence_recall", r.evidence_recall},
                           {"f1_l1", opt_json(r.f1_l1)},
                           {"f1_l2", opt_json(r.f1_l2)},
                           {"f1_all", opt_json(r.f1_all)},
                           {"qa_count", r.qa_count},
                           {"documents_failed", r.documents_failed}});
        results["rows"] = std::move(arr);
    } else if (suite == "chunking") {
        auto rows = chunking_accuracy(in.docs, in.gold, chunkers, env);
        table = format_chunking_table(rows);
        json arr = json::array();
        for (const auto& r : rows)
            arr.push_back({{"method", r.method},
                           {"l1", prf_json(r.l1)},
                           {"l2", prf_json(r.l2)},
                           {"all", prf_json(r.all)},
                           {"documents", r.documents},
                           {"documents_failed", r.documents_failed}});
        results["rows"] = std::move(arr);
    } else if (suite == "level_ablation") {
        std::vector<ChunkTree> trees;
        for (const auto& doc : in.docs) trees.push_back(chunk_document(doc, Chunker::hc, env).chunked.tree);
        auto rows = max_level_ablation(trees, in.qa, config.max_levels, config.budget, env);
        table = format_level_table(rows);
        json arr = json::array();
        for (const auto& r : rows)
            arr.push_back({{"setting", r.setting}, {"max_level", r.max_level}, {"evidence_recall", r.evidence_recall},
                           {"qa_count", r.qa_count}});
        results["rows"] = std::move(arr);
    } else if (suite == "timing") {
        auto rows = timing_report(in.docs, chunkers, env);
        table = format_timing_table(rows);
        json arr = json::array();
        for (const auto& r : rows)
            arr.push_back({{"method", r.method},
                           {"doc_id", r.doc_id},
                           {"wall_seconds", r.wall_seconds},
                           {"backend_seconds", r.backend_seconds},
                           {"local_seconds", r.local_seconds},
                           {"chunk_count", r.chunk_count}});
        results["rows"] = std::move(arr);
    } else {
        throw CliError(kExitUsage, "unknown suite '" + suite + "'");
    }
    out << table;
    if (!g.out.empty()) write_file(g.out, results.dump(1) + "\n");
    return kExitOk;
}

int cmd_generate(const Globals& g, int count, std::ostream& out) {
    if (g.out.empty()) throw CliError(kExitUsage, "generate needs --out <directory>");
    if (count <= 0) throw CliError(kExitUsage, "--count must be positive");
    auto corpus = generate_corpus(g.seed, count);
    std::string docs;
    std::vector<QAItem> qa;
    std::vector<GoldStructure> gold;
    for (const auto& d : corpus) {
        docs += json{{"doc_id", d.doc_id}, {"text", d.text}}.dump() + "\n";
        qa.insert(qa.end(), d.qa.begin(), d.qa.end());
        gold.push_back(d.gold);
    }
    fs::path dir(g.out);
    write_file(dir / "docs.jsonl", docs);
    save_qa((dir / "qa.jsonl").string(), qa);
    save_gold((dir / "gold.jsonl").string(), gold);
    out << "wrote " << corpus.size() << " documents, " << qa.size() << " QA items to " << dir.string() << "\n";
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Hierarchical chunking and retrieval toolkit", "hichunk"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for all subcommands");

    Globals g;
    app.add_option("--config", g.config_path, "Configuration file (key = value lines)")->check(CLI::ExistingFile);
    app.add_option("--jobs", g.jobs, "Documents processed in parallel")->check(CLI::PositiveNumber);
    app.add_option("--seed", g.seed, "Seed for the synthetic corpus");
    app.add_option("--out", g.out, "Output directory or results file");
    std::map<std::string, std::string> raw_flags;
    for (const auto& key : RunConfig::keys()) {
        if (key == "jobs") continue;
        app.add_option(flag_name(key), raw_flags[key], "Overrides config key " + key);
    }
    app.fallthrough();

    auto* chunk = app.add_subcommand("chunk", "Chunk documents into a tree/unit store");
    std::string input, method = "hc";
    chunk->add_option("--input", input, "Document file (.jsonl or plain text)")->required()->check(CLI::ExistingFile);
    chunk->add_option("--method", method, "fc | sc | hc")->check(CLI::IsMember({"fc", "sc", "hc"}));

    auto* retrieve = app.add_subcommand("retrieve", "Assemble a context for a query");
    std::string store, doc_id, query, audit_path;
    std::optional<std::size_t> budget;
    std::optional<std::string> strategy;
    retrieve->add_option("--store", store, "Store directory written by chunk")->required();
    retrieve->add_option("--doc-id", doc_id)->required();
    retrieve->add_option("--query", query)->required();
    retrieve->add_option("--budget", budget, "Token budget (default 4096)")->check(CLI::PositiveNumber);
    retrieve->add_option("--strategy", strategy, "flat | auto_merge")->check(CLI::IsMember({"flat", "auto_merge"}));
    retrieve->add_option("--audit", audit_path, "Audit file (default <out or store>/<doc_id>.audit.json)");

    auto* eval = app.add_subcommand("eval", "Run an evaluation suite");
    std::string suite, docs_path, qa_path, gold_path;
    int count = 5;
    std::optional<std::size_t> eval_budget;
    eval->add_option("--suite", suite)
        ->required()
        ->check(CLI::IsMember({"chunking", "retrieval", "sweep", "level_ablation", "timing"}));
    eval->add_option("--docs", docs_path, "Documents; a synthetic corpus is generated when omitted");
    eval->add_option("--qa", qa_path, "QA items (.jsonl)");
    eval->add_option("--gold", gold_path, "Gold structure (.jsonl)");
    eval->add_option("--count", count, "Synthetic documents to generate")->check(CLI::PositiveNumber);
    eval->add_option("--budget", eval_budget)->check(CLI::PositiveNumber);

    auto* generate = app.add_subcommand("generate", "Write a synthetic corpus with QA and gold structure");
    int gen_count = 5;
    generate->add_option("--count", gen_count, "Documents to generate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    }
    for (const auto& [k, v] : raw_flags)
        if (!v.empty()) g.flags[k] = v;

    try {
        if (*chunk) return cmd_chunk(g, input, method, out, err);
        if (*retrieve) return cmd_retrieve(g, store, doc_id, query, budget, strategy, audit_path, out);
        if (*eval) return cmd_eval(g, suite, docs_path, qa_path, gold_path, count, eval_budget, out);
        if (*generate) return cmd_generate(g, gen_count, out);
    } catch (const CliError& e) {
        err << "error: " << e.what() << "\n";
        return e.code;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace hichunk
