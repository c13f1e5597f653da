#include "hichunk/inference.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <regex>
#include <sstream>

namespace hichunk {

const std::string_view kChunkingInstruction =
    "You are an assistant good at reading and formatting documents, and you are also skilled at "
    "distinguishing the semantic and logical relationships of sentences between document context. The "
    "following is a text that has already been divided into sentences. Each line is formatted as: "
    "\"{line number} @ {sentence content}\". You need to segment this text based on semantics and format. "
    "There are multiple levels of granularity for segmentation, the higher level number means the finer "
    "granularity of the segmentation. Please ensure that each Level One segment is semantically complete "
    "after segmentation. A Level One segment may contain multiple Level Two segments, and so on. Please "
    "incrementally output the starting line numbers of each level of segments, and determine the level of "
    "the segment, as well as whether the content of the sentence at the starting line number can be used "
    "as the title of the segment. Finally, output a list format result, where each element is in the "
    "format of: \"{line number}, {segment level}, {be a title?}\".";

std::vector<ChunkPoint> ChunkPointSet::flatten() const {
    std::vector<ChunkPoint> out;
    for (const auto& l : levels) out.insert(out.end(), l.begin(), l.end());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.sentence_id != b.sentence_id ? a.sentence_id < b.sentence_id : a.level < b.level;
    });
    return out;
}

bool ChunkPointSet::empty() const {
    return std::all_of(levels.begin(), levels.end(), [](const auto& l) { return l.empty(); });
}

ChunkPointSet group_by_level(const std::vector<ChunkPoint>& points, int max_levels) {
    ChunkPointSet set(max_levels);
    for (const auto& p : points) {
        if (p.level < 1 || p.level > max_levels) throw std::invalid_argument("chunk point level out of range");
        set.levels[static_cast<std::size_t>(p.level - 1)].push_back(p);
    }
    for (auto& l : set.levels) {
        std::stable_sort(l.begin(), l.end(), [](const auto& a, const auto& b) { return a.sentence_id < b.sentence_id; });
        l.erase(std::unique(l.begin(), l.end(),
                            [](const auto& a, const auto& b) { return a.sentence_id == b.sentence_id; }),
                l.end());
    }
    return set;
}

SentenceId select_window(const std::vector<Sentence>& sentences, SentenceId start, std::size_t limit) {
    const auto n = static_cast<SentenceId>(sentences.size());
    if (start < 1 || start > n) throw std::out_of_range("window start out of range");
    std::size_t acc = 0;
    SentenceId b = start;
    while (b <= n) {
        std::size_t t = sentences[static_cast<std::size_t>(b - 1)].token_len;
        if (b > start && acc + t > limit) break;
        acc += t;
        ++b;
    }
    return b;
}

std::string build_prompt(std::span<const Sentence> window, const ResidualLines& residual) {
    if (window.empty()) throw std::invalid_argument("prompt window is empty");
    std::string out(kChunkingInstruction);
    out += "\n\n>>> Input text:\n";
    for (const auto& r : residual) out += "(L" + std::to_string(r.level) + ") @ " + r.text + "\n";
    const SentenceId offset = window.front().id - 1;
    for (std::size_t i = 0; i < window.size(); ++i) {
        if (i) out += '\n';
        out += std::to_string(window[i].id - offset) + " @ " + window[i].text;
    }
    return out;
}

ParseResult parse_chunk_output(std::string_view raw, SentenceId window_offset, int window_size, int max_levels) {
    static const std::regex line_re(R"(^(\d+)\s*,\s*(-?\d+)\s*,\s*(true|false)$)", std::regex::icase);
    ParseResult result;
    std::istringstream in{std::string(raw)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string cleaned;
        for (char c : line)
            if (c != '"' && c != '\'' && c != '\r') cleaned += c;
        auto is_decor = [](char c) {
            return std::isspace(static_cast<unsigned char>(c)) || c == '[' || c == ']' || c == '(' || c == ')' ||
                   c == '-' || c == '*';
        };
        while (!cleaned.empty() && is_decor(cleaned.front())) cleaned.erase(cleaned.begin());
        while (!cleaned.empty() && (is_decor(cleaned.back()) || cleaned.back() == ',')) cleaned.pop_back();
        if (cleaned.empty()) continue;

        std::smatch m;
        if (!std::regex_match(cleaned, m, line_re)) {
            result.warnings.push_back("line " + std::to_string(lineno) + ": malformed chunk point '" + line + "'");
            continue;
        }
        long local = std::stol(m[1]);
        long level = std::stol(m[2]);
        bool title = std::tolower(static_cast<unsigned char>(m[3].str()[0])) == 't';
        if (local < 1 || local > window_size) {
            result.warnings.push_back("line " + std::to_string(lineno) + ": line number " + std::to_string(local) +
                                      " outside the window");
            continue;
        }
        if (level < 1) {
            result.warnings.push_back("line " + std::to_string(lineno) + ": invalid level " + std::to_string(level));
            continue;
        }
        if (level > max_levels) {
            result.warnings.push_back("line " + std::to_string(lineno) + ": level " + std::to_string(level) +
                                      " clamped to " + std::to_string(max_levels));
            level = max_levels;
        }
        SentenceId id = static_cast<SentenceId>(local) + window_offset;
        bool seen = std::any_of(result.points.begin(), result.points.end(),
                                [&](const auto& p) { return p.sentence_id == id; });
        if (!seen) result.points.push_back({id, static_cast<int>(level), title});
    }
    std::stable_sort(result.points.begin(), result.points.end(),
                     [](const auto& a, const auto& b) { return a.sentence_id < b.sentence_id; });
    return result;
}

ChunkPointSet merge_points(const ChunkPointSet& global, const ChunkPointSet& local, SentenceId window_start) {
    ChunkPointSet out = global;
    if (local.levels.size() > out.levels.size()) out.levels.resize(local.levels.size());
    for (auto& l : out.levels)
        l.erase(std::remove_if(l.begin(), l.end(), [&](const auto& p) { return p.sentence_id >= window_start; }),
                l.end());
    for (std::size_t i = 0; i < local.levels.size(); ++i)
        for (const auto& p : local.levels[i])
            if (p.sentence_id >= window_start) out.levels[i].push_back(p);
    for (auto& l : out.levels) {
        std::stable_sort(l.begin(), l.end(), [](const auto& a, const auto& b) { return a.sentence_id < b.sentence_id; });
        l.erase(std::unique(l.begin(), l.end(),
                            [](const auto& a, const auto& b) { return a.sentence_id == b.sentence_id; }),
                l.end());
    }
    return out;
}

ResidualLines get_residual_lines(const ChunkPointSet& global, const std::vector<Sentence>& sentences) {
    if (global.levels.empty() || global.levels.front().empty())
        throw std::invalid_argument("residual lines need at least one level-1 chunk point");
    ResidualLines out;
    SentenceId open_from = 0;
    for (const auto& level : global.levels) {
        // Most recent point of this level inside the currently open parent segment.
        auto it = std::find_if(level.rbegin(), level.rend(), [&](const auto& p) { return p.sentence_id >= open_from; });
        if (it == level.rend()) break;
        out.push_back({it->level, sentences.at(static_cast<std::size_t>(it->sentence_id - 1)).text});
        open_from = it->sentence_id;
    }
    return out;
}

InferenceResult hichunk_document(const std::vector<Sentence>& sentences, GenerationBackend& backend,
                                 const InferenceConfig& config, const std::string& doc_id) {
    if (sentences.empty()) throw std::invalid_argument("document has no sentences");
    if (config.max_levels < 1) throw std::invalid_argument("max_levels must be >= 1");
    const auto n = static_cast<SentenceId>(sentences.size());

    InferenceResult result;
    ChunkPointSet global(config.max_levels);
    ResidualLines residual;
    SentenceId a = 1;
    SentenceId b = select_window(sentences, a, config.window_token_limit);

    while (1 <= a && a < b && b <= n + 1) {
        std::span<const Sentence> window(sentences.data() + (a - 1), static_cast<std::size_t>(b - a));
        auto prompt = build_prompt(window, residual);

        std::string raw;
        auto t0 = std::chrono::steady_clock::now();
        try {
            raw = generate_with_retry(backend, prompt, config.retry);
        } catch (const BackendError& e) {
            throw InferenceError("window [" + std::to_string(a) + ", " + std::to_string(b) + ") of " +
                                     (doc_id.empty() ? std::string("document") : doc_id) + " failed with " +
                                     std::to_string(global.flatten().size()) + " chunk points decided: " + e.what(),
                                 global);
        }
        result.backend_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        ++result.backend_calls;

        auto parsed = parse_chunk_output(raw, a - 1, b - a, config.max_levels);
        for (auto& w : parsed.warnings) result.warnings.push_back(std::move(w));
        if (parsed.points.empty()) {
            result.warnings.push_back("window [" + std::to_string(a) + ", " + std::to_string(b) +
                                      ") produced no chunk points; using a level-1 point at its start");
            parsed.points.push_back({a, 1, false});
        }
        auto local = group_by_level(parsed.points, config.max_levels);
        global = merge_points(global, local, a);
        auto& first_level = global.levels.front();
        if (first_level.empty() || first_level.front().sentence_id != 1) {
            const auto& flat = global.flatten();
            bool title = !flat.empty() && flat.front().sentence_id == 1 && flat.front().is_title;
            first_level.insert(first_level.begin(), {1, 1, title});
        }

        IterationTrace step;
        step.window_start = a;
        step.window_end = b;
        step.residual_lines = residual.size();
        step.local_level1 = local.level(1).size();

        if (b == n + 1) {
            step.next_start = b;
            result.trace.push_back(step);
            break;
        }
        SentenceId next;
        if (local.level(1).size() >= 2) {
            next = local.level(1).back().sentence_id;
            residual.clear();
            step.restarted = true;
        } else {
            next = b;
            residual = get_residual_lines(global, sentences);
        }
        step.next_start = next;
        result.trace.push_back(step);
        if (next <= a)
            throw InferenceError("inference made no progress at sentence " + std::to_string(a), global);
        a = next;
        b = select_window(sentences, a, config.window_token_limit);
    }

    result.points = global;
    result.tree = build_tree(sentences, global.flatten(), config.max_levels, doc_id);
    return result;
}

}  // namespace hichunk
