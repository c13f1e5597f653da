// Helpers shared by the unit tests and the acceptance binary: random fixtures and
// reference implementations written without reusing library internals.
#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hichunk/eval.hpp"
#include "hichunk/retrieval.hpp"
#include "hichunk/text.hpp"
#include "hichunk/tree.hpp"

namespace testsupport {

using namespace hichunk;

inline int uniform(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// Sentence of `words` distinct-looking words, whitespace tokens = words.
inline std::string sentence_text(int id, int words) {
    std::string s = "S" + std::to_string(id);
    for (int w = 1; w < words; ++w) s += " w" + std::to_string(id) + "x" + std::to_string(w);
    return s + ".";
}

inline std::vector<Sentence> sentences_with_lengths(const std::vector<int>& lengths) {
    std::vector<std::string> texts;
    for (std::size_t i = 0; i < lengths.size(); ++i) texts.push_back(sentence_text(static_cast<int>(i) + 1, lengths[i]));
    return make_sentences(texts);
}

inline std::vector<Sentence> random_sentences(std::mt19937_64& rng, int n, int min_words, int max_words) {
    std::vector<int> lengths;
    for (int i = 0; i < n; ++i) lengths.push_back(uniform(rng, min_words, max_words));
    return sentences_with_lengths(lengths);
}

// Random points, at most one per sentence, levels in [1, max_level].
inline std::vector<ChunkPoint> random_points(std::mt19937_64& rng, int n, int max_level, double density) {
    std::vector<ChunkPoint> pts;
    std::bernoulli_distribution pick(density);
    for (int s = 1; s <= n; ++s)
        if (pick(rng)) pts.push_back({s, uniform(rng, 1, max_level), false});
    return pts;
}

// Literal step simulation of the ranked merge procedure. The hierarchy is described by
// sentence ranges only: the parent of a range is the smallest distinct range that
// strictly contains it, taken over all tree nodes and units.
struct OracleResult {
    std::vector<std::pair<int, int>> selected;  // ranges in selection order
    std::string text;
    std::size_t token_len = 0;
};

class MergeOracle {
public:
    using Range = std::pair<int, int>;

    MergeOracle(const ChunkTree& tree, const std::vector<RetrievalUnit>& units) : tree_(tree) {
        for (const auto& n : tree.nodes()) {
            Range r{n.start_sentence, n.end_sentence};
            auto it = level_.find(r);
            if (it == level_.end() || n.level < it->second) level_[r] = n.level;
        }
        for (const auto& u : units) {
            Range r{u.start_sentence, u.end_sentence};
            unit_range_[u.unit_id] = r;
            if (!level_.count(r)) level_[r] = 99;  // a unit finer than its leaf
        }
        root_ = {tree.root().start_sentence, tree.root().end_sentence};
    }

    std::size_t len(Range r) const {
        std::size_t n = 0;
        for (int s = r.first; s < r.second; ++s) n += tree_.sentences()[static_cast<std::size_t>(s - 1)].token_len;
        return n;
    }

    static bool contains(Range outer, Range inner) { return outer.first <= inner.first && inner.second <= outer.second; }

    Range parent(Range r) const {
        Range best = root_;
        for (const auto& [cand, lvl] : level_) {
            if (cand == r || !contains(cand, r)) continue;
            if (cand.second - cand.first < best.second - best.first) best = cand;
        }
        return best;
    }

    OracleResult run(const std::vector<int>& ranked_units, std::size_t T, bool merge = true) const {
        std::vector<Range> ret;
        auto tk = [&] {
            std::size_t n = 0;
            for (auto r : ret) n += len(r);
            return n;
        };
        std::size_t tk_cur = 0;
        for (int uid : ranked_units) {
            Range c = unit_range_.at(uid);
            bool dup = false;
            for (auto m : ret) dup = dup || contains(m, c);
            if (dup) continue;
            ret.push_back(c);
            tk_cur = tk();
            Range p = parent(c);
            while (merge && p != root_) {
                int count = 0;
                std::size_t sum = 0;
                for (auto m : ret) {
                    if (m != p && contains(p, m) && parent(m) == p) {
                        ++count;
                        sum += len(m);
                    }
                }
                double theta = static_cast<double>(len(p)) / 3.0 * (1.0 + static_cast<double>(tk_cur) / static_cast<double>(T));
                bool c1 = count >= 2;
                bool c2 = static_cast<double>(sum) >= theta;
                bool c3 = static_cast<long long>(T) - static_cast<long long>(tk_cur) >= static_cast<long long>(len(p));
                if (!(c1 && c2 && c3)) break;
                if (tk_cur >= T) break;
                std::vector<Range> next;
                bool placed = false;
                for (auto m : ret) {
                    if (contains(p, m)) {
                        if (!placed) next.push_back(p);
                        placed = true;
                    } else {
                        next.push_back(m);
                    }
                }
                ret = next;
                tk_cur = tk();
                p = parent(p);
            }
            if (tk_cur >= T) break;
        }
        return render(ret, T);
    }

    // Keep whole ranges in selection order, then whole sentences, then leading words.
    OracleResult render(const std::vector<Range>& ret, std::size_t T) const {
        OracleResult out;
        out.selected = ret;
        std::vector<std::pair<int, std::string>> parts;
        std::size_t left = T;
        for (auto r : ret) {
            std::string text;
            std::size_t used = 0;
            bool stop = false;
            for (int s = r.first; s < r.second; ++s) {
                const auto& sent = tree_.sentences()[static_cast<std::size_t>(s - 1)];
                if (used + sent.token_len <= left) {
                    text += (text.empty() ? "" : " ") + sent.text;
                    used += sent.token_len;
                    continue;
                }
                std::size_t room = left - used;
                std::string words;
                std::size_t taken = 0, pos = 0;
                const std::string& t = sent.text;
                while (taken < room && pos < t.size()) {
                    auto next = t.find(' ', pos);
                    if (next == std::string::npos) next = t.size();
                    words += (words.empty() ? "" : " ") + t.substr(pos, next - pos);
                    ++taken;
                    pos = next + 1;
                }
                if (!words.empty()) {
                    text += (text.empty() ? "" : " ") + words;
                    used += taken;
                }
                stop = true;
                break;
            }
            if (!text.empty()) parts.push_back({r.first, text});
            out.token_len += used;
            left -= used;
            if (stop) break;
        }
        std::sort(parts.begin(), parts.end());
        for (const auto& [start, text] : parts) out.text += (out.text.empty() ? "" : "\n\n") + text;
        return out;
    }

private:
    const ChunkTree& tree_;
    std::map<Range, int> level_;
    std::map<int, Range> unit_range_;
    Range root_;
};

// Maximum bipartite matching between predicted and gold points (augmenting paths).
inline PRF brute_force_f1(const std::vector<ChunkPoint>& pred_in, const std::vector<ChunkPoint>& gold_in, F1Mode mode) {
    auto keep = [&](const std::vector<ChunkPoint>& v) {
        std::vector<ChunkPoint> out;
        for (const auto& p : v) {
            if (mode == F1Mode::level_1 && p.level != 1) continue;
            if (mode == F1Mode::level_2 && p.level != 2) continue;
            out.push_back(p);
        }
        return out;
    };
    auto pred = keep(pred_in), gold = keep(gold_in);
    if (pred.empty() && gold.empty()) return {1.0, 1.0, 1.0};
    auto compatible = [&](const ChunkPoint& a, const ChunkPoint& b) {
        return a.sentence_id == b.sentence_id && (mode == F1Mode::level_all || a.level == b.level);
    };
    std::vector<int> owner(gold.size(), -1);
    std::function<bool(std::size_t, std::vector<char>&)> augment = [&](std::size_t i, std::vector<char>& seen) {
        for (std::size_t j = 0; j < gold.size(); ++j) {
            if (!compatible(pred[i], gold[j]) || seen[j]) continue;
            seen[j] = 1;
            if (owner[j] < 0 || augment(static_cast<std::size_t>(owner[j]), seen)) {
                owner[j] = static_cast<int>(i);
                return true;
            }
        }
        return false;
    };
    std::size_t matched = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        std::vector<char> seen(gold.size(), 0);
        if (augment(i, seen)) ++matched;
    }
    PRF r;
    r.precision = pred.empty() ? 0.0 : static_cast<double>(matched) / static_cast<double>(pred.size());
    r.recall = gold.empty() ? 0.0 : static_cast<double>(matched) / static_cast<double>(gold.size());
    r.f1 = r.precision + r.recall == 0.0 ? 0.0 : 2 * r.precision * r.recall / (r.precision + r.recall);
    return r;
}

inline RankedList ranking_of(const std::vector<int>& unit_ids) {
    RankedList r;
    double score = 1.0;
    for (int id : unit_ids) {
        r.entries.push_back({id, score});
        score -= 1e-3;
    }
    return r;
}

}  // namespace testsupport

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace testsupport {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Frozen-output comparison. With HICHUNK_UPDATE_FIXTURES set the fixture is rewritten.
inline std::string golden(const std::string& name, const std::string& actual) {
    std::string path = std::string(HICHUNK_FIXTURE_DIR) + "/" + name;
    if (std::getenv("HICHUNK_UPDATE_FIXTURES")) {
        std::ofstream(path, std::ios::binary) << actual;
        return actual;
    }
    return read_file(path);
}

}  // namespace testsupport
