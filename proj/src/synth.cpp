#include "hichunk/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <set>

namespace hichunk {

namespace {

// Portable draws on top of mt19937_64, whose output sequence is fixed by the standard.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : gen_() % n; }
    int between(int lo, int hi) { return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1))); }
    double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    template <class T>
    const T& pick(const std::vector<T>& v) {
        return v[below(v.size())];
    }

private:
    std::mt19937_64 gen_;
};

constexpr std::array kSyllables = {"ba", "ke", "ri", "to", "mu", "sa", "ne", "li", "po", "du",
                                   "ga", "fe", "zo", "hi", "ja", "vu", "ce", "wo", "xi", "ly"};

const std::vector<std::string> kCommonWords = {
    "the", "of",   "and",  "in",   "to",    "a",    "is",    "for",  "with",  "that", "on",   "as",   "by",  "this",
    "from", "which", "are", "was", "be",    "at",   "it",    "or",   "an",    "its",  "has",  "have", "were", "also",
    "more", "other", "some", "such", "into", "when", "than", "these", "their", "most", "many", "both"};

class Vocabulary {
public:
    std::vector<std::string> take(int n) {
        std::vector<std::string> out;
        for (int i = 0; i < n; ++i) out.push_back(word(next_++));
        return out;
    }

private:
    static std::string word(std::size_t index) {
        std::string w;
        for (int k = 0; k < 3; ++k) {
            w += kSyllables[index % kSyllables.size()];
            index /= kSyllables.size();
        }
        return w;
    }
    std::size_t next_ = 0;
};

struct Part {
    std::vector<std::string> title;
    int body_len = 0;
};

struct Subsection {
    std::vector<std::string> key;
    std::vector<std::string> detail;
    std::vector<Part> parts;  // one part means no "###" level
    int body_len = 0;
    std::vector<SentenceId> body_ids;
};

struct Section {
    std::vector<std::string> words;
    std::vector<Subsection> subsections;
};

std::string capitalize(std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
}

std::string join(const std::vector<std::string>& words) {
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) out += ' ';
        out += w;
    }
    return out;
}

}  // namespace

SynthDocument generate_document(std::uint64_t seed, const std::string& doc_id, const SynthOptions& o) {
    Rng rng(seed);
    Vocabulary vocab;

    std::vector<Section> sections(static_cast<std::size_t>(rng.between(o.sections_min, o.sections_max)));
    std::vector<const Subsection*> all_subsections;
    for (auto& sec : sections) {
        sec.words = vocab.take(10);
        sec.subsections.resize(static_cast<std::size_t>(rng.between(o.subsections_min, o.subsections_max)));
        for (auto& sub : sec.subsections) {
            sub.key = vocab.take(4);
            sub.detail = vocab.take(25);
            sub.body_len = rng.between(o.body_sentences_min, o.body_sentences_max);
            int n_parts = rng.unit() < o.subsubsection_prob ? rng.between(2, 3) : 1;
            int remaining = sub.body_len;
            for (int p = 0; p < n_parts; ++p) {
                Part part;
                part.title = {rng.pick(sub.detail), rng.pick(sub.detail)};
                part.body_len = p + 1 == n_parts ? remaining : std::max(1, sub.body_len / n_parts);
                remaining -= part.body_len;
                sub.parts.push_back(std::move(part));
            }
            all_subsections.push_back(&sub);
        }
    }

    SynthDocument doc;
    doc.doc_id = doc_id;
    doc.gold.doc_id = doc_id;
    std::vector<std::string> lines;
    std::string text;

    auto heading = [&](int level, const std::vector<std::string>& words) {
        auto line = std::string(static_cast<std::size_t>(level), '#') + " " + capitalize(join(words));
        lines.push_back(line);
        doc.gold.points.push_back({static_cast<SentenceId>(lines.size()), level, true});
        text += line + "\n\n";
    };

    auto body_sentence = [&](const Section& sec, const Subsection& sub, bool key_region) {
        int n = rng.between(o.words_min, o.words_max);
        std::vector<std::string> words;
        for (int i = 0; i < n; ++i) {
            double r = rng.unit();
            if (r < 0.35)
                words.push_back(rng.pick(kCommonWords));
            else if (r < 0.55)
                words.push_back(rng.pick(sec.words));
            else
                words.push_back(rng.pick(sub.detail));
        }
        if (key_region && rng.unit() < o.key_density) {
            words[rng.below(words.size())] = rng.pick(sub.key);
            if (rng.unit() < 0.3) words[rng.below(words.size())] = rng.pick(sub.key);
        }
        if (all_subsections.size() > 1 && rng.unit() < o.crossref_rate) {
            const Subsection* other = &sub;
            while (other == &sub) other = rng.pick(all_subsections);
            words[rng.below(words.size())] = rng.pick(other->key);
        }
        auto s = capitalize(join(words)) + ".";
        while (s.size() > 95 && words.size() > 3) {
            words.pop_back();
            s = capitalize(join(words)) + ".";
        }
        return s;
    };

    for (auto& sec : sections) {
        heading(1, {sec.words[0], sec.words[1], sec.words[2]});
        for (auto& sub : sec.subsections) {
            heading(2, {sub.key[0], sub.key[1], rng.pick(sec.words)});
            int key_limit = static_cast<int>(std::ceil(o.key_region * sub.body_len));
            int index = 0;
            for (const auto& part : sub.parts) {
                if (sub.parts.size() > 1) heading(3, part.title);
                int in_paragraph = 0;
                int paragraph_len = rng.between(3, 6);
                for (int k = 0; k < part.body_len; ++k, ++index) {
                    auto s = body_sentence(sec, sub, index < key_limit);
                    lines.push_back(s);
                    sub.body_ids.push_back(static_cast<SentenceId>(lines.size()));
                    text += (in_paragraph ? " " : "") + s;
                    if (++in_paragraph == paragraph_len || k + 1 == part.body_len) {
                        text += "\n\n";
                        in_paragraph = 0;
                        paragraph_len = rng.between(3, 6);
                    }
                }
            }
        }
    }
    doc.text = text;
    doc.sentences = make_sentences(lines);

    int qa_index = 0;
    std::set<const Subsection*> used;
    for (int q = 0; q < o.t1_per_doc && used.size() < all_subsections.size(); ++q) {
        const Subsection* target = rng.pick(all_subsections);
        while (used.count(target)) target = rng.pick(all_subsections);
        used.insert(target);
        std::vector<SentenceId> pool = target->body_ids;
        auto k = static_cast<std::size_t>(std::max(2.0, std::ceil(o.evidence_fraction * static_cast<double>(pool.size()))));
        k = std::min(k, pool.size());
        for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
        std::vector<SentenceId> evidence(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
        std::sort(evidence.begin(), evidence.end());
        QAItem item;
        item.qa_id = doc_id + "-q" + std::to_string(qa_index++);
        item.doc_id = doc_id;
        item.question = "Describe " + join(target->key) + ".";
        item.answer = "Summary of the " + join({target->key[0], target->key[1]}) + " subsection.";
        item.evidence_sentence_ids = std::move(evidence);
        item.task_type = TaskType::T1;
        doc.qa.push_back(std::move(item));
    }
    for (int q = 0; q < o.t0_per_doc && !all_subsections.empty(); ++q) {
        const auto& sub = *rng.pick(all_subsections);
        SentenceId sid = rng.pick(sub.body_ids);
        const auto& s = doc.sentences[static_cast<std::size_t>(sid - 1)].text;
        std::vector<std::string> content;
        std::string w;
        for (char c : s + " ") {
            if (std::isalnum(static_cast<unsigned char>(c))) {
                w += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
                continue;
            }
            if (!w.empty() && std::find(kCommonWords.begin(), kCommonWords.end(), w) == kCommonWords.end() &&
                content.size() < 4)
                content.push_back(w);
            w.clear();
        }
        QAItem item;
        item.qa_id = doc_id + "-q" + std::to_string(qa_index++);
        item.doc_id = doc_id;
        item.question = "Describe " + join(content) + ".";
        item.answer = s;
        item.evidence_sentence_ids = {sid};
        item.task_type = TaskType::T0;
        doc.qa.push_back(std::move(item));
    }
    return doc;
}

std::vector<SynthDocument> generate_corpus(std::uint64_t seed, int count, const SynthOptions& options) {
    std::vector<SynthDocument> out;
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    std::vector<std::uint32_t> seeds(static_cast<std::size_t>(std::max(0, count)) * 2);
    seq.generate(seeds.begin(), seeds.end());
    for (int i = 0; i < count; ++i) {
        std::uint64_t s = (static_cast<std::uint64_t>(seeds[2 * static_cast<std::size_t>(i)]) << 32) |
                          seeds[2 * static_cast<std::size_t>(i) + 1];
        out.push_back(generate_document(s, "synth-" + std::to_string(seed) + "-" + std::to_string(i), options));
    }
    return out;
}

}  // namespace hichunk
