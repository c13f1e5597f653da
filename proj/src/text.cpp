#include "hichunk/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

#include <json.hpp>

namespace hichunk {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_continuation_byte(char c) {
    return (static_cast<unsigned char>(c) & 0xC0) == 0x80;
}

std::vector<std::string_view> split_words(std::string_view text) {
    std::vector<std::string_view> words;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        if (i > start) words.push_back(text.substr(start, i - start));
    }
    return words;
}

std::size_t count_chars4(std::string_view text) {
    std::size_t n = 0;
    for (auto w : split_words(text)) n += (w.size() + 3) / 4;
    return n;
}

struct Registry {
    std::mutex mutex;
    std::map<std::string, std::unique_ptr<Tokenizer>> tokenizers;

    Registry() {
        tokenizers.emplace("whitespace", std::make_unique<Tokenizer>("whitespace", count_words));
        tokenizers.emplace("chars4", std::make_unique<Tokenizer>("chars4", count_chars4));
    }
};

Registry& registry() {
    static Registry r;
    return r;
}

// Lowercased word ending at `end` (exclusive), without the trailing period.
std::string word_before(std::string_view s, std::size_t end) {
    std::size_t start = end;
    while (start > 0 && !is_space(s[start - 1])) --start;
    std::string w(s.substr(start, end - start));
    while (!w.empty() && (w.front() == '(' || w.front() == '"' || w.front() == '\'')) w.erase(w.begin());
    std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return std::tolower(c); });
    return w;
}

constexpr std::array kAbbreviations = {
    "mr",  "mrs", "ms",  "dr",  "prof", "sr",  "jr",  "st",  "vs",   "etc", "e.g", "i.e", "inc",
    "ltd", "co",  "no",  "fig", "al",   "u.s", "jan", "feb", "mar",  "apr", "jun", "jul", "aug",
    "sep", "sept", "oct", "nov", "dec", "approx", "dept", "est", "gen", "gov", "rep", "sen", "vol",
};

bool is_abbreviation(const std::string& word) {
    return std::find(kAbbreviations.begin(), kAbbreviations.end(), word) != kAbbreviations.end();
}

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

// Splits one normalized line (single spaces, trimmed) at sentence boundaries.
std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    std::size_t i = 0;
    while (i < line.size()) {
        if (!is_terminal(line[i])) {
            ++i;
            continue;
        }
        std::size_t punct = i;
        std::size_t j = i + 1;
        while (j < line.size() && (is_terminal(line[j]) || is_closer(line[j]))) ++j;
        bool boundary = j + 1 < line.size() && line[j] == ' ' &&
                        (std::isupper(static_cast<unsigned char>(line[j + 1])) ||
                         std::isdigit(static_cast<unsigned char>(line[j + 1])));
        if (boundary && line[punct] == '.' && is_abbreviation(word_before(line, punct))) boundary = false;
        if (boundary) {
            out.emplace_back(line.substr(start, j - start));
            start = j + 1;
        }
        i = j;
    }
    if (start < line.size()) out.emplace_back(line.substr(start));
    return out;
}

// Byte offset of the code point with index `cp` (or s.size()).
std::size_t byte_offset(std::string_view s, std::size_t cp) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (is_continuation_byte(s[i])) continue;
        if (count == cp) return i;
        ++count;
    }
    return s.size();
}

void hard_split(std::string_view sentence, std::size_t limit, std::vector<std::string>& out) {
    while (utf8_length(sentence) > limit) {
        std::size_t cut = byte_offset(sentence, limit);
        std::size_t space = std::string_view::npos;
        for (std::size_t k = cut + 1; k-- > 0;) {
            if (k < sentence.size() && sentence[k] == ' ') {
                space = k;
                break;
            }
        }
        if (space != std::string_view::npos && space > 0) {
            out.emplace_back(sentence.substr(0, space));
            sentence.remove_prefix(space + 1);
        } else {
            out.emplace_back(sentence.substr(0, cut));
            sentence.remove_prefix(cut);
        }
    }
    if (!sentence.empty()) out.emplace_back(sentence);
}

}  // namespace

std::string Tokenizer::truncate(std::string_view text, std::size_t max_tokens) const {
    auto words = split_words(text);
    auto join = [&](std::size_t n) {
        std::string s;
        for (std::size_t i = 0; i < n; ++i) {
            if (i) s += ' ';
            s += words[i];
        }
        return s;
    };
    std::size_t lo = 0, hi = words.size();
    while (lo < hi) {
        std::size_t mid = (lo + hi + 1) / 2;
        if (count(join(mid)) <= max_tokens)
            lo = mid;
        else
            hi = mid - 1;
    }
    return join(lo);
}

std::size_t count_words(std::string_view text) { return split_words(text).size(); }

const Tokenizer& get_tokenizer(const std::string& name) {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    auto it = r.tokenizers.find(name);
    if (it == r.tokenizers.end()) throw UnknownTokenizerError("unknown tokenizer: " + name);
    return *it->second;
}

void register_tokenizer(Tokenizer tokenizer) {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    auto name = tokenizer.name();
    if (r.tokenizers.count(name)) throw std::invalid_argument("tokenizer already registered: " + name);
    r.tokenizers.emplace(name, std::make_unique<Tokenizer>(std::move(tokenizer)));
}

std::vector<std::string> tokenizer_names() {
    auto& r = registry();
    std::lock_guard lock(r.mutex);
    std::vector<std::string> names;
    for (const auto& [name, _] : r.tokenizers) names.push_back(name);
    return names;
}

std::size_t token_len(std::string_view text, const Tokenizer& tokenizer) { return tokenizer.count(text); }

std::size_t utf8_length(std::string_view text) {
    return static_cast<std::size_t>(
        std::count_if(text.begin(), text.end(), [](char c) { return !is_continuation_byte(c); }));
}

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    for (auto w : split_words(text)) {
        if (!out.empty()) out += ' ';
        out += w;
    }
    return out;
}

std::vector<Sentence> split_sentences(std::string_view raw_text, std::size_t max_sentence_chars,
                                      const Tokenizer& tokenizer) {
    if (max_sentence_chars < 20) throw std::invalid_argument("max_sentence_chars must be >= 20");
    std::vector<std::string> pieces;
    std::size_t pos = 0;
    while (pos <= raw_text.size()) {
        std::size_t nl = raw_text.find('\n', pos);
        if (nl == std::string_view::npos) nl = raw_text.size();
        auto line = normalize_whitespace(raw_text.substr(pos, nl - pos));
        for (const auto& s : split_line(line)) hard_split(s, max_sentence_chars, pieces);
        pos = nl + 1;
    }
    if (pieces.empty()) throw EmptyInputError("input text is empty");
    return make_sentences(pieces, tokenizer);
}

std::vector<Sentence> make_sentences(const std::vector<std::string>& texts, const Tokenizer& tokenizer) {
    std::vector<Sentence> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        Sentence s;
        s.id = static_cast<SentenceId>(out.size()) + 1;
        s.text = t;
        s.char_len = utf8_length(t);
        s.token_len = tokenizer.count(t);
        out.push_back(std::move(s));
    }
    return out;
}

std::string format_numbered_lines(const std::vector<Sentence>& sentences, SentenceId id_offset) {
    std::string out;
    for (const auto& s : sentences) {
        if (!out.empty()) out += '\n';
        out += std::to_string(s.id - id_offset);
        out += " @ ";
        out += s.text;
    }
    return out;
}

std::vector<std::pair<int, std::string>> parse_numbered_lines(std::string_view text) {
    std::vector<std::pair<int, std::string>> out;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        std::size_t i = 0;
        while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
        if (i == 0 || line.compare(i, 3, " @ ") != 0) continue;
        out.emplace_back(std::stoi(line.substr(0, i)), line.substr(i + 3));
    }
    return out;
}

std::size_t total_tokens(const std::vector<Sentence>& sentences) {
    std::size_t n = 0;
    for (const auto& s : sentences) n += s.token_len;
    return n;
}

std::vector<Document> load_documents(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::filesystem::path p(path);
    std::vector<Document> docs;
    if (p.extension() == ".jsonl") {
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (normalize_whitespace(line).empty()) continue;
            try {
                auto j = nlohmann::json::parse(line);
                docs.push_back({j.at("doc_id").get<std::string>(), j.at("text").get<std::string>()});
            } catch (const nlohmann::json::exception& e) {
                throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
            }
        }
    } else {
        std::ostringstream ss;
        ss << in.rdbuf();
        docs.push_back({p.stem().string(), ss.str()});
    }
    return docs;
}

}  // namespace hichunk
