#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hichunk {

using SentenceId = int;

// Numbered atomic text unit. Ids are 1-based and consecutive in document order.
struct Sentence {
    SentenceId id = 0;
    std::string text;
    std::size_t char_len = 0;
    std::size_t token_len = 0;

    bool operator==(const Sentence&) const = default;
};

class EmptyInputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class UnknownTokenizerError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// A named token counting function.
class Tokenizer {
public:
    using CountFn = std::function<std::size_t(std::string_view)>;

    Tokenizer(std::string name, CountFn count) : name_(std::move(name)), count_(std::move(count)) {}

    const std::string& name() const { return name_; }
    std::size_t count(std::string_view text) const { return count_(text); }

    // Longest prefix of `text`, cut at a whitespace boundary, whose count is <= max_tokens.
    std::string truncate(std::string_view text, std::size_t max_tokens) const;

private:
    std::string name_;
    CountFn count_;
};

// Whitespace word count. This is the default counter.
std::size_t count_words(std::string_view text);

// Looks up a tokenizer by name. "whitespace" is always present; "chars4" approximates
// a byte-pair encoder at one token per four bytes of each word.
const Tokenizer& get_tokenizer(const std::string& name);
void register_tokenizer(Tokenizer tokenizer);
std::vector<std::string> tokenizer_names();

inline const Tokenizer& default_tokenizer() { return get_tokenizer("whitespace"); }

std::size_t token_len(std::string_view text, const Tokenizer& tokenizer = default_tokenizer());

// Number of Unicode code points in a UTF-8 string.
std::size_t utf8_length(std::string_view text);

// Trim and collapse every whitespace run to a single space.
std::string normalize_whitespace(std::string_view text);

// Splits raw text into sentences. A boundary is terminal punctuation (. ! ?), optionally
// followed by closing quotes or brackets, then whitespace and an uppercase letter or
// digit, unless the word before is a known abbreviation. Line breaks are also
// boundaries. Sentences longer than max_sentence_chars are hard split at the last
// whitespace before the limit, or at the limit when there is none.
std::vector<Sentence> split_sentences(std::string_view raw_text, std::size_t max_sentence_chars = 100,
                                      const Tokenizer& tokenizer = default_tokenizer());

// Builds sentences from pre-split lines (ids 1..N, no further splitting).
std::vector<Sentence> make_sentences(const std::vector<std::string>& texts,
                                     const Tokenizer& tokenizer = default_tokenizer());

// One "<id - id_offset> @ <text>" line per sentence, joined by '\n'.
std::string format_numbered_lines(const std::vector<Sentence>& sentences, SentenceId id_offset = 0);

// Inverse of format_numbered_lines. Lines without " @ " after a number are ignored.
std::vector<std::pair<int, std::string>> parse_numbered_lines(std::string_view text);

std::size_t total_tokens(const std::vector<Sentence>& sentences);

struct Document {
    std::string doc_id;
    std::string text;
};

// Reads a document file. ".jsonl" files hold one {doc_id, text} object per line; any
// other file is plain UTF-8 text whose doc_id is the file stem.
std::vector<Document> load_documents(const std::string& path);

}  // namespace hichunk
