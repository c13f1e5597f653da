#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hichunk/eval.hpp"

namespace hichunk {

// Parameters of the planted-structure corpus. Every document is a sequence of "# " sections
// holding "## " subsections, some of which hold "### " sub-subsections. Each subsection
// has its own key words; they appear only in the leading part of its body (plus rare
// cross-references elsewhere), while the rest of the body uses subsection detail words.
struct SynthOptions {
    int sections_min = 6;
    int sections_max = 10;
    int subsections_min = 2;
    int subsections_max = 4;
    double subsubsection_prob = 0.5;  // chance a subsection is split into 2-3 parts
    int body_sentences_min = 30;
    int body_sentences_max = 54;
    int words_min = 7;
    int words_max = 11;
    double key_region = 0.6;      // leading fraction of a subsection body carrying key words
    double key_density = 0.6;     // chance a sentence in that region mentions a key word
    double crossref_rate = 0.06;  // chance any body sentence mentions another subsection's key word
    int t1_per_doc = 4;
    int t0_per_doc = 1;
    double evidence_fraction = 0.2;  // T1 evidence share of the target subsection body
};

struct SynthDocument {
    std::string doc_id;
    std::string text;
    std::vector<Sentence> sentences;
    GoldStructure gold;
    std::vector<QAItem> qa;

    EvalDocument eval_document() const { return {doc_id, sentences}; }
};

SynthDocument generate_document(std::uint64_t seed, const std::string& doc_id, const SynthOptions& options = {});

// Documents "synth-<seed>-<i>" for i in [0, count).
std::vector<SynthDocument> generate_corpus(std::uint64_t seed, int count, const SynthOptions& options = {});

}  // namespace hichunk
