#include <catch_amalgamated.hpp>

#include "hichunk/baselines.hpp"
#include "support.hpp"

using namespace hichunk;
using testsupport::sentences_with_lengths;

namespace {

std::vector<std::size_t> sentence_counts(const ChunkedDocument& d) {
    std::vector<std::size_t> out;
    for (const auto& u : d.units) out.push_back(static_cast<std::size_t>(u.end_sentence - u.start_sentence));
    return out;
}

void check_partition(const ChunkedDocument& d, const std::vector<Sentence>& s) {
    SentenceId next = 1;
    std::size_t sum = 0;
    for (std::size_t i = 0; i < d.units.size(); ++i) {
        CHECK(d.units[i].start_sentence == next);
        CHECK(d.units[i].doc_order == static_cast<int>(i));
        next = d.units[i].end_sentence;
        sum += d.units[i].token_len;
    }
    CHECK(next == static_cast<SentenceId>(s.size()) + 1);
    CHECK(sum == total_tokens(s));
}

}  // namespace

TEST_CASE("fixed_chunk packing") {
    auto ten = sentences_with_lengths(std::vector<int>(10, 50));
    CHECK(sentence_counts(fixed_chunk(ten, 200)) == std::vector<std::size_t>{4, 4, 2});
    auto one = fixed_chunk(sentences_with_lengths({300}), 200);
    REQUIRE(one.units.size() == 1);
    CHECK(one.units[0].token_len == 300);
    CHECK(kDefaultChunkSize == 200);
    CHECK(fixed_chunk(ten).units.size() == 3);
    CHECK_THROWS(fixed_chunk(ten, 0));
}

TEST_CASE("fixed_chunk unit count for uniform sentences") {
    for (int len : {1, 2, 4, 5, 8, 10, 20, 25, 40, 50, 100, 200}) {
        for (int n : {1, 7, 33, 100}) {
            auto s = sentences_with_lengths(std::vector<int>(static_cast<std::size_t>(n), len));
            auto d = fixed_chunk(s, 200);
            std::size_t total = static_cast<std::size_t>(n * len);
            CHECK(d.units.size() == (total + 199) / 200);
            check_partition(d, s);
        }
    }
}

TEST_CASE("fixed_chunk ignores structure and links to one leaf") {
    std::mt19937_64 rng(4);
    auto s = testsupport::random_sentences(rng, 60, 1, 40);
    auto d = fixed_chunk(s, 120, "doc");
    CHECK(d.tree.depth() == 1);
    CHECK(d.tree.leaves().size() == 1);
    for (const auto& u : d.units) CHECK(u.leaf_node == d.tree.leaves().front());
    check_partition(d, s);
}

TEST_CASE("semantic_chunk on identical sentences has no boundaries") {
    auto s = make_sentences(std::vector<std::string>(8, "The same words again."));
    BagOfWordsEmbedder e;
    auto d = semantic_chunk(s, e);
    CHECK(d.units.size() == 1);
    check_partition(d, s);
}

TEST_CASE("semantic_chunk splits disjoint topic blocks exactly once") {
    // Inside each block adjacent sentences share vocabulary (cosine > 0); across the seam
    // they share none, so the seam cosine is 0 and is the only value below the 10th percentile.
    std::vector<std::string> lines;
    for (int i = 0; i < 6; ++i) lines.push_back("apple banana cherry " + std::string(i % 2 ? "date" : "elder") + ".");
    for (int i = 0; i < 6; ++i) lines.push_back("quartz rock stone " + std::string(i % 2 ? "slate" : "shale") + ".");
    auto s = make_sentences(lines);
    BagOfWordsEmbedder e;
    auto d = semantic_chunk(s, e, 10.0);
    REQUIRE(d.units.size() == 2);
    CHECK(d.units[1].start_sentence == 7);
    check_partition(d, s);
}

TEST_CASE("semantic_chunk percentile 100 disables boundaries") {
    std::vector<std::string> lines{"alpha beta.", "gamma delta.", "alpha beta.", "epsilon zeta.", "eta theta."};
    auto s = make_sentences(lines);
    BagOfWordsEmbedder e;
    CHECK(semantic_chunk(s, e, 100.0).units.size() == 1);
    CHECK_THROWS(semantic_chunk(s, e, 0.0));
    CHECK_THROWS(semantic_chunk(s, e, 101.0));
    CHECK_THROWS(semantic_chunk(make_sentences({"only one."}), e));
}

TEST_CASE("semantic_chunk breaks at tied minimum similarities") {
    // Half the seams have cosine 0, so the 10th percentile is 0 itself.
    std::vector<std::string> lines;
    for (int i = 0; i < 10; ++i) {
        lines.push_back("topic" + std::to_string(i) + " alpha.");
        lines.push_back("topic" + std::to_string(i) + " beta.");
    }
    auto s = make_sentences(lines);
    BagOfWordsEmbedder e;
    auto d = semantic_chunk(s, e);
    CHECK(d.units.size() == 10);
    for (std::size_t i = 0; i < d.units.size(); ++i) CHECK(d.units[i].start_sentence == static_cast<int>(2 * i + 1));
}

TEST_CASE("semantic_chunk partitions random text") {
    std::mt19937_64 rng(17);
    BagOfWordsEmbedder e;
    const std::vector<std::string> vocab{"river", "stone", "cloud", "light", "glass", "paper", "metal", "seed"};
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::string> lines;
        int n = testsupport::uniform(rng, 2, 60);
        for (int i = 0; i < n; ++i) {
            std::string line;
            for (int w = 0, k = testsupport::uniform(rng, 1, 6); w < k; ++w)
                line += vocab[static_cast<std::size_t>(testsupport::uniform(rng, 0, 7))] + " ";
            lines.push_back(line + "end.");
        }
        auto s = make_sentences(lines);
        double p = testsupport::uniform(rng, 1, 100);
        auto d = semantic_chunk(s, e, p);
        check_partition(d, s);
        d.tree.validate();
        CHECK(d.tree.depth() == 1);
    }
}

TEST_CASE("percentile interpolation") {
    CHECK(percentile({1, 2, 3, 4, 5}, 0) == 1.0);
    CHECK(percentile({1, 2, 3, 4, 5}, 100) == 5.0);
    CHECK(percentile({1, 2, 3, 4, 5}, 50) == 3.0);
    CHECK(percentile({0, 10}, 10) == Catch::Approx(1.0));
    CHECK_THROWS(percentile({}, 50));
}

TEST_CASE("bag-of-words cosine") {
    BagOfWordsEmbedder e;
    auto v = e.embed({"Apple pie, apple tart.", "apple PIE apple tart", "stone wall", ""});
    REQUIRE(v.size() == 4);
    CHECK(cosine(v[0], v[1]) == Catch::Approx(1.0));
    CHECK(cosine(v[0], v[2]) == 0.0);
    CHECK(cosine(v[0], v[3]) == 0.0);
    CHECK(e.dimension() == BagOfWordsEmbedder::kDimension);
    CHECK(make_embedder("bow")->name() == "bow");
    CHECK_THROWS(make_embedder("nope"));
}
