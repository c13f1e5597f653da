#include <catch_amalgamated.hpp>

#include "hichunk/backend.hpp"
#include "hichunk/inference.hpp"
#include "support.hpp"

using namespace hichunk;
using testsupport::sentences_with_lengths;

namespace {

// Backend returning canned replies in order; throws when told to.
class ScriptedBackend : public GenerationBackend {
public:
    explicit ScriptedBackend(std::vector<std::string> replies) : replies_(std::move(replies)) {}
    std::string generate(const std::string& prompt) override {
        prompts.push_back(prompt);
        if (next_ >= replies_.size()) throw BackendError("script exhausted");
        auto r = replies_[next_++];
        if (r == "FAIL") throw BackendError("scripted failure");
        return r;
    }
    std::string name() const override { return "scripted"; }
    std::vector<std::string> prompts;

private:
    std::vector<std::string> replies_;
    std::size_t next_ = 0;
};

InferenceConfig fast_config(std::size_t window) {
    InferenceConfig c;
    c.window_token_limit = window;
    c.retry.initial_backoff = std::chrono::milliseconds(0);
    return c;
}

// Headed document: "# A<i>" headings every `section` sentences, 4-word body lines.
std::vector<Sentence> headed(int n, int section, const std::string& marker = "#") {
    std::vector<std::string> lines;
    for (int i = 1; i <= n; ++i) {
        if ((i - 1) % section == 0)
            lines.push_back(marker + " Heading " + std::to_string(i));
        else
            lines.push_back("Body line number " + std::to_string(i) + ".");
    }
    return make_sentences(lines);
}

}  // namespace

TEST_CASE("select_window") {
    auto s = sentences_with_lengths(std::vector<int>(10, 10));
    CHECK(select_window(s, 1, 35) == 4);
    CHECK(select_window(s, 1, 100) == 11);
    CHECK(select_window(s, 1, 1000) == 11);
    CHECK(select_window(s, 9, 10) == 10);
    CHECK(select_window(s, 10, 10) == 11);

    auto big = sentences_with_lengths({5, 50, 5});
    CHECK(select_window(big, 2, 10) == 3);  // an oversized sentence is admitted alone
    CHECK(select_window(big, 1, 10) == 2);
    CHECK_THROWS(select_window(s, 0, 10));
    CHECK_THROWS(select_window(s, 11, 10));
}

TEST_CASE("prompt layout") {
    auto s = make_sentences({"First sentence.", "Second one."});
    auto p = build_prompt(s);
    CHECK(p.rfind(std::string(kChunkingInstruction), 0) == 0);
    CHECK(p.size() >= 30);
    CHECK(p.substr(p.size() - std::string("1 @ First sentence.\n2 @ Second one.").size()) ==
          "1 @ First sentence.\n2 @ Second one.");
    CHECK(build_prompt(s, {}) == p);
    CHECK_THROWS(build_prompt(std::span<const Sentence>()));
}

TEST_CASE("prompt with residual lines matches the frozen fixture") {
    auto s = make_sentences({"# Storage engines", "Intro text.", "More intro.", "Writes go to a log.", "Compaction."});
    std::span<const Sentence> window(s.data() + 3, 2);
    auto p = build_prompt(window, {{1, "# Storage engines"}});
    CHECK(p == testsupport::golden("prompt_with_residual.txt", p));
    // Residual context sits above local line 1 and does not shift numbering.
    CHECK(p.find("(L1) @ # Storage engines\n1 @ Writes go to a log.\n2 @ Compaction.") != std::string::npos);
}

TEST_CASE("parse_chunk_output examples") {
    SECTION("offset arithmetic") {
        auto r = parse_chunk_output("1, 1, True\n12, 2, False", 40, 20);
        REQUIRE(r.points.size() == 2);
        CHECK(r.points[0] == ChunkPoint{41, 1, true});
        CHECK(r.points[1] == ChunkPoint{52, 2, false});
        CHECK(r.warnings.empty());
    }
    SECTION("garbage lines are skipped with a warning") {
        auto r = parse_chunk_output("garbage\n3, 1, True", 0, 10);
        REQUIRE(r.points.size() == 1);
        CHECK(r.points[0] == ChunkPoint{3, 1, true});
        CHECK(r.warnings.size() == 1);
    }
    SECTION("levels above the maximum are clamped") {
        auto r = parse_chunk_output("2, 9, False", 0, 10, 4);
        REQUIRE(r.points.size() == 1);
        CHECK(r.points[0].level == 4);
        CHECK(r.warnings.size() == 1);
    }
    SECTION("out-of-window ids are skipped") {
        auto r = parse_chunk_output("0, 1, True\n11, 1, True\n10, 1, False", 0, 10);
        REQUIRE(r.points.size() == 1);
        CHECK(r.points[0].sentence_id == 10);
        CHECK(r.warnings.size() == 2);
    }
    SECTION("duplicates keep the first occurrence and output is sorted") {
        auto r = parse_chunk_output("5, 2, False\n3, 1, True\n5, 1, True", 0, 10);
        REQUIRE(r.points.size() == 2);
        CHECK(r.points[0] == ChunkPoint{3, 1, true});
        CHECK(r.points[1] == ChunkPoint{5, 2, false});
    }
    SECTION("list decoration is tolerated") {
        auto r = parse_chunk_output("[\"1, 1, True\",\n \"4, 2, false\"]", 0, 10);
        REQUIRE(r.points.size() == 2);
        CHECK(r.points[1] == ChunkPoint{4, 2, false});
    }
    SECTION("empty output") { CHECK(parse_chunk_output("", 0, 10).points.empty()); }
}

TEST_CASE("merge_points") {
    auto gcp = group_by_level({{1, 1, true}, {20, 1, false}, {50, 1, false}, {30, 2, false}, {48, 2, false}}, 4);
    SECTION("disjoint ranges concatenate") {
        auto local = group_by_level({{60, 1, false}, {70, 2, false}}, 4);
        auto m = merge_points(gcp, local, 60);
        CHECK(m.level(1) == std::vector<ChunkPoint>{{1, 1, true}, {20, 1, false}, {50, 1, false}, {60, 1, false}});
        CHECK(m.level(2) == std::vector<ChunkPoint>{{30, 2, false}, {48, 2, false}, {70, 2, false}});
    }
    SECTION("re-predicted overlap replaces the old suffix") {
        // Window restarts at 45: old points at 48 (L2) and 50 (L1) are dropped, 47 (L1) is added,
        // everything before 45 stays.
        auto local = group_by_level({{47, 1, false}}, 4);
        auto m = merge_points(gcp, local, 45);
        CHECK(m.level(1) == std::vector<ChunkPoint>{{1, 1, true}, {20, 1, false}, {47, 1, false}});
        CHECK(m.level(2) == std::vector<ChunkPoint>{{30, 2, false}});
    }
    SECTION("empty local at the end is identity") { CHECK(merge_points(gcp, ChunkPointSet(4), 51) == gcp); }
}

TEST_CASE("residual lines") {
    auto s = make_sentences({"s1", "s2", "s3", "s4", "s5", "s6", "s7", "s8", "s9"});
    CHECK(get_residual_lines(group_by_level({{1, 1, false}, {4, 2, false}}, 4), s) ==
          ResidualLines{{1, "s1"}, {2, "s4"}});
    CHECK(get_residual_lines(group_by_level({{1, 1, false}}, 4), s) == ResidualLines{{1, "s1"}});
    // A level-2 point older than the current level-1 segment is closed.
    CHECK(get_residual_lines(group_by_level({{1, 1, false}, {2, 2, false}, {5, 1, false}}, 4), s) ==
          ResidualLines{{1, "s5"}});
    CHECK(get_residual_lines(group_by_level({{1, 1, false}, {3, 2, false}, {6, 3, false}, {7, 2, false}}, 4), s) ==
          ResidualLines{{1, "s1"}, {2, "s7"}});
    CHECK_THROWS_AS(get_residual_lines(ChunkPointSet(4), s), std::invalid_argument);
}

TEST_CASE("mock backend rules") {
    MockBackend mock;
    auto one = make_sentences({"# A"});
    CHECK(mock.generate(build_prompt(one)) == "1, 1, True\n");
    auto plain = make_sentences({"Nothing here.", "Still nothing."});
    CHECK(mock.generate(build_prompt(plain)) == "1, 1, False\n");
    CHECK(mock.generate(build_prompt(plain, {{1, "# A"}, {2, "## B"}})) == "1, 3, False\n");
    auto nested = make_sentences({"# A", "x", "## B", "### C", "#### D", "#hashtag"});
    CHECK(mock.generate(build_prompt(nested)) == "1, 1, True\n3, 2, True\n4, 3, True\n5, 4, True\n");
    CHECK(mock.calls() == 4);
}

TEST_CASE("mock output on the nested markers fixture is frozen") {
    auto s = split_sentences(testsupport::read_file(HICHUNK_FIXTURE_DIR "/nested_markers.txt"));
    MockBackend mock;
    auto out = mock.generate(build_prompt(s));
    CHECK(out == testsupport::golden("nested_markers.mock.txt", out));

    auto result = hichunk_document(s, mock);
    auto tree = serialize_tree(result.tree);
    CHECK(tree == testsupport::golden("nested_markers.tree.json", tree));
    CHECK(result.backend_calls == 1);
}

TEST_CASE("a document that fits one window takes one call") {
    auto s = headed(30, 10);
    MockBackend mock;
    auto r = hichunk_document(s, mock, fast_config(16384));
    CHECK(mock.calls() == 1);
    REQUIRE(r.trace.size() == 1);
    CHECK(r.trace[0].window_end == 31);
    auto reply = mock.generate(build_prompt(s));
    auto expected = build_tree(s, parse_chunk_output(reply, 0, 30).points);
    CHECK(r.tree == expected);
}

TEST_CASE("two level-1 points restart the next window at the last one") {
    // 4 tokens per line, window of 60 tokens = 15 lines, headings every 6 lines:
    // window 1 = [1,16) holds headings 1, 7, 13 so window 2 starts at 13 with no residual.
    auto s = headed(24, 6);
    MockBackend mock;
    auto r = hichunk_document(s, mock, fast_config(60));
    REQUIRE(r.trace.size() >= 2);
    CHECK(r.trace[0].window_start == 1);
    CHECK(r.trace[0].window_end == 16);
    CHECK(r.trace[0].local_level1 == 3);
    CHECK(r.trace[0].restarted);
    CHECK(r.trace[1].window_start == 13);
    CHECK(r.trace[1].residual_lines == 0);
    CHECK(r.points.level(1) == std::vector<ChunkPoint>{{1, 1, true}, {7, 1, true}, {13, 1, true}, {19, 1, true}});
}

TEST_CASE("a single level-1 point advances to the window end with residual lines") {
    // One heading, then "## " sub-headings every 8 lines; the window holds 15 lines.
    std::vector<std::string> lines{"# Only heading"};
    for (int i = 2; i <= 40; ++i)
        lines.push_back(i % 8 == 0 ? "## Sub " + std::to_string(i) : "Body line number " + std::to_string(i) + ".");
    auto s = make_sentences(lines);
    MockBackend mock;
    auto r = hichunk_document(s, mock, fast_config(60));
    REQUIRE(r.trace.size() >= 2);
    CHECK(r.trace[0].local_level1 == 1);
    CHECK_FALSE(r.trace[0].restarted);
    CHECK(r.trace[1].window_start == r.trace[0].window_end);
    CHECK(r.trace[1].residual_lines == 2);
    CHECK(r.points.level(1) == std::vector<ChunkPoint>{{1, 1, true}});
    for (const auto& p : r.points.level(2)) CHECK(s[static_cast<std::size_t>(p.sentence_id - 1)].text.rfind("## ", 0) == 0);
}

TEST_CASE("windows without points fall back to a level-1 point at the window start") {
    auto s = sentences_with_lengths(std::vector<int>(10, 10));
    ScriptedBackend backend({"nothing useful", "also nothing", "3, 1, True"});
    auto r = hichunk_document(s, backend, fast_config(40));
    CHECK(r.tree.root().children.size() >= 2);
    CHECK_FALSE(r.warnings.empty());
    CHECK(r.points.level(1).front().sentence_id == 1);
}

TEST_CASE("backend failure after retries reports the partial points") {
    auto s = sentences_with_lengths(std::vector<int>(10, 10));
    ScriptedBackend backend({"1, 1, True\n3, 1, True", "FAIL", "FAIL", "FAIL"});
    try {
        hichunk_document(s, backend, fast_config(40));
        FAIL("expected an inference error");
    } catch (const InferenceError& e) {
        CHECK(e.partial().level(1) == std::vector<ChunkPoint>{{1, 1, true}, {3, 1, true}});
    }
    CHECK(backend.prompts.size() == 4);
}

TEST_CASE("retry recovers from transient failures") {
    ScriptedBackend backend({"FAIL", "FAIL", "ok"});
    RetryPolicy policy{3, std::chrono::milliseconds(0)};
    CHECK(generate_with_retry(backend, "p", policy) == "ok");
    ScriptedBackend dead({"FAIL", "FAIL", "FAIL", "ok"});
    CHECK_THROWS_AS(generate_with_retry(dead, "p", policy), BackendError);
}

TEST_CASE("inference is deterministic and covers the document") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        int n = testsupport::uniform(rng, 5, 200);
        std::vector<std::string> lines;
        for (int i = 1; i <= n; ++i) {
            int roll = testsupport::uniform(rng, 0, 20);
            std::string marker = roll == 0 ? "# " : roll == 1 ? "## " : roll == 2 ? "### " : "";
            lines.push_back(marker + "Line " + std::to_string(i) + " with words.");
        }
        auto s = make_sentences(lines);
        MockBackend m1, m2;
        auto cfg = fast_config(static_cast<std::size_t>(testsupport::uniform(rng, 20, 200)));
        auto r1 = hichunk_document(s, m1, cfg);
        auto r2 = hichunk_document(s, m2, cfg);
        CHECK(r1.tree == r2.tree);
        CHECK(r1.points.level(1).front().sentence_id == 1);
        r1.tree.validate();
        for (std::size_t i = 1; i < r1.trace.size(); ++i) {
            CHECK(r1.trace[i].window_start > r1.trace[i - 1].window_start);
            if (r1.trace[i - 1].restarted) CHECK(r1.trace[i].residual_lines == 0);
        }
        CHECK(r1.trace.back().window_end == n + 1);
    }
}
