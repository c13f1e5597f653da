#include "hichunk/tree.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

namespace hichunk {

using nlohmann::json;

ChunkTree::ChunkTree(std::string doc_id, std::vector<Sentence> sentences, std::vector<TreeNode> nodes)
    : doc_id_(std::move(doc_id)), sentences_(std::move(sentences)), nodes_(std::move(nodes)) {
    prefix_tokens_.assign(sentences_.size() + 1, 0);
    for (std::size_t i = 0; i < sentences_.size(); ++i)
        prefix_tokens_[i + 1] = prefix_tokens_[i] + sentences_[i].token_len;
}

int ChunkTree::depth() const {
    int d = 0;
    for (const auto& n : nodes_) d = std::max(d, n.level);
    return d;
}

std::vector<NodeId> ChunkTree::leaves() const {
    std::vector<NodeId> out;
    for (const auto& n : nodes_)
        if (n.is_leaf() && n.parent) out.push_back(n.node_id);
    return out;
}

std::string ChunkTree::text(SentenceId start, SentenceId end) const {
    std::string out;
    for (SentenceId s = start; s < end; ++s) {
        if (!out.empty()) out += ' ';
        out += sentences_.at(static_cast<std::size_t>(s - 1)).text;
    }
    return out;
}

std::size_t ChunkTree::range_tokens(SentenceId start, SentenceId end) const {
    return prefix_tokens_.at(static_cast<std::size_t>(end - 1)) - prefix_tokens_.at(static_cast<std::size_t>(start - 1));
}

std::vector<ChunkPoint> ChunkTree::chunk_points() const {
    std::vector<ChunkPoint> out;
    std::set<SentenceId> seen;
    for (const auto& n : nodes_) {
        if (!n.parent || !seen.insert(n.start_sentence).second) continue;
        out.push_back({n.start_sentence, n.level, n.is_title});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.sentence_id < b.sentence_id; });
    return out;
}

void ChunkTree::validate() const {
    auto fail = [](const std::string& msg) { throw TreeError(msg); };
    const auto n_sent = static_cast<SentenceId>(sentences_.size());
    if (n_sent == 0) fail("tree has no sentences");
    for (std::size_t i = 0; i < sentences_.size(); ++i)
        if (sentences_[i].id != static_cast<SentenceId>(i) + 1) fail("sentence ids are not consecutive");
    if (nodes_.empty()) fail("tree has no root");
    const auto& r = nodes_.front();
    if (r.level != 0 || r.parent || r.start_sentence != 1 || r.end_sentence != n_sent + 1)
        fail("root must be level 0 covering every sentence");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& n = nodes_[i];
        if (n.node_id != static_cast<NodeId>(i)) fail("node ids must equal their index");
        if (n.start_sentence < 1 || n.end_sentence > n_sent + 1 || n.start_sentence >= n.end_sentence)
            fail("node " + std::to_string(i) + " has an invalid range");
        if (n.token_len != range_tokens(n.start_sentence, n.end_sentence))
            fail("node " + std::to_string(i) + " token_len mismatch");
        if (i > 0) {
            if (!n.parent || *n.parent < 0 || *n.parent >= static_cast<NodeId>(i))
                fail("node " + std::to_string(i) + " has an invalid parent");
            const auto& p = nodes_[static_cast<std::size_t>(*n.parent)];
            if (std::find(p.children.begin(), p.children.end(), n.node_id) == p.children.end())
                fail("node " + std::to_string(i) + " missing from its parent's children");
        }
        SentenceId cursor = n.start_sentence;
        for (NodeId c : n.children) {
            if (c <= n.node_id || c >= static_cast<NodeId>(nodes_.size())) fail("child id out of order");
            const auto& ch = nodes_[static_cast<std::size_t>(c)];
            if (ch.parent != n.node_id) fail("child parent link mismatch");
            if (ch.level != n.level + 1) fail("child level must be parent level + 1");
            if (ch.start_sentence != cursor) fail("children do not partition parent range");
            cursor = ch.end_sentence;
        }
        if (!n.children.empty() && cursor != n.end_sentence) fail("children do not cover parent range");
    }
}

ChunkTree build_tree(std::vector<Sentence> sentences, std::vector<ChunkPoint> points, int max_levels,
                     std::string doc_id) {
    if (sentences.empty()) throw TreeError("cannot build a tree without sentences");
    if (max_levels < 1) throw TreeError("max_levels must be >= 1");
    const auto n_sent = static_cast<SentenceId>(sentences.size());
    for (const auto& p : points) {
        if (p.sentence_id < 1 || p.sentence_id > n_sent)
            throw TreeError("chunk point sentence id " + std::to_string(p.sentence_id) + " out of range");
        if (p.level < 1 || p.level > max_levels)
            throw TreeError("chunk point level " + std::to_string(p.level) + " out of range");
    }
    std::stable_sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
        return a.sentence_id != b.sentence_id ? a.sentence_id < b.sentence_id : a.level < b.level;
    });
    points.erase(std::unique(points.begin(), points.end(),
                             [](const auto& a, const auto& b) {
                                 return a.sentence_id == b.sentence_id && a.level == b.level;
                             }),
                 points.end());
    if (points.empty() || points.front().sentence_id != 1) points.insert(points.begin(), {1, 1, false});

    std::vector<TreeNode> nodes;
    auto open_node = [&](NodeId parent, SentenceId start, bool title) {
        TreeNode n;
        n.node_id = static_cast<NodeId>(nodes.size());
        n.level = nodes[static_cast<std::size_t>(parent)].level + 1;
        n.start_sentence = start;
        n.is_title = title;
        n.parent = parent;
        nodes[static_cast<std::size_t>(parent)].children.push_back(n.node_id);
        nodes.push_back(std::move(n));
        return nodes.back().node_id;
    };

    TreeNode root;
    root.start_sentence = 1;
    root.end_sentence = n_sent + 1;
    nodes.push_back(root);
    std::vector<NodeId> path{0};  // path[l] = open node at level l

    for (const auto& p : points) {
        while (static_cast<int>(path.size()) > p.level) {
            nodes[static_cast<std::size_t>(path.back())].end_sentence = p.sentence_id;
            path.pop_back();
        }
        while (static_cast<int>(path.size()) <= p.level) {
            NodeId parent = path.back();
            const auto& pn = nodes[static_cast<std::size_t>(parent)];
            if (pn.children.empty() && pn.start_sentence < p.sentence_id) {
                NodeId filler = open_node(parent, pn.start_sentence, false);
                nodes[static_cast<std::size_t>(filler)].end_sentence = p.sentence_id;
            }
            bool last = static_cast<int>(path.size()) == p.level;
            path.push_back(open_node(parent, p.sentence_id, last && p.is_title));
        }
    }
    for (NodeId id : path) nodes[static_cast<std::size_t>(id)].end_sentence = n_sent + 1;

    ChunkTree skeleton(doc_id, sentences, {});
    for (auto& n : nodes) n.token_len = skeleton.range_tokens(n.start_sentence, n.end_sentence);
    return ChunkTree(std::move(doc_id), std::move(sentences), std::move(nodes));
}

std::vector<RetrievalUnit> fixed_size_split(const ChunkTree& tree, std::size_t size) {
    if (size < 1) throw std::invalid_argument("chunk size must be >= 1");
    std::vector<RetrievalUnit> units;
    const auto& sents = tree.sentences();
    auto emit = [&](NodeId leaf, SentenceId start, SentenceId end) {
        RetrievalUnit u;
        u.unit_id = static_cast<int>(units.size());
        u.doc_order = u.unit_id;
        u.leaf_node = leaf;
        u.start_sentence = start;
        u.end_sentence = end;
        u.text = tree.text(start, end);
        u.token_len = tree.range_tokens(start, end);
        units.push_back(std::move(u));
    };
    for (NodeId leaf : tree.leaves()) {
        const auto& n = tree.node(leaf);
        SentenceId start = n.start_sentence;
        std::size_t acc = 0;
        for (SentenceId s = n.start_sentence; s < n.end_sentence; ++s) {
            std::size_t t = sents[static_cast<std::size_t>(s - 1)].token_len;
            if (s > start && acc + t > size) {
                emit(leaf, start, s);
                start = s;
                acc = 0;
            }
            acc += t;
        }
        emit(leaf, start, n.end_sentence);
    }
    return units;
}

ChunkTree truncate_levels(const ChunkTree& tree, int max_level) {
    if (max_level < 1) throw std::invalid_argument("max_level must be >= 1");
    std::vector<NodeId> remap(tree.nodes().size(), -1);
    std::vector<TreeNode> kept;
    for (const auto& n : tree.nodes()) {
        if (n.level > max_level) continue;
        TreeNode copy = n;
        copy.node_id = static_cast<NodeId>(kept.size());
        remap[static_cast<std::size_t>(n.node_id)] = copy.node_id;
        if (copy.parent) copy.parent = remap[static_cast<std::size_t>(*copy.parent)];
        if (copy.level == max_level)
            copy.children.clear();
        else
            for (auto& c : copy.children) c = -1 - c;  // resolved below
        kept.push_back(std::move(copy));
    }
    for (auto& n : kept)
        for (auto& c : n.children) c = remap[static_cast<std::size_t>(-1 - c)];
    return ChunkTree(tree.doc_id(), tree.sentences(), std::move(kept));
}

namespace {

json tree_to_json(const ChunkTree& tree) {
    json sentences = json::array();
    for (const auto& s : tree.sentences())
        sentences.push_back({{"id", s.id}, {"text", s.text}, {"char_len", s.char_len}, {"token_len", s.token_len}});
    json nodes = json::array();
    for (const auto& n : tree.nodes()) {
        nodes.push_back({{"node_id", n.node_id},
                         {"level", n.level},
                         {"start_sentence", n.start_sentence},
                         {"end_sentence", n.end_sentence},
                         {"is_title", n.is_title},
                         {"children", n.children},
                         {"parent", n.parent ? json(*n.parent) : json(nullptr)},
                         {"token_len", n.token_len}});
    }
    return {{"schema_version", kTreeSchemaVersion},
            {"doc_id", tree.doc_id()},
            {"sentences", std::move(sentences)},
            {"nodes", std::move(nodes)}};
}

}  // namespace

std::string serialize_tree(const ChunkTree& tree) { return tree_to_json(tree).dump(1) + "\n"; }

ChunkTree deserialize_tree(const std::string& document) {
    try {
        auto j = json::parse(document);
        if (j.at("schema_version").get<int>() != kTreeSchemaVersion)
            throw SchemaError("unsupported tree schema_version " + j.at("schema_version").dump());
        std::vector<Sentence> sentences;
        for (const auto& s : j.at("sentences"))
            sentences.push_back({s.at("id").get<SentenceId>(), s.at("text").get<std::string>(),
                                 s.at("char_len").get<std::size_t>(), s.at("token_len").get<std::size_t>()});
        std::vector<TreeNode> nodes;
        for (const auto& n : j.at("nodes")) {
            TreeNode t;
            t.node_id = n.at("node_id").get<NodeId>();
            t.level = n.at("level").get<int>();
            t.start_sentence = n.at("start_sentence").get<SentenceId>();
            t.end_sentence = n.at("end_sentence").get<SentenceId>();
            t.is_title = n.at("is_title").get<bool>();
            t.children = n.at("children").get<std::vector<NodeId>>();
            if (!n.at("parent").is_null()) t.parent = n.at("parent").get<NodeId>();
            t.token_len = n.at("token_len").get<std::size_t>();
            nodes.push_back(std::move(t));
        }
        ChunkTree tree(j.at("doc_id").get<std::string>(), std::move(sentences), std::move(nodes));
        tree.validate();
        return tree;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed tree document: ") + e.what());
    } catch (const TreeError& e) {
        throw SchemaError(std::string("invalid tree document: ") + e.what());
    }
}

std::string serialize_units(const std::vector<RetrievalUnit>& units) {
    json arr = json::array();
    for (const auto& u : units)
        arr.push_back({{"unit_id", u.unit_id},
                       {"leaf_node", u.leaf_node},
                       {"doc_order", u.doc_order},
                       {"start_sentence", u.start_sentence},
                       {"end_sentence", u.end_sentence},
                       {"token_len", u.token_len}});
    return json{{"schema_version", kTreeSchemaVersion}, {"units", std::move(arr)}}.dump(1) + "\n";
}

std::vector<RetrievalUnit> deserialize_units(const std::string& document, const ChunkTree& tree) {
    try {
        auto j = json::parse(document);
        if (j.at("schema_version").get<int>() != kTreeSchemaVersion)
            throw SchemaError("unsupported units schema_version");
        std::vector<RetrievalUnit> units;
        const auto n_sent = static_cast<SentenceId>(tree.sentence_count());
        for (const auto& u : j.at("units")) {
            RetrievalUnit r;
            r.unit_id = u.at("unit_id").get<int>();
            r.leaf_node = u.at("leaf_node").get<NodeId>();
            r.doc_order = u.at("doc_order").get<int>();
            r.start_sentence = u.at("start_sentence").get<SentenceId>();
            r.end_sentence = u.at("end_sentence").get<SentenceId>();
            r.token_len = u.at("token_len").get<std::size_t>();
            if (r.start_sentence < 1 || r.end_sentence > n_sent + 1 || r.start_sentence >= r.end_sentence ||
                r.leaf_node < 0 || r.leaf_node >= static_cast<NodeId>(tree.nodes().size()))
                throw SchemaError("unit " + std::to_string(r.unit_id) + " does not fit the tree");
            r.text = tree.text(r.start_sentence, r.end_sentence);
            units.push_back(std::move(r));
        }
        return units;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed units document: ") + e.what());
    }
}

}  // namespace hichunk
