#include "hichunk/retrieval.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace hichunk {

RankedList rank_units(const std::vector<RetrievalUnit>& units, const std::string& query, const Embedder& embedder) {
    std::vector<std::string> texts;
    texts.reserve(units.size());
    for (const auto& u : units) texts.push_back(u.text);
    return rank_units(units, embedder.embed(texts), query, embedder);
}

RankedList rank_units(const std::vector<RetrievalUnit>& units, const std::vector<Embedding>& unit_vectors,
                      const std::string& query, const Embedder& embedder) {
    if (units.empty()) throw std::invalid_argument("cannot rank an empty unit list");
    if (unit_vectors.size() != units.size()) throw EmbedderError("one vector per unit is required");
    auto q = embedder.embed({query});
    if (q.size() != 1) throw EmbedderError("embedder returned no query vector");

    std::vector<std::pair<RankedEntry, int>> scored;
    scored.reserve(units.size());
    for (std::size_t i = 0; i < units.size(); ++i)
        scored.push_back({{units[i].unit_id, cosine(q.front(), unit_vectors[i])}, units[i].doc_order});
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first.score != b.first.score) return a.first.score > b.first.score;
        return a.second < b.second;
    });
    RankedList out{query, {}};
    out.entries.reserve(scored.size());
    for (const auto& [entry, _] : scored) out.entries.push_back(entry);
    return out;
}

double theta_star(double tk_cur, double node_len, double budget) {
    if (budget <= 0.0) throw std::invalid_argument("budget must be positive");
    return node_len / 3.0 * (1.0 + tk_cur / budget);
}

MergeIndex::MergeIndex(const ChunkTree& tree, const std::vector<RetrievalUnit>& units)
    : tree_(&tree), units_(&units) {
    const auto& nodes = tree.nodes();
    std::vector<int> node_element(nodes.size(), -1);

    Element root;
    root.start_sentence = tree.root().start_sentence;
    root.end_sentence = tree.root().end_sentence;
    root.token_len = tree.root().token_len;
    root.tree_node = 0;
    elements_.push_back(root);
    node_element[0] = 0;

    auto add_child = [&](int parent, SentenceId start, SentenceId end, int level) {
        Element e;
        e.start_sentence = start;
        e.end_sentence = end;
        e.token_len = tree.range_tokens(start, end);
        e.level = level;
        e.parent = parent;
        int id = static_cast<int>(elements_.size());
        elements_[static_cast<std::size_t>(parent)].children.push_back(id);
        elements_.push_back(std::move(e));
        return id;
    };

    for (const auto& n : nodes) {
        if (!n.parent) continue;
        int pe = node_element[static_cast<std::size_t>(*n.parent)];
        const auto& p = elements_[static_cast<std::size_t>(pe)];
        if (p.start_sentence == n.start_sentence && p.end_sentence == n.end_sentence) {
            node_element[static_cast<std::size_t>(n.node_id)] = pe;
            continue;
        }
        int id = add_child(pe, n.start_sentence, n.end_sentence, n.level);
        elements_[static_cast<std::size_t>(id)].tree_node = n.node_id;
        node_element[static_cast<std::size_t>(n.node_id)] = id;
    }

    for (const auto& u : units) {
        if (u.leaf_node < 0 || static_cast<std::size_t>(u.leaf_node) >= nodes.size())
            throw std::invalid_argument("unit " + std::to_string(u.unit_id) + " links to a missing node");
        int le = node_element[static_cast<std::size_t>(u.leaf_node)];
        const auto& leaf = elements_[static_cast<std::size_t>(le)];
        if (u.start_sentence < leaf.start_sentence || u.end_sentence > leaf.end_sentence)
            throw std::invalid_argument("unit " + std::to_string(u.unit_id) + " is outside its leaf");
        int id = le;
        if (leaf.start_sentence != u.start_sentence || leaf.end_sentence != u.end_sentence)
            id = add_child(le, u.start_sentence, u.end_sentence, leaf.level + 1);
        auto& e = elements_[static_cast<std::size_t>(id)];
        if (!e.unit_id) e.unit_id = u.unit_id;
        if (u.unit_id < 0) throw std::invalid_argument("unit ids must be non-negative");
        if (static_cast<std::size_t>(u.unit_id) >= unit_element_.size())
            unit_element_.resize(static_cast<std::size_t>(u.unit_id) + 1, -1);
        unit_element_[static_cast<std::size_t>(u.unit_id)] = id;
    }
}

int MergeIndex::element_for_unit(int unit_id) const {
    if (unit_id < 0 || static_cast<std::size_t>(unit_id) >= unit_element_.size() ||
        unit_element_[static_cast<std::size_t>(unit_id)] < 0)
        throw std::out_of_range("unknown unit id " + std::to_string(unit_id));
    return unit_element_[static_cast<std::size_t>(unit_id)];
}

bool MergeIndex::covers(int ancestor, int descendant) const {
    const auto& a = element(ancestor);
    const auto& d = element(descendant);
    return a.start_sentence <= d.start_sentence && d.end_sentence <= a.end_sentence;
}

std::string MergeIndex::label(int id) const {
    const auto& e = element(id);
    if (e.tree_node) return "node:" + std::to_string(*e.tree_node);
    return "unit:" + std::to_string(e.unit_id.value_or(-1));
}

MergeConditions check_merge_conditions(const MergeIndex& index, const RetrievedSet& retrieved, int parent,
                                       std::size_t tk_cur, std::size_t budget) {
    const auto& p = index.element(parent);
    MergeConditions c;
    std::size_t count = 0;
    for (int member : retrieved) {
        if (index.element(member).parent == parent) {
            ++count;
            c.covered_len += index.element(member).token_len;
        }
    }
    c.theta = theta_star(static_cast<double>(tk_cur), static_cast<double>(p.token_len), static_cast<double>(budget));
    c.enough_children = count >= 2;
    c.enough_length = static_cast<double>(c.covered_len) >= c.theta;
    c.fits_budget = tk_cur <= budget && budget - tk_cur >= p.token_len;
    return c;
}

std::size_t retrieved_tokens(const MergeIndex& index, const RetrievedSet& retrieved) {
    std::size_t n = 0;
    for (int e : retrieved) n += index.element(e).token_len;
    return n;
}

const char* to_string(AuditEvent::Kind kind) {
    switch (kind) {
        case AuditEvent::Kind::add: return "add";
        case AuditEvent::Kind::covered: return "covered";
        case AuditEvent::Kind::merge: return "merge";
        case AuditEvent::Kind::reject: return "reject";
        case AuditEvent::Kind::budget_stop: return "budget_stop";
    }
    return "unknown";
}

namespace {

bool is_covered(const MergeIndex& index, const RetrievedSet& retrieved, int e) {
    return std::any_of(retrieved.begin(), retrieved.end(), [&](int m) { return index.covers(m, e); });
}

void merge_into(const MergeIndex& index, RetrievedSet& retrieved, int parent) {
    RetrievedSet next;
    bool placed = false;
    for (int m : retrieved) {
        if (index.covers(parent, m)) {
            if (!placed) next.push_back(parent);
            placed = true;
        } else {
            next.push_back(m);
        }
    }
    if (!placed) next.push_back(parent);
    retrieved = std::move(next);
}

}  // namespace

AssembledContext auto_merge(const RankedList& ranked, const MergeIndex& index, std::size_t budget,
                            const Tokenizer& tokenizer, const RetrievalObserver& observer) {
    if (budget < 1) throw std::invalid_argument("budget must be >= 1");
    RetrievedSet retrieved;
    std::vector<AuditEvent> audit;
    std::size_t tk_cur = 0;
    int rank = 0;
    for (const auto& entry : ranked.entries) {
        ++rank;
        int e = index.element_for_unit(entry.unit_id);
        if (is_covered(index, retrieved, e)) {
            audit.push_back({AuditEvent::Kind::covered, rank, e, tk_cur, {}});
            continue;
        }
        retrieved.push_back(e);
        tk_cur = retrieved_tokens(index, retrieved);
        audit.push_back({AuditEvent::Kind::add, rank, e, tk_cur, {}});
        if (observer) observer(retrieved);

        auto p = index.element(e).parent;
        while (p && index.element(*p).level >= 1) {
            auto cond = check_merge_conditions(index, retrieved, *p, tk_cur, budget);
            if (!cond.all()) {
                audit.push_back({AuditEvent::Kind::reject, rank, *p, tk_cur, cond});
                break;
            }
            if (tk_cur >= budget) break;
            merge_into(index, retrieved, *p);
            tk_cur = retrieved_tokens(index, retrieved);
            audit.push_back({AuditEvent::Kind::merge, rank, *p, tk_cur, cond});
            if (observer) observer(retrieved);
            p = index.element(*p).parent;
        }
        if (tk_cur >= budget) {
            audit.push_back({AuditEvent::Kind::budget_stop, rank, e, tk_cur, {}});
            break;
        }
    }
    auto ctx = build_context(index, retrieved, budget, tokenizer);
    ctx.audit = std::move(audit);
    return ctx;
}

AssembledContext flat_retrieve(const RankedList& ranked, const MergeIndex& index, std::size_t budget,
                               const Tokenizer& tokenizer) {
    if (budget < 1) throw std::invalid_argument("budget must be >= 1");
    RetrievedSet retrieved;
    std::vector<AuditEvent> audit;
    std::size_t tk_cur = 0;
    int rank = 0;
    for (const auto& entry : ranked.entries) {
        ++rank;
        int e = index.element_for_unit(entry.unit_id);
        if (is_covered(index, retrieved, e)) {
            audit.push_back({AuditEvent::Kind::covered, rank, e, tk_cur, {}});
            continue;
        }
        retrieved.push_back(e);
        tk_cur += index.element(e).token_len;
        audit.push_back({AuditEvent::Kind::add, rank, e, tk_cur, {}});
        if (tk_cur >= budget) {
            audit.push_back({AuditEvent::Kind::budget_stop, rank, e, tk_cur, {}});
            break;
        }
    }
    auto ctx = build_context(index, retrieved, budget, tokenizer);
    ctx.audit = std::move(audit);
    return ctx;
}

AssembledContext build_context(const MergeIndex& index, const RetrievedSet& retrieved, std::size_t budget,
                               const Tokenizer& tokenizer) {
    const auto& tree = index.tree();
    const auto& sents = tree.sentences();
    AssembledContext ctx;
    ctx.retrieved = retrieved;
    std::size_t remaining = budget;
    for (int e : retrieved) {
        const auto& el = index.element(e);
        if (el.token_len <= remaining) {
            ctx.parts.push_back({e, el.start_sentence, el.end_sentence, tree.text(el.start_sentence, el.end_sentence),
                                 el.token_len, false});
            remaining -= el.token_len;
            continue;
        }
        ctx.truncated = true;
        ContextPart part{e, el.start_sentence, el.start_sentence, {}, 0, true};
        auto append = [&](const std::string& s) {
            if (!part.text.empty()) part.text += ' ';
            part.text += s;
        };
        SentenceId s = el.start_sentence;
        for (; s < el.end_sentence; ++s) {
            std::size_t t = sents[static_cast<std::size_t>(s - 1)].token_len;
            if (part.token_len + t > remaining) break;
            append(sents[static_cast<std::size_t>(s - 1)].text);
            part.token_len += t;
        }
        if (s < el.end_sentence && part.token_len < remaining) {
            auto cut = tokenizer.truncate(sents[static_cast<std::size_t>(s - 1)].text, remaining - part.token_len);
            if (!cut.empty()) {
                append(cut);
                part.token_len += tokenizer.count(cut);
                ++s;
            }
        }
        part.end_sentence = s;
        if (!part.text.empty()) ctx.parts.push_back(std::move(part));
        break;
    }
    std::sort(ctx.parts.begin(), ctx.parts.end(),
              [](const auto& a, const auto& b) { return a.start_sentence < b.start_sentence; });
    for (const auto& p : ctx.parts) {
        if (!ctx.text.empty()) ctx.text += kContextDelimiter;
        ctx.text += p.text;
        ctx.token_len += p.token_len;
    }
    return ctx;
}

std::string audit_to_json(const MergeIndex& index, const AssembledContext& context, const std::string& doc_id,
                          const std::string& query, std::size_t budget, const std::string& strategy) {
    using nlohmann::json;
    json parts = json::array();
    for (const auto& p : context.parts)
        parts.push_back({{"node", index.label(p.element)},
                         {"start_sentence", p.start_sentence},
                         {"end_sentence", p.end_sentence},
                         {"token_len", p.token_len},
                         {"truncated", p.truncated}});
    json events = json::array();
    for (const auto& ev : context.audit) {
        json j{{"rank", ev.rank}, {"event", to_string(ev.kind)}, {"node", index.label(ev.element)}, {"tk_cur", ev.tk_cur}};
        if (ev.kind == AuditEvent::Kind::merge || ev.kind == AuditEvent::Kind::reject) {
            j["theta"] = ev.conditions.theta;
            j["children_len"] = ev.conditions.covered_len;
            j["cond1"] = ev.conditions.enough_children;
            j["cond2"] = ev.conditions.enough_length;
            j["cond3"] = ev.conditions.fits_budget;
        }
        events.push_back(std::move(j));
    }
    json doc{{"doc_id", doc_id},     {"query", query},
             {"budget", budget},     {"strategy", strategy},
             {"token_len", context.token_len}, {"truncated", context.truncated},
             {"parts", std::move(parts)}, {"events", std::move(events)}};
    return doc.dump(1) + "\n";
}

}  // namespace hichunk
