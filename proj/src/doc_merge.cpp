// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Merge of concurrent edit logs. Logs are taken in author order, which is
// what makes the result independent of argument order.
//
//   1. every log is replayed alone on the base; data edits remember the
//      node ids their author saw, schema edits their target sets
//   2. schema edits of different logs that hit the same nodes are checked
//      for compatibility; duplicates collapse onto the first author
//   3. data edits that precede any schema edit in their log go first
//      (reorders after inserts), on the base structure
//   4. the rest of each log follows in author order; schema selectors are
//      rewritten through other logs' schema edits, data edits are
//      transported through them
#include <algorithm>
#include <functional>

#include "doc_detail.h"
#include "schemakit/error.h"

namespace schemakit::doc {

EditLog edit_log_from_json_lines(const std::vector<Json>& lines) {
    EditLog log;
    for (const auto& j : lines) {
        if (!j.contains("op")) {
            log.author = require_string(j, "author");
            if (j.contains("base")) log.base = j.at("base").get<std::string>();
            continue;
        }
        DocEdit e = doc_edit_from_json(j);
        if (e.author.empty()) e.author = log.author;
        if (log.author.empty()) log.author = e.author;
        log.edits.push_back(std::move(e));
    }
    return log;
}

Json to_json(const Conflict& c) {
    Json edits = Json::array();
    for (const auto& e : c.edits) edits.push_back(to_json(e));
    Json j{{"reason", c.reason}, {"edits", std::move(edits)}, {"nodes", c.nodes}};
    if (c.winner) j["winner"] = *c.winner;
    return j;
}

Json to_json(const PendingQuestion& q) {
    return Json{{"table", q.table},   {"row", q.row},
                {"cell", q.cell},     {"column", q.column},
                {"default", q.default_value}, {"asked_of", q.asked_of}};
}

namespace {

using Ids = std::set<std::string>;

std::string origin_author(const std::string& nid) {
    if (nid.find(':') == std::string::npos) return "";
    return nid.substr(0, nid.find('.'));
}

const Node* parent_of(const Node& root, const std::string& nid) {
    for (const auto& c : root.children) {
        if (c.nid == nid) return &root;
        if (const Node* p = parent_of(c, nid)) return p;
    }
    return nullptr;
}

Node* mut(Node& root, const std::string& nid) { return const_cast<Node*>(find_node(root, nid)); }

Ids element_targets(const Node& root, const Selector& s) {
    Ids out;
    for (const auto& nid : select(root, s))
        if (find_node(root, nid)->is_element()) out.insert(nid);
    return out;
}

/// A schema edit as applied to the merged document.
struct Applied {
    DocEdit edit;
    Node before, after;
    Ids targets;         // before
    Ids parents;         // of the targets, before
    Ids parents_after;   // of the targets, after
    Ids tags;            // of the targets, after
};

Applied record(const DocEdit& e, const Node& before, const Node& after) {
    Applied a{e, before, after, element_targets(before, e.target), {}, {}, {}};
    for (const auto& t : a.targets) {
        if (const Node* p = parent_of(before, t)) a.parents.insert(p->nid);
        if (const Node* p = parent_of(after, t)) a.parents_after.insert(p->nid);
        if (const Node* n = find_node(after, t)) a.tags.insert(n->tag);
    }
    return a;
}

/// One edit of one log with what its author saw.
struct Slot {
    DocEdit edit;
    std::size_t log = 0;
    bool skip = false;
    bool leading = false;  // data edit before any schema edit of its log
    Node view;             // the author's document just before the edit
    Ids targets;           // schema edits: targets in `view`
};

bool overlap(const Ids& a, const Ids& b, std::vector<std::string>& out) {
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return !out.empty();
}

enum class Pair { Compatible, Duplicate, Incompatible };

Pair compare(const Slot& a, const Slot& b) {
    const DocEdit& x = a.edit;
    const DocEdit& y = b.edit;
    if (x.kind != y.kind) return Pair::Compatible;
    bool same_targets = a.targets == b.targets;
    switch (x.kind) {
    case DocEdit::Kind::ChangeTag: {
        if (x.tag != y.tag) return Pair::Incompatible;
        for (const auto& [k, v] : x.child_map) {
            auto it = y.child_map.find(k);
            if (it != y.child_map.end() && it->second != v) return Pair::Incompatible;
        }
        return same_targets && x.child_map == y.child_map ? Pair::Duplicate : Pair::Compatible;
    }
    case DocEdit::Kind::Wrap:
        return same_targets && x.tag == y.tag && x.attrs == y.attrs ? Pair::Duplicate : Pair::Incompatible;
    case DocEdit::Kind::SplitText:
        return same_targets && x.tag == y.tag && x.separator == y.separator ? Pair::Duplicate : Pair::Incompatible;
    case DocEdit::Kind::AddColumn:
        if (x.text != y.text) return Pair::Compatible;
        return same_targets && x.default_value == y.default_value ? Pair::Duplicate : Pair::Incompatible;
    default: return Pair::Compatible;
    }
}

class Merger {
public:
    Merger(const Node& base, std::vector<EditLog> logs, const MergeOptions& options)
        : doc_(base), logs_(std::move(logs)), options_(options) {
        logs_.erase(std::remove_if(logs_.begin(), logs_.end(), [](const EditLog& l) { return l.edits.empty(); }),
                    logs_.end());
        std::sort(logs_.begin(), logs_.end(), [](const EditLog& a, const EditLog& b) { return a.author < b.author; });
        validate(base);
        replay_alone(base);
        check_pairs();
    }

    MergeResult run() {
        std::vector<Slot*> reorders;
        for (auto& s : slots_) {
            if (!s.leading || s.skip) continue;
            if (s.edit.kind == DocEdit::Kind::Reorder) reorders.push_back(&s);
            else apply_data(s);
        }
        for (Slot* s : reorders) apply_data(*s);
        for (auto& s : slots_) {
            if (s.leading || s.skip) continue;
            if (s.edit.is_schema()) apply_schema(s);
            else apply_data(s);
        }
        auto by_json = [](const auto& a, const auto& b) { return to_json(a).dump() < to_json(b).dump(); };
        std::sort(conflicts_.begin(), conflicts_.end(), by_json);
        std::sort(questions_.begin(), questions_.end(), by_json);
        return {std::move(doc_), std::move(conflicts_), std::move(questions_)};
    }

private:
    void validate(const Node& base) {
        std::string hash = doc_hash(base);
        for (std::size_t i = 0; i < logs_.size(); ++i) {
            const EditLog& log = logs_[i];
            if (log.author.empty() || log.author.find_first_of(".:/") != std::string::npos)
                throw Error(ErrorCode::InvalidFormat, "bad author name '" + log.author + "'");
            if (i > 0 && logs_[i - 1].author == log.author)
                throw Error(ErrorCode::InvalidFormat, "two logs from author '" + log.author + "'");
            if (log.base && *log.base != hash)
                throw Error(ErrorCode::InvalidFormat, "log of '" + log.author + "' was recorded against another base",
                            Json{{"author", log.author}, {"base", *log.base}, {"expected", hash}});
            for (std::size_t k = 0; k < log.edits.size(); ++k) {
                if (log.edits[k].author != log.author)
                    throw Error(ErrorCode::InvalidFormat, "edit by '" + log.edits[k].author + "' in the log of '" +
                                                               log.author + "'");
                if (k > 0 && log.edits[k].seq <= log.edits[k - 1].seq)
                    throw Error(ErrorCode::InvalidFormat, "sequence numbers of '" + log.author + "' must increase",
                                Json{{"author", log.author}, {"seq", log.edits[k].seq}});
            }
        }
    }

    void replay_alone(const Node& base) {
        for (std::size_t i = 0; i < logs_.size(); ++i) {
            Node view = base;
            bool leading = true;
            for (const auto& e : logs_[i].edits) {
                if (e.is_schema()) leading = false;
                Slot s{e, i, false, leading && !e.is_schema(), view, {}};
                if (e.is_schema()) s.targets = element_targets(view, e.target);
                try {
                    view = apply_edit(view, e);
                } catch (const Error& err) {
                    if (err.code() != ErrorCode::SelectorMiss) throw;
                    miss(e);
                    s.skip = true;
                }
                slots_.push_back(std::move(s));
            }
        }
    }

    void check_pairs() {
        for (std::size_t a = 0; a < slots_.size(); ++a) {
            for (std::size_t b = a + 1; b < slots_.size(); ++b) {
                Slot& x = slots_[a];
                Slot& y = slots_[b];
                if (x.log == y.log || !x.edit.is_schema() || !y.edit.is_schema() || x.skip || y.skip) continue;
                std::vector<std::string> nodes;
                if (!overlap(x.targets, y.targets, nodes)) continue;
                Pair p = compare(x, y);
                if (p == Pair::Compatible) continue;
                if (p == Pair::Duplicate) {
                    y.skip = true;
                    alias_[edit_prefix(y.edit)] = edit_prefix(x.edit);
                    continue;
                }
                Conflict c{"incompatible", {x.edit, y.edit}, nodes, std::nullopt};
                const auto& prio = options_.priority_author;
                if (prio && *prio == x.edit.author) {
                    y.skip = true;
                    c.winner = *prio;
                } else if (prio && *prio == y.edit.author) {
                    x.skip = true;
                    c.winner = *prio;
                } else {
                    x.skip = y.skip = true;
                }
                conflicts_.push_back(std::move(c));
            }
        }
    }

    void miss(const DocEdit& e, std::vector<std::string> nodes = {}) {
        conflicts_.push_back({"selector-miss", {e}, std::move(nodes), std::nullopt});
    }

    std::string aliased(const std::string& nid) const {
        for (const auto& [from, to] : alias_)
            if (nid.rfind(from, 0) == 0) return to + nid.substr(from.size());
        return nid;
    }

    /// Schema edits of other logs applied so far.
    std::vector<const Applied*> unseen(const DocEdit& e) const {
        std::vector<const Applied*> out;
        for (const auto& a : applied_)
            if (a.edit.author != e.author) out.push_back(&a);
        return out;
    }

    void apply_schema(const Slot& s) {
        DocEdit e = s.edit;
        if (e.target.nid) {
            e.target.nid = aliased(*e.target.nid);
        } else {
            for (const Applied* a : unseen(e)) {
                try {
                    e.target.path = rewrite_node_path(e.target.path, a->edit, a->before, a->after);
                } catch (const Error& err) {
                    if (err.code() != ErrorCode::Unrewritable) throw;
                }
            }
        }
        std::vector<std::string> stale;
        Node next;
        try {
            next = apply_edit(doc_, e, &stale);
        } catch (const Error& err) {
            if (err.code() != ErrorCode::SelectorMiss) throw;
            miss(s.edit);
            return;
        }
        if (!stale.empty()) conflicts_.push_back({"stale-formula", {s.edit}, stale, std::nullopt});
        applied_.push_back(record(e, doc_, next));
        doc_ = std::move(next);
        if (e.kind == DocEdit::Kind::AddColumn) ask_for_new_cells(e);
    }

    void ask_for_new_cells(const DocEdit& e) {
        const std::string pre = edit_prefix(e);
        std::function<void(const Node&, const Node*)> walk = [&](const Node& n, const Node* table) {
            if (n.is_element() && n.nid.rfind(pre, 0) == 0) {
                std::string row = n.nid.substr(pre.size());
                std::string who = origin_author(row);
                if (!who.empty() && who != e.author && n.tag == "td")
                    questions_.push_back({table ? table->nid : "", row, n.nid, e.text, e.default_value, e.author});
            }
            const Node* t = n.is_element() && n.tag == "table" ? &n : table;
            for (const auto& c : n.children) walk(c, t);
        };
        walk(doc_, nullptr);
    }

    /// Nodes the author addressed, by id in their own view.
    std::vector<std::string> addressed(const Slot& s) const {
        std::vector<std::string> out;
        for (const auto& nid : select(s.view, s.edit.target)) out.push_back(aliased(nid));
        return out;
    }

    void apply_data(const Slot& s) {
        auto targets = addressed(s);
        if (targets.empty()) {
            miss(s.edit);
            return;
        }
        auto others = unseen(s.edit);
        for (const auto& t : targets) {
            switch (s.edit.kind) {
            case DocEdit::Kind::InsertItem: insert(s, t, targets.size(), others); break;
            case DocEdit::Kind::Reorder: reorder(s, t, others); break;
            default: set_text(s, t, others); break;
            }
        }
    }

    void insert(const Slot& s, const std::string& parent_seen, std::size_t count,
                const std::vector<const Applied*>& others) {
        const DocEdit& e = s.edit;
        Node item = instantiate_item(e, parent_seen, count);
        std::optional<std::string> anchor;
        if (e.position) {
            const Node* p = find_node(s.view, parent_seen);
            if (*e.position < p->children.size()) anchor = aliased(p->children[*e.position].nid);
        }
        std::string pid = aliased(parent_seen);
        std::vector<const Applied*> columns;
        for (const Applied* a : others) {
            switch (a->edit.kind) {
            case DocEdit::Kind::ChangeTag:
                if (a->targets.count(pid) && item.is_element()) {
                    auto it = a->edit.child_map.find(item.tag);
                    if (it != a->edit.child_map.end()) item.tag = it->second;
                }
                break;
            case DocEdit::Kind::Wrap:
                if (a->parents.count(pid) && a->tags.count(item.tag) && find_node(doc_, edit_prefix(a->edit) + pid))
                    pid = edit_prefix(a->edit) + pid;
                break;
            case DocEdit::Kind::SplitText:
                if (a->parents_after.count(pid) && a->tags.count(item.tag)) item = split_node(item, a->edit);
                break;
            case DocEdit::Kind::AddColumn: columns.push_back(a); break;
            default: break;
            }
        }
        Node* parent = mut(doc_, pid);
        if (!parent) {
            miss(e, {pid});
            return;
        }
        for (const Applied* a : columns) {
            const Node* section = parent_of(doc_, pid);
            bool in_table = a->targets.count(pid) || (section && a->targets.count(section->nid) &&
                                                      (parent->tag == "thead" || parent->tag == "tbody" ||
                                                       parent->tag == "tfoot"));
            if (!item.is_element() || item.tag != "tr" || !in_table) continue;
            bool head = parent->tag == "thead";
            Node cell = Node::element(head ? "th" : "td");
            cell.nid = edit_prefix(a->edit) + item.nid;
            Node text = Node::text_node(head ? a->edit.text : a->edit.default_value);
            text.nid = cell.nid + ".t";
            cell.children.push_back(std::move(text));
            item.children.push_back(std::move(cell));
            if (!head) {
                std::string table = a->targets.count(pid) ? pid : section->nid;
                questions_.push_back({table, item.nid, edit_prefix(a->edit) + item.nid, a->edit.text,
                                      a->edit.default_value, a->edit.author});
            }
        }
        auto at = parent->children.end();
        if (anchor)
            at = std::find_if(parent->children.begin(), parent->children.end(),
                              [&](const Node& c) { return c.nid == *anchor; });
        parent->children.insert(at, std::move(item));
    }

    void reorder(const Slot& s, std::string pid, const std::vector<const Applied*>& others) {
        DocEdit e = s.edit;
        for (const Applied* a : others) {
            const Node* p = find_node(doc_, pid);
            if (!p) break;
            bool holds_targets = std::any_of(p->children.begin(), p->children.end(),
                                             [&](const Node& c) { return a->targets.count(c.nid) > 0; });
            if (a->edit.kind == DocEdit::Kind::Wrap && a->parents.count(pid) && find_node(doc_, edit_prefix(a->edit) + pid))
                pid = edit_prefix(a->edit) + pid;
            else if (a->edit.kind == DocEdit::Kind::SplitText && holds_targets && !e.key_column)
                e.key_column = 0;
        }
        e.target = Selector{pid, {}};
        try {
            doc_ = apply_structure(doc_, e);
        } catch (const Error& err) {
            if (err.code() != ErrorCode::SelectorMiss) throw;
            miss(s.edit, {pid});
        }
    }

    void set_text(const Slot& s, const std::string& nid, const std::vector<const Applied*>& others) {
        const Node* n = find_node(doc_, nid);
        const Node* p = parent_of(doc_, nid);
        const Applied* split = nullptr;
        for (const Applied* a : others)
            if (n && a->edit.kind == DocEdit::Kind::SplitText &&
                (a->targets.count(nid) || (p && a->parents_after.count(p->nid) && a->tags.count(n->tag))))
                split = a;
        if (!split) {
            DocEdit e = s.edit;
            e.target = Selector{nid, {}};
            try {
                doc_ = apply_structure(doc_, e);
            } catch (const Error& err) {
                if (err.code() != ErrorCode::SelectorMiss) throw;
                miss(s.edit, {nid});
            }
            return;
        }
        // re-split the new text, leaving cells other edits added alone
        Node fresh = Node::element(n->tag);
        fresh.nid = nid;
        fresh.children.push_back(Node::text_node(s.edit.text));
        Node parts = split_node(fresh, split->edit);
        const std::string part_prefix = edit_prefix(split->edit) + nid + ".";
        Node* target = mut(doc_, nid);
        std::vector<Node> kids;
        bool placed = false;
        for (auto& c : target->children) {
            if (c.nid.rfind(part_prefix, 0) != 0) {
                kids.push_back(std::move(c));
            } else if (!placed) {
                kids.insert(kids.end(), parts.children.begin(), parts.children.end());
                placed = true;
            }
        }
        if (!placed) kids.insert(kids.begin(), parts.children.begin(), parts.children.end());
        target->children = std::move(kids);
    }

    Node doc_;
    std::vector<EditLog> logs_;
    MergeOptions options_;
    std::vector<Slot> slots_;
    std::vector<Applied> applied_;
    std::map<std::string, std::string> alias_;
    std::vector<Conflict> conflicts_;
    std::vector<PendingQuestion> questions_;
};

} // namespace

MergeResult merge_logs(const Node& base, const std::vector<EditLog>& logs, const MergeOptions& options) {
    return Merger(base, logs, options).run();
}

} // namespace schemakit::doc
