// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Attributed document trees with stable node ids, the structural edit
// vocabulary, path formulas, and merging of concurrent edit logs.
//
// Node ids: loading assigns `n0`, `n1`, ... in preorder to nodes that carry
// none. Nodes created by an edit from author `a` with sequence number `s`
// get ids prefixed `a.s:`, so every replica derives the same ids.
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "schemakit/codec.h"

namespace schemakit::doc {

struct Node {
    enum class Kind { Element, Text };

    Kind kind = Kind::Element;
    std::string nid;
    std::string tag;
    std::map<std::string, std::string> attrs;
    std::vector<Node> children;
    std::string text;  // Text nodes

    static Node element(std::string tag, std::map<std::string, std::string> attrs = {}, std::vector<Node> children = {});
    static Node text_node(std::string content);

    bool is_element() const { return kind == Kind::Element; }
    bool operator==(const Node&) const = default;
};

/// Concatenated text of all descendant text nodes.
std::string text_content(const Node& n);

const Node* find_node(const Node& root, std::string_view nid);

Node node_from_json(const Json& j);
Json to_json(const Node& n);

/// Stable digest of the canonical serialization (ids included).
std::string doc_hash(const Node& root);

// ── paths ───────────────────────────────────────────────────────────────

/// `tag`, optionally filtered by `[id='x']` and/or a zero-based `[n]` that
/// counts same-tag siblings only.
struct Step {
    std::string tag;
    std::optional<std::string> id;
    std::optional<std::size_t> index;
    bool operator==(const Step&) const = default;
};

/// `/a/b[0]`. The first step matches at any depth; later steps are children.
struct NodePath {
    std::vector<Step> steps;
    bool operator==(const NodePath&) const = default;
};

NodePath parse_node_path(std::string_view text);
std::string format_node_path(const NodePath& p);

/// Matching element ids in document order.
std::vector<std::string> match_path(const Node& root, const NodePath& p);

/// `#nid` or a path.
struct Selector {
    std::optional<std::string> nid;
    NodePath path;
    bool operator==(const Selector&) const = default;
};

Selector parse_selector(std::string_view text);
std::string format_selector(const Selector& s);
std::vector<std::string> select(const Node& root, const Selector& s);

// ── formulas ────────────────────────────────────────────────────────────

struct Formula {
    enum class Kind { Number, Ref, Count, Add, Mul };

    Kind kind = Kind::Number;
    double number = 0;
    NodePath path;              // Ref, Count
    std::vector<Formula> args;  // Add, Mul (two operands)

    bool operator==(const Formula&) const = default;
};

/// Accepts an optional leading `=`. Throws SyntaxError.
Formula parse_formula(std::string_view text);
std::string format_formula(const Formula& f);

/// COUNT is the number of matches; a reference reads the first match as a
/// number, evaluating it first if it hosts a formula. Throws NotNumeric,
/// SelectorMiss.
double evaluate_formula(const Node& root, const Formula& f);

/// A formula hosted by a text node whose content starts with `=`.
struct HostedFormula {
    std::string id;    // nid of the hosting text node
    std::string host;  // nid of its parent element
    Formula formula;
};

std::vector<HostedFormula> collect_formulas(const Node& root);

// ── edits ───────────────────────────────────────────────────────────────

struct DocEdit {
    enum class Kind { ChangeTag, Wrap, SplitText, InsertItem, Reorder, SetText, AddColumn };

    Kind kind = Kind::SetText;
    std::string author;
    int seq = 0;
    Selector target;  // InsertItem/Reorder: the parent; AddColumn: the table
    std::string tag;  // ChangeTag: new tag; Wrap: wrapper; SplitText: part tag
    std::map<std::string, std::string> child_map;  // ChangeTag
    std::map<std::string, std::string> attrs;      // Wrap
    std::string separator;                         // SplitText, a regex
    std::optional<Node> subtree;                   // InsertItem
    std::optional<std::size_t> position;           // InsertItem; append when absent
    std::optional<std::size_t> key_column;         // Reorder; text order when absent
    std::string text;                              // SetText content; AddColumn header
    std::string default_value;                     // AddColumn

    bool is_schema() const;
    bool operator==(const DocEdit&) const = default;
};

std::string_view to_string(DocEdit::Kind k);
DocEdit doc_edit_from_json(const Json& j);
Json to_json(const DocEdit& e);

/// Applies the edit to every matching node and co-evolves formula texts for
/// schema-class edits. Formulas that cannot follow are left as they were and
/// their text-node ids appended to `stale`. Throws SelectorMiss.
Node apply_edit(const Node& root, const DocEdit& edit, std::vector<std::string>* stale = nullptr);

/// Rewrites every path so it selects the same nodes after `edit` is applied
/// to `before`. Data-class edits leave formulas unchanged. Throws
/// Unrewritable.
Formula rewrite_formula(const Formula& f, const DocEdit& edit, const Node& before);

/// Ids of formulas whose inputs the edit touches, closed over formulas that
/// read other formulas' host nodes.
std::set<std::string> invalidate(const Node& root, const std::vector<HostedFormula>& formulas, const DocEdit& edit);

// ── merge ───────────────────────────────────────────────────────────────

struct EditLog {
    std::string author;
    std::optional<std::string> base;  // doc_hash of the shared base
    std::vector<DocEdit> edits;
};

/// Reads JSON lines; an optional `{"author": .., "base": ..}` header line
/// precedes the edits.
EditLog edit_log_from_json_lines(const std::vector<Json>& lines);

struct Conflict {
    std::string reason;              // "incompatible", "selector-miss"
    std::vector<DocEdit> edits;
    std::vector<std::string> nodes;
    std::optional<std::string> winner;  // author whose edit was kept
    bool operator==(const Conflict&) const = default;
};

/// A cell that got the column default because its row did not exist for the
/// author who added the column.
struct PendingQuestion {
    std::string table;
    std::string row;
    std::string cell;
    std::string column;
    std::string default_value;
    std::string asked_of;  // author of the column
    bool operator==(const PendingQuestion&) const = default;
};

struct MergeOptions {
    std::optional<std::string> priority_author;
};

struct MergeResult {
    Node doc;
    std::vector<Conflict> conflicts;
    std::vector<PendingQuestion> questions;
};

/// Deterministic in the set of logs: argument order does not matter.
MergeResult merge_logs(const Node& base, const std::vector<EditLog>& logs, const MergeOptions& options = {});

Json to_json(const Conflict& c);
Json to_json(const PendingQuestion& q);

} // namespace schemakit::doc
