// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
#include "schemakit/doc.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <functional>
#include <regex>

#include "schemakit/error.h"
#include "doc_detail.h"

namespace schemakit::doc {

Node Node::element(std::string tag, std::map<std::string, std::string> attrs, std::vector<Node> children) {
    Node n;
    n.kind = Kind::Element;
    n.tag = std::move(tag);
    n.attrs = std::move(attrs);
    n.children = std::move(children);
    return n;
}

Node Node::text_node(std::string content) {
    Node n;
    n.kind = Kind::Text;
    n.text = std::move(content);
    return n;
}

std::string text_content(const Node& n) {
    if (!n.is_element()) return n.text;
    std::string out;
    for (const auto& c : n.children) out += text_content(c);
    return out;
}

const Node* find_node(const Node& root, std::string_view nid) {
    if (root.nid == nid) return &root;
    for (const auto& c : root.children)
        if (const Node* hit = find_node(c, nid)) return hit;
    return nullptr;
}

namespace {

Node* find_mut(Node& root, std::string_view nid) { return const_cast<Node*>(find_node(root, nid)); }

Node* parent_mut(Node& root, std::string_view nid) {
    for (auto& c : root.children) {
        if (c.nid == nid) return &root;
        if (Node* p = parent_mut(c, nid)) return p;
    }
    return nullptr;
}

template <typename F>
void preorder(const Node& n, const F& f) {
    f(n);
    for (const auto& c : n.children) preorder(c, f);
}

Node parse_node(const Json& j) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidFormat, "document node must be an object");
    Node n;
    if (j.contains("text")) {
        n = Node::text_node(j.at("text").get<std::string>());
    } else {
        n = Node::element(require_string(j, "tag"));
        if (j.contains("attrs"))
            for (const auto& [k, v] : j.at("attrs").items()) n.attrs[k] = v.get<std::string>();
        if (j.contains("children"))
            for (const auto& c : j.at("children")) n.children.push_back(parse_node(c));
    }
    if (j.contains("nid")) n.nid = j.at("nid").get<std::string>();
    return n;
}

void number_nodes(Node& n, std::size_t& counter, std::set<std::string>& used) {
    std::string fresh = "n" + std::to_string(counter++);
    if (n.nid.empty()) {
        while (used.count(fresh)) fresh += "'";
        n.nid = fresh;
    }
    if (!used.insert(n.nid).second) throw Error(ErrorCode::InvalidFormat, "duplicate node id '" + n.nid + "'");
    for (auto& c : n.children) number_nodes(c, counter, used);
}

} // namespace

Node node_from_json(const Json& j) {
    Node n = parse_node(j);
    std::set<std::string> used;
    preorder(n, [&](const Node& x) {
        if (!x.nid.empty()) used.insert(x.nid);
    });
    std::set<std::string> seen;
    std::size_t counter = 0;
    number_nodes(n, counter, seen);
    return n;
}

Json to_json(const Node& n) {
    Json j;
    j["nid"] = n.nid;
    if (!n.is_element()) {
        j["text"] = n.text;
        return j;
    }
    j["tag"] = n.tag;
    if (!n.attrs.empty()) j["attrs"] = n.attrs;
    if (!n.children.empty()) {
        Json kids = Json::array();
        for (const auto& c : n.children) kids.push_back(to_json(c));
        j["children"] = std::move(kids);
    }
    return j;
}

std::string doc_hash(const Node& root) {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char c : to_json(root).dump()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ── paths ───────────────────────────────────────────────────────────────

namespace {

[[noreturn]] void path_error(std::string_view text, std::size_t at, const std::string& msg) {
    throw Error(ErrorCode::SyntaxError, "bad path '" + std::string(text) + "': " + msg,
                Json{{"text", std::string(text)}, {"column", at + 1}});
}

bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

} // namespace

NodePath parse_node_path(std::string_view text) {
    NodePath p;
    std::size_t i = 0;
    if (text.empty() || text[0] != '/') path_error(text, 0, "must start with '/'");
    while (i < text.size()) {
        if (text[i] != '/') path_error(text, i, "expected '/'");
        ++i;
        Step s;
        std::size_t start = i;
        while (i < text.size() && ident_char(text[i])) ++i;
        if (i == start) path_error(text, i, "expected a tag name");
        s.tag = std::string(text.substr(start, i - start));
        while (i < text.size() && text[i] == '[') {
            ++i;
            if (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
                std::size_t n = 0;
                auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + text.size(), n);
                if (ec != std::errc()) path_error(text, i, "bad index");
                i = static_cast<std::size_t>(ptr - text.data());
                s.index = n;
            } else if (text.substr(i, 3) == "id=" && i + 3 < text.size() && (text[i + 3] == '\'' || text[i + 3] == '"')) {
                char q = text[i + 3];
                std::size_t close = text.find(q, i + 4);
                if (close == std::string_view::npos) path_error(text, i, "unterminated id");
                s.id = std::string(text.substr(i + 4, close - i - 4));
                i = close + 1;
            } else {
                path_error(text, i, "expected an index or id='...'");
            }
            if (i >= text.size() || text[i] != ']') path_error(text, i, "expected ']'");
            ++i;
        }
        p.steps.push_back(std::move(s));
    }
    return p;
}

std::string format_node_path(const NodePath& p) {
    std::string out;
    for (const auto& s : p.steps) {
        out += "/" + s.tag;
        if (s.id) out += "[id='" + *s.id + "']";
        if (s.index) out += "[" + std::to_string(*s.index) + "]";
    }
    return out;
}

namespace {

/// Element entries in preorder with parent links and same-tag positions.
struct Index {
    struct Entry {
        const Node* node;
        int parent;
        std::size_t same_tag;
        std::vector<int> kids;  // element children
    };
    std::vector<Entry> entries;
    std::map<std::string, int, std::less<>> by_nid;

    explicit Index(const Node& root) { add(root, -1, 0); }

    void add(const Node& n, int parent, std::size_t same_tag) {
        int me = static_cast<int>(entries.size());
        entries.push_back({&n, parent, same_tag, {}});
        by_nid[n.nid] = me;
        std::map<std::string, std::size_t> counts;
        for (const auto& c : n.children) {
            if (!c.is_element()) continue;
            int child = static_cast<int>(entries.size());
            entries[static_cast<std::size_t>(me)].kids.push_back(child);
            add(c, me, counts[c.tag]++);
        }
    }

    bool matches(int e, const Step& s) const {
        const Entry& en = entries[static_cast<std::size_t>(e)];
        if (en.node->tag != s.tag) return false;
        if (s.id) {
            auto it = en.node->attrs.find("id");
            if (it == en.node->attrs.end() || it->second != *s.id) return false;
        }
        return !s.index || en.same_tag == *s.index;
    }

    /// Matches after each step, each in document order.
    std::vector<std::vector<int>> prefixes(const NodePath& p) const {
        std::vector<std::vector<int>> out;
        std::vector<int> cur;
        for (std::size_t k = 0; k < p.steps.size(); ++k) {
            std::vector<int> next;
            if (k == 0) {
                for (int e = 0; e < static_cast<int>(entries.size()); ++e)
                    if (matches(e, p.steps[0])) next.push_back(e);
            } else {
                for (int e : cur)
                    for (int c : entries[static_cast<std::size_t>(e)].kids)
                        if (matches(c, p.steps[k])) next.push_back(c);
                std::sort(next.begin(), next.end());
                next.erase(std::unique(next.begin(), next.end()), next.end());
            }
            out.push_back(next);
            cur = std::move(next);
        }
        return out;
    }

    std::string nid(int e) const { return entries[static_cast<std::size_t>(e)].node->nid; }
};

std::vector<std::string> nids_of(const Index& ix, const std::vector<int>& es) {
    std::vector<std::string> out;
    for (int e : es) out.push_back(ix.nid(e));
    return out;
}

} // namespace

std::vector<std::string> match_path(const Node& root, const NodePath& p) {
    if (p.steps.empty()) return {};
    Index ix(root);
    return nids_of(ix, ix.prefixes(p).back());
}

Selector parse_selector(std::string_view text) {
    Selector s;
    if (!text.empty() && text[0] == '#') {
        if (text.size() == 1) throw Error(ErrorCode::SyntaxError, "empty node id in selector");
        s.nid = std::string(text.substr(1));
    } else {
        s.path = parse_node_path(text);
    }
    return s;
}

std::string format_selector(const Selector& s) { return s.nid ? "#" + *s.nid : format_node_path(s.path); }

std::vector<std::string> select(const Node& root, const Selector& s) {
    if (s.nid) return find_node(root, *s.nid) ? std::vector<std::string>{*s.nid} : std::vector<std::string>{};
    return match_path(root, s.path);
}

// ── formulas ────────────────────────────────────────────────────────────

namespace {

class FormulaParser {
public:
    explicit FormulaParser(std::string_view s) : s_(s) {}

    Formula parse() {
        skip();
        if (i_ < s_.size() && s_[i_] == '=') ++i_;
        Formula f = expr();
        skip();
        if (i_ != s_.size()) fail("unexpected '" + std::string(1, s_[i_]) + "'");
        return f;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw Error(ErrorCode::SyntaxError, "formula '" + std::string(s_) + "': " + msg,
                    Json{{"text", std::string(s_)}, {"column", i_ + 1}});
    }

    void skip() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    }

    bool eat(char c) {
        skip();
        if (i_ < s_.size() && s_[i_] == c) {
            ++i_;
            return true;
        }
        return false;
    }

    Formula binary(Formula::Kind k, Formula a, Formula b) {
        Formula f;
        f.kind = k;
        f.args = {std::move(a), std::move(b)};
        return f;
    }

    Formula expr() {
        Formula f = term();
        while (eat('+')) f = binary(Formula::Kind::Add, std::move(f), term());
        return f;
    }

    Formula term() {
        Formula f = factor();
        while (eat('*')) f = binary(Formula::Kind::Mul, std::move(f), factor());
        return f;
    }

    NodePath path() {
        std::size_t start = i_;
        bool in_bracket = false;
        char quote = 0;
        while (i_ < s_.size()) {
            char c = s_[i_];
            if (quote) {
                if (c == quote) quote = 0;
            } else if (in_bracket) {
                if (c == '\'' || c == '"') quote = c;
                if (c == ']') in_bracket = false;
            } else if (c == '[') {
                in_bracket = true;
            } else if (std::isspace(static_cast<unsigned char>(c)) || c == '*' || c == '+' || c == ')' || c == '(') {
                break;
            }
            ++i_;
        }
        return parse_node_path(s_.substr(start, i_ - start));
    }

    Formula factor() {
        skip();
        if (i_ >= s_.size()) fail("unexpected end of formula");
        Formula f;
        char c = s_[i_];
        if (c == '(') {
            ++i_;
            f = expr();
            if (!eat(')')) fail("expected ')'");
            return f;
        }
        if (c == '/') {
            f.kind = Formula::Kind::Ref;
            f.path = path();
            return f;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = s_.data() + i_;
            auto [ptr, ec] = std::from_chars(begin, s_.data() + s_.size(), f.number);
            if (ec != std::errc()) fail("bad number");
            i_ += static_cast<std::size_t>(ptr - begin);
            f.kind = Formula::Kind::Number;
            return f;
        }
        std::size_t start = i_;
        while (i_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[i_]))) ++i_;
        std::string word(s_.substr(start, i_ - start));
        for (auto& ch : word) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        if (word != "COUNT") fail(word.empty() ? "expected a value" : "unknown function '" + word + "'");
        if (!eat('(')) fail("expected '(' after COUNT");
        skip();
        f.kind = Formula::Kind::Count;
        f.path = path();
        if (!eat(')')) fail("expected ')'");
        return f;
    }

    std::string_view s_;
    std::size_t i_ = 0;
};

std::string format_number(double d) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, d);
    return std::string(buf, ptr);
}

// Both operators parse left-associatively, so a right operand of the same
// operator needs parentheses too.
std::string format_operand(const Formula& f, bool in_product, bool right) {
    std::string s = format_formula(f);
    bool wrap = (in_product && f.kind == Formula::Kind::Add) ||
                (right && f.kind == (in_product ? Formula::Kind::Mul : Formula::Kind::Add));
    return wrap ? "(" + s + ")" : s;
}

} // namespace

Formula parse_formula(std::string_view text) { return FormulaParser(text).parse(); }

std::string format_formula(const Formula& f) {
    switch (f.kind) {
    case Formula::Kind::Number: return format_number(f.number);
    case Formula::Kind::Ref: return format_node_path(f.path);
    case Formula::Kind::Count: return "COUNT(" + format_node_path(f.path) + ")";
    case Formula::Kind::Add: return format_formula(f.args[0]) + " + " + format_operand(f.args[1], false, true);
    case Formula::Kind::Mul: return format_operand(f.args[0], true, false) + " * " + format_operand(f.args[1], true, true);
    }
    return "";
}

namespace {

bool is_formula_text(std::string_view s) {
    std::size_t k = 0;
    while (k < s.size() && std::isspace(static_cast<unsigned char>(s[k]))) ++k;
    return k < s.size() && s[k] == '=';
}

double numeric(const std::string& raw, const std::string& where) {
    std::size_t a = 0;
    while (a < raw.size() && !std::isdigit(static_cast<unsigned char>(raw[a])) && raw[a] != '-' && raw[a] != '.') ++a;
    std::size_t b = raw.size();
    while (b > a && std::isspace(static_cast<unsigned char>(raw[b - 1]))) --b;
    double d = 0;
    auto [ptr, ec] = std::from_chars(raw.data() + a, raw.data() + b, d);
    if (a == b || ec != std::errc() || ptr != raw.data() + b)
        throw Error(ErrorCode::NotNumeric, "'" + raw + "' at " + where + " is not a number",
                    Json{{"node", where}, {"text", raw}});
    return d;
}

double eval(const Node& root, const Formula& f, std::vector<std::string>& stack) {
    switch (f.kind) {
    case Formula::Kind::Number: return f.number;
    case Formula::Kind::Count: return static_cast<double>(match_path(root, f.path).size());
    case Formula::Kind::Add: return eval(root, f.args[0], stack) + eval(root, f.args[1], stack);
    case Formula::Kind::Mul: return eval(root, f.args[0], stack) * eval(root, f.args[1], stack);
    case Formula::Kind::Ref: {
        auto hits = match_path(root, f.path);
        if (hits.empty())
            throw Error(ErrorCode::SelectorMiss, format_node_path(f.path) + " matches nothing",
                        Json{{"path", format_node_path(f.path)}});
        const std::string& nid = hits.front();
        std::string content = text_content(*find_node(root, nid));
        if (!is_formula_text(content)) return numeric(content, nid);
        if (std::find(stack.begin(), stack.end(), nid) != stack.end())
            throw Error(ErrorCode::NotNumeric, "formula cycle through " + nid, Json{{"node", nid}});
        stack.push_back(nid);
        double v = eval(root, parse_formula(content), stack);
        stack.pop_back();
        return v;
    }
    }
    return 0;
}

} // namespace

double evaluate_formula(const Node& root, const Formula& f) {
    std::vector<std::string> stack;
    return eval(root, f, stack);
}

std::vector<HostedFormula> collect_formulas(const Node& root) {
    std::vector<HostedFormula> out;
    std::function<void(const Node&, const Node*)> walk = [&](const Node& n, const Node* parent) {
        if (!n.is_element()) {
            if (parent && is_formula_text(n.text)) {
                try {
                    out.push_back({n.nid, parent->nid, parse_formula(n.text)});
                } catch (const Error&) {
                    // not a formula after all; leave as text
                }
            }
            return;
        }
        for (const auto& c : n.children) walk(c, &n);
    };
    walk(root, nullptr);
    return out;
}

// ── edits ───────────────────────────────────────────────────────────────

bool DocEdit::is_schema() const {
    return kind == Kind::ChangeTag || kind == Kind::Wrap || kind == Kind::SplitText || kind == Kind::AddColumn;
}

std::string_view to_string(DocEdit::Kind k) {
    switch (k) {
    case DocEdit::Kind::ChangeTag: return "change_tag";
    case DocEdit::Kind::Wrap: return "wrap";
    case DocEdit::Kind::SplitText: return "split_text";
    case DocEdit::Kind::InsertItem: return "insert_item";
    case DocEdit::Kind::Reorder: return "reorder";
    case DocEdit::Kind::SetText: return "set_text";
    case DocEdit::Kind::AddColumn: return "add_column";
    }
    return "?";
}

DocEdit doc_edit_from_json(const Json& j) {
    DocEdit e;
    std::string op = require_string(j, "op");
    bool known = false;
    for (auto k : {DocEdit::Kind::ChangeTag, DocEdit::Kind::Wrap, DocEdit::Kind::SplitText, DocEdit::Kind::InsertItem,
                   DocEdit::Kind::Reorder, DocEdit::Kind::SetText, DocEdit::Kind::AddColumn})
        if (to_string(k) == op) {
            e.kind = k;
            known = true;
        }
    if (!known) throw Error(ErrorCode::InvalidFormat, "unknown document edit '" + op + "'");
    e.author = j.value("author", "");
    e.seq = j.value("seq", 0);
    e.target = parse_selector(require_string(j, "selector"));
    switch (e.kind) {
    case DocEdit::Kind::ChangeTag:
        e.tag = require_string(j, "tag");
        if (j.contains("child_map"))
            for (const auto& [k, v] : j.at("child_map").items()) e.child_map[k] = v.get<std::string>();
        break;
    case DocEdit::Kind::Wrap:
        e.tag = require_string(j, "tag");
        if (j.contains("attrs"))
            for (const auto& [k, v] : j.at("attrs").items()) e.attrs[k] = v.get<std::string>();
        break;
    case DocEdit::Kind::SplitText:
        e.separator = require_string(j, "separator");
        e.tag = require_string(j, "tag");
        break;
    case DocEdit::Kind::InsertItem:
        e.subtree = parse_node(require(j, "subtree"));
        if (j.contains("position")) e.position = j.at("position").get<std::size_t>();
        break;
    case DocEdit::Kind::Reorder:
        if (j.contains("key_column")) e.key_column = j.at("key_column").get<std::size_t>();
        break;
    case DocEdit::Kind::SetText: e.text = require_string(j, "text"); break;
    case DocEdit::Kind::AddColumn:
        e.text = require_string(j, "header");
        e.default_value = j.value("default", "");
        break;
    }
    return e;
}

namespace {

Json subtree_json(const Node& n) {
    Json j;
    if (!n.is_element()) return Json{{"text", n.text}};
    j["tag"] = n.tag;
    if (!n.attrs.empty()) j["attrs"] = n.attrs;
    if (!n.children.empty()) {
        Json kids = Json::array();
        for (const auto& c : n.children) kids.push_back(subtree_json(c));
        j["children"] = std::move(kids);
    }
    return j;
}

} // namespace

Json to_json(const DocEdit& e) {
    Json j{{"author", e.author}, {"seq", e.seq}, {"op", std::string(to_string(e.kind))},
           {"selector", format_selector(e.target)}};
    switch (e.kind) {
    case DocEdit::Kind::ChangeTag:
        j["tag"] = e.tag;
        if (!e.child_map.empty()) j["child_map"] = e.child_map;
        break;
    case DocEdit::Kind::Wrap:
        j["tag"] = e.tag;
        if (!e.attrs.empty()) j["attrs"] = e.attrs;
        break;
    case DocEdit::Kind::SplitText:
        j["separator"] = e.separator;
        j["tag"] = e.tag;
        break;
    case DocEdit::Kind::InsertItem:
        j["subtree"] = e.subtree ? subtree_json(*e.subtree) : Json();
        if (e.position) j["position"] = *e.position;
        break;
    case DocEdit::Kind::Reorder:
        if (e.key_column) j["key_column"] = *e.key_column;
        break;
    case DocEdit::Kind::SetText: j["text"] = e.text; break;
    case DocEdit::Kind::AddColumn:
        j["header"] = e.text;
        j["default"] = e.default_value;
        break;
    }
    return j;
}

namespace {

std::string prefix(const DocEdit& e) { return e.author + "." + std::to_string(e.seq) + ":"; }

std::vector<std::string> element_targets(const Node& root, const DocEdit& e) {
    std::vector<std::string> out;
    for (const auto& nid : select(root, e.target))
        if (find_node(root, nid)->is_element()) out.push_back(nid);
    return out;
}

[[noreturn]] void miss(const DocEdit& e) {
    throw Error(ErrorCode::SelectorMiss,
                std::string(to_string(e.kind)) + " selector " + format_selector(e.target) + " matches nothing",
                Json{{"selector", format_selector(e.target)}, {"author", e.author}, {"seq", e.seq}});
}

void assign_ids(Node& n, const std::string& base, std::size_t& k) {
    n.nid = base + std::to_string(k++);
    for (auto& c : n.children) assign_ids(c, base, k);
}

std::vector<Node*> table_rows(Node& table) {
    std::vector<Node*> rows;
    for (auto& c : table.children) {
        if (!c.is_element()) continue;
        if (c.tag == "tr") {
            rows.push_back(&c);
        } else if (c.tag == "thead" || c.tag == "tbody" || c.tag == "tfoot") {
            for (auto& r : c.children)
                if (r.is_element() && r.tag == "tr") rows.push_back(&r);
        }
    }
    return rows;
}

std::string sort_key(const Node& child, const std::optional<std::size_t>& column) {
    if (!column) return text_content(child);
    std::size_t k = 0;
    for (const auto& c : child.children) {
        if (!c.is_element()) continue;
        if (k++ == *column) return text_content(c);
    }
    return "";
}

std::regex separator_regex(const DocEdit& e) {
    try {
        return std::regex(e.separator);
    } catch (const std::regex_error&) {
        throw Error(ErrorCode::InvalidFormat, "bad separator regex '" + e.separator + "'");
    }
}

Node split_cells(const Node& target, const DocEdit& e, const std::regex& re) {
    Node out = target;
    std::string content = text_content(target);
    std::vector<std::string> parts(std::sregex_token_iterator(content.begin(), content.end(), re, -1),
                                   std::sregex_token_iterator());
    if (parts.empty()) parts.emplace_back();
    out.children.clear();
    for (std::size_t k = 0; k < parts.size(); ++k) {
        std::string id = prefix(e) + target.nid + "." + std::to_string(k);
        Node cell = Node::element(e.tag);
        cell.nid = id;
        Node t = Node::text_node(parts[k]);
        t.nid = id + ".t";
        cell.children.push_back(std::move(t));
        out.children.push_back(std::move(cell));
    }
    return out;
}

} // namespace

Node split_node(const Node& target, const DocEdit& e) { return split_cells(target, e, separator_regex(e)); }

Node instantiate_item(const DocEdit& e, const std::string& parent, std::size_t parent_count) {
    Node item = *e.subtree;
    std::size_t k = 0;
    assign_ids(item, parent_count == 1 ? prefix(e) : prefix(e) + parent + "/", k);
    return item;
}

std::string edit_prefix(const DocEdit& e) { return prefix(e); }

Node apply_structure(const Node& root, const DocEdit& e) {
    Node out = root;
    switch (e.kind) {
    case DocEdit::Kind::ChangeTag: {
        auto targets = element_targets(root, e);
        if (targets.empty()) miss(e);
        for (const auto& nid : targets) {
            Node* n = find_mut(out, nid);
            n->tag = e.tag;
            for (auto& c : n->children) {
                auto it = e.child_map.find(c.tag);
                if (c.is_element() && it != e.child_map.end()) c.tag = it->second;
            }
        }
        break;
    }
    case DocEdit::Kind::Wrap: {
        auto targets = element_targets(root, e);
        if (targets.empty()) miss(e);
        std::vector<std::string> parents;
        for (const auto& nid : targets) {
            Node* p = parent_mut(out, nid);
            if (!p) throw Error(ErrorCode::Unsupported, "cannot wrap the document root");
            if (std::find(parents.begin(), parents.end(), p->nid) == parents.end()) parents.push_back(p->nid);
        }
        for (const auto& pid : parents) {
            Node* p = find_mut(out, pid);
            Node wrapper = Node::element(e.tag, e.attrs);
            wrapper.nid = prefix(e) + pid;
            std::optional<std::size_t> first;
            std::vector<Node> kept;
            for (std::size_t k = 0; k < p->children.size(); ++k) {
                Node& c = p->children[k];
                if (std::find(targets.begin(), targets.end(), c.nid) != targets.end()) {
                    if (!first) first = kept.size();
                    wrapper.children.push_back(std::move(c));
                } else {
                    kept.push_back(std::move(c));
                }
            }
            kept.insert(kept.begin() + static_cast<std::ptrdiff_t>(*first), std::move(wrapper));
            p->children = std::move(kept);
        }
        break;
    }
    case DocEdit::Kind::SplitText: {
        auto targets = element_targets(root, e);
        if (targets.empty()) miss(e);
        std::regex re = separator_regex(e);
        for (const auto& nid : targets) {
            Node* n = find_mut(out, nid);
            *n = split_cells(*n, e, re);
        }
        break;
    }
    case DocEdit::Kind::InsertItem: {
        if (!e.subtree) throw Error(ErrorCode::InvalidFormat, "insert_item needs a subtree");
        auto parents = element_targets(root, e);
        if (parents.empty()) miss(e);
        for (const auto& pid : parents) {
            Node item = instantiate_item(e, pid, parents.size());
            Node* p = find_mut(out, pid);
            std::size_t at = std::min(e.position.value_or(p->children.size()), p->children.size());
            p->children.insert(p->children.begin() + static_cast<std::ptrdiff_t>(at), std::move(item));
        }
        break;
    }
    case DocEdit::Kind::Reorder: {
        auto parents = element_targets(root, e);
        if (parents.empty()) miss(e);
        for (const auto& pid : parents) {
            Node* p = find_mut(out, pid);
            std::stable_sort(p->children.begin(), p->children.end(), [&](const Node& a, const Node& b) {
                return sort_key(a, e.key_column) < sort_key(b, e.key_column);
            });
        }
        break;
    }
    case DocEdit::Kind::SetText: {
        auto targets = select(root, e.target);
        if (targets.empty()) miss(e);
        for (const auto& nid : targets) {
            Node* n = find_mut(out, nid);
            if (!n->is_element()) {
                n->text = e.text;
            } else if (n->children.size() == 1 && !n->children[0].is_element()) {
                n->children[0].text = e.text;
            } else {
                Node t = Node::text_node(e.text);
                t.nid = prefix(e) + nid + ".t";
                n->children = {std::move(t)};
            }
        }
        break;
    }
    case DocEdit::Kind::AddColumn: {
        auto tables = element_targets(root, e);
        if (tables.empty()) miss(e);
        for (const auto& tid : tables) {
            Node* t = find_mut(out, tid);
            for (Node* row : table_rows(*t)) {
                bool head = parent_mut(*t, row->nid)->tag == "thead";
                Node cell = Node::element(head ? "th" : "td");
                cell.nid = prefix(e) + row->nid;
                Node txt = Node::text_node(head ? e.text : e.default_value);
                txt.nid = cell.nid + ".t";
                cell.children.push_back(std::move(txt));
                row->children.push_back(std::move(cell));
            }
        }
        break;
    }
    }
    return out;
}

// ── formula co-evolution ────────────────────────────────────────────────

namespace {

std::size_t same_tag_position(const Index& ix, const std::string& nid) {
    return ix.entries[static_cast<std::size_t>(ix.by_nid.at(nid))].same_tag;
}

/// Candidate path after a schema edit, derived from which nodes each step
/// matched before it.
NodePath candidate_path(const NodePath& p, const DocEdit& e, const Index& before, const Index& after) {
    auto prefixes = before.prefixes(p);
    std::set<int> targets;
    if (e.target.nid) {
        auto it = before.by_nid.find(*e.target.nid);
        if (it != before.by_nid.end()) targets.insert(it->second);
    } else {
        auto t = before.prefixes(e.target.path);
        if (!t.empty()) targets.insert(t.back().begin(), t.back().end());
    }
    auto all_in = [&](const std::vector<int>& xs, auto proj) {
        return !xs.empty() && std::all_of(xs.begin(), xs.end(), [&](int x) { return targets.count(proj(x)) > 0; });
    };
    auto self = [](int x) { return x; };
    auto parent = [&](int x) { return before.entries[static_cast<std::size_t>(x)].parent; };

    NodePath out;
    for (std::size_t k = 0; k < p.steps.size(); ++k) {
        Step s = p.steps[k];
        const auto& matched = prefixes[k];
        if (e.kind == DocEdit::Kind::ChangeTag) {
            if (all_in(matched, self)) {
                s.tag = e.tag;
            } else if (all_in(matched, parent)) {
                auto it = e.child_map.find(s.tag);
                if (it != e.child_map.end()) s.tag = it->second;
            }
        } else if (e.kind == DocEdit::Kind::Wrap && k > 0 && all_in(matched, self)) {
            out.steps.push_back(Step{e.tag, std::nullopt, std::nullopt});
        }
        if (s.index && matched.size() == 1) {
            const std::string nid = before.nid(matched.front());
            if (after.by_nid.count(nid)) s.index = same_tag_position(after, nid);
        }
        out.steps.push_back(std::move(s));
    }
    return out;
}

NodePath rewrite_path(const NodePath& p, const DocEdit& e, const Node& before, const Node& after) {
    Index ib(before), ia(after);
    auto want = nids_of(ib, ib.prefixes(p).back());
    auto selects = [&](const NodePath& q) { return nids_of(ia, ia.prefixes(q).back()) == want; };
    if (selects(p)) return p;
    NodePath q = candidate_path(p, e, ib, ia);
    if (selects(q)) return q;
    throw Error(ErrorCode::Unrewritable,
                "path " + format_node_path(p) + " cannot follow " + std::string(to_string(e.kind)) + " " +
                    format_selector(e.target),
                Json{{"path", format_node_path(p)}, {"edit", to_json(e)}});
}

Formula rewrite_with(const Formula& f, const DocEdit& e, const Node& before, const Node& after) {
    Formula out = f;
    if (f.kind == Formula::Kind::Ref || f.kind == Formula::Kind::Count) out.path = rewrite_path(f.path, e, before, after);
    for (auto& a : out.args) a = rewrite_with(a, e, before, after);
    return out;
}

} // namespace

Formula rewrite_formula(const Formula& f, const DocEdit& edit, const Node& before) {
    if (!edit.is_schema()) return f;
    Node after;
    try {
        after = apply_structure(before, edit);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::SelectorMiss) return f;
        throw;
    }
    return rewrite_with(f, edit, before, after);
}

NodePath rewrite_node_path(const NodePath& p, const DocEdit& e, const Node& before, const Node& after) {
    return rewrite_path(p, e, before, after);
}

Node apply_edit(const Node& root, const DocEdit& edit, std::vector<std::string>* stale) {
    Node out = apply_structure(root, edit);
    if (!edit.is_schema()) return out;
    for (const auto& hf : collect_formulas(out)) {
        try {
            Formula g = rewrite_with(hf.formula, edit, root, out);
            if (g != hf.formula) find_mut(out, hf.id)->text = "=" + format_formula(g);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Unrewritable) throw;
            if (stale) stale->push_back(hf.id);
        }
    }
    return out;
}

// ── invalidation ────────────────────────────────────────────────────────

namespace {

struct Shape {
    std::string tag;
    std::map<std::string, std::string> attrs;
    std::string text;
    std::vector<std::string> kids;
    bool operator==(const Shape&) const = default;
};

std::map<std::string, Shape> shapes(const Node& root) {
    std::map<std::string, Shape> out;
    preorder(root, [&](const Node& n) {
        Shape s{n.tag, n.attrs, n.text, {}};
        for (const auto& c : n.children) s.kids.push_back(c.nid);
        out[n.nid] = std::move(s);
    });
    return out;
}

/// Nodes a formula reads: every prefix match plus everything under the
/// final matches.
std::set<std::string> dependencies(const Node& root, const Formula& f) {
    std::set<std::string> out;
    std::function<void(const Formula&)> go = [&](const Formula& g) {
        if (g.kind == Formula::Kind::Ref || g.kind == Formula::Kind::Count) {
            Index ix(root);
            auto pre = ix.prefixes(g.path);
            for (const auto& level : pre)
                for (int e : level) out.insert(ix.nid(e));
            for (int e : pre.back())
                preorder(*ix.entries[static_cast<std::size_t>(e)].node, [&](const Node& n) { out.insert(n.nid); });
        }
        for (const auto& a : g.args) go(a);
    };
    go(f);
    return out;
}

} // namespace

std::set<std::string> invalidate(const Node& root, const std::vector<HostedFormula>& formulas, const DocEdit& edit) {
    Node after;
    try {
        after = apply_edit(root, edit);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::SelectorMiss) return {};
        throw;
    }
    auto a = shapes(root), b = shapes(after);
    std::set<std::string> touched;
    for (const auto& [nid, s] : a) {
        auto it = b.find(nid);
        if (it == b.end() || !(it->second == s)) touched.insert(nid);
    }
    for (const auto& [nid, s] : b)
        if (!a.count(nid)) touched.insert(nid);

    std::vector<std::set<std::string>> deps;
    for (const auto& hf : formulas) {
        auto d = dependencies(root, hf.formula);
        auto d2 = dependencies(after, hf.formula);
        d.insert(d2.begin(), d2.end());
        deps.push_back(std::move(d));
    }
    std::set<std::string> dirty;
    auto hits = [&](const std::set<std::string>& d, const std::set<std::string>& xs) {
        return std::any_of(xs.begin(), xs.end(), [&](const std::string& x) { return d.count(x) > 0; });
    };
    for (std::size_t k = 0; k < formulas.size(); ++k)
        if (touched.count(formulas[k].id) || hits(deps[k], touched)) dirty.insert(formulas[k].id);
    for (bool grew = true; grew;) {
        grew = false;
        std::set<std::string> hosts;
        for (const auto& hf : formulas)
            if (dirty.count(hf.id)) hosts.insert({hf.host, hf.id});
        for (std::size_t k = 0; k < formulas.size(); ++k)
            if (!dirty.count(formulas[k].id) && hits(deps[k], hosts)) grew = dirty.insert(formulas[k].id).second;
    }
    return dirty;
}

} // namespace schemakit::doc
