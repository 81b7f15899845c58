// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
#include "schemakit/query.h"

#include <algorithm>
#include <cctype>
#include <set>

#include "schemakit/error.h"

namespace schemakit {

std::vector<std::string> Query::tables() const {
    std::vector<std::string> out{from};
    for (const auto& j : joins) out.push_back(j.table);
    return out;
}

// ── parsing ────────────────────────────────────────────────────────────

namespace {

struct Token {
    enum class Kind { Ident, Keyword, Number, String, Punct, End };
    Kind kind;
    std::string text;  // keywords upper-cased
    int line;
    int column;
    std::size_t index;  // 1-based
};

const std::set<std::string, std::less<>> kKeywords{"SELECT", "FROM", "JOIN", "ON",   "WHERE",
                                                   "IS",     "NULL", "AND",  "TRUE", "FALSE"};

std::string upper(std::string s) {
    for (auto& ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return s;
}

[[noreturn]] void syntax_error(const std::string& msg, int line, int column, std::size_t index, const std::string& tok) {
    throw Error(ErrorCode::SyntaxError,
                msg + " at line " + std::to_string(line) + ", column " + std::to_string(column) + " (token " +
                    std::to_string(index) + ")",
                Json{{"line", line}, {"column", column}, {"token", index}, {"text", tok}});
}

std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) {
            if (s[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++i;
        }
    };
    while (i < s.size()) {
        char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
            continue;
        }
        Token t{Token::Kind::Punct, "", line, col, out.size() + 1};
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
            t.text = std::string(s.substr(i, j - i));
            if (kKeywords.count(upper(t.text))) {
                t.kind = Token::Kind::Keyword;
                t.text = upper(t.text);
            } else {
                t.kind = Token::Kind::Ident;
            }
            advance(j - i);
        } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                   (c == '-' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
            std::size_t j = i + 1;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            t.kind = Token::Kind::Number;
            t.text = std::string(s.substr(i, j - i));
            advance(j - i);
        } else if (c == '\'') {
            std::size_t j = i + 1;
            std::string text;
            for (;;) {
                if (j >= s.size()) syntax_error("unterminated string", line, col, t.index, "'");
                if (s[j] == '\'') {
                    if (j + 1 < s.size() && s[j + 1] == '\'') {
                        text += '\'';
                        j += 2;
                        continue;
                    }
                    break;
                }
                text += s[j++];
            }
            t.kind = Token::Kind::String;
            t.text = std::move(text);
            advance(j + 1 - i);
        } else if (c == ',' || c == '.' || c == '=' || c == ';') {
            t.text = std::string(1, c);
            advance(1);
        } else {
            syntax_error(std::string("unexpected character '") + c + "'", line, col, t.index, std::string(1, c));
        }
        out.push_back(std::move(t));
    }
    out.push_back({Token::Kind::End, "", line, col, out.size() + 1});
    return out;
}

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    Query parse() {
        Query q;
        keyword("SELECT");
        q.select.push_back(column_ref());
        while (punct(",")) q.select.push_back(column_ref());
        keyword("FROM");
        q.from = ident("table name");
        while (peek_keyword("JOIN")) {
            ++pos_;
            JoinClause j;
            j.table = ident("table name");
            keyword("ON");
            j.left = column_ref();
            expect_punct("=");
            j.right = column_ref();
            q.joins.push_back(std::move(j));
        }
        if (peek_keyword("WHERE")) {
            ++pos_;
            q.where.push_back(predicate());
            while (peek_keyword("AND")) {
                ++pos_;
                q.where.push_back(predicate());
            }
        }
        punct(";");
        if (cur().kind != Token::Kind::End) fail("expected end of query");
        return q;
    }

private:
    const Token& cur() const { return toks_[pos_]; }

    [[noreturn]] void fail(const std::string& msg) const {
        const Token& t = cur();
        syntax_error(msg + (t.kind == Token::Kind::End ? ", found end of input" : ", found '" + t.text + "'"), t.line,
                     t.column, t.index, t.text);
    }

    bool peek_keyword(std::string_view kw) const { return cur().kind == Token::Kind::Keyword && cur().text == kw; }

    void keyword(std::string_view kw) {
        if (!peek_keyword(kw)) fail("expected " + std::string(kw));
        ++pos_;
    }

    bool punct(std::string_view p) {
        if (cur().kind == Token::Kind::Punct && cur().text == p) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect_punct(std::string_view p) {
        if (!punct(p)) fail("expected '" + std::string(p) + "'");
    }

    std::string ident(const std::string& what) {
        if (cur().kind != Token::Kind::Ident) fail("expected " + what);
        return toks_[pos_++].text;
    }

    ColumnRef column_ref() {
        ColumnRef r;
        std::string first = ident("column name");
        if (punct(".")) {
            r.table = std::move(first);
            r.column = ident("column name");
        } else {
            r.column = std::move(first);
        }
        return r;
    }

    Predicate predicate() {
        Predicate p;
        p.column = column_ref();
        if (peek_keyword("IS")) {
            ++pos_;
            keyword("NULL");
            p.kind = Predicate::Kind::IsNull;
            return p;
        }
        expect_punct("=");
        p.kind = Predicate::Kind::Equals;
        const Token& t = cur();
        if (t.kind == Token::Kind::Number) {
            try {
                p.literal = Value::integer(std::stoll(t.text));
            } catch (const std::out_of_range&) {
                fail("integer literal out of range");
            }
        } else if (t.kind == Token::Kind::String) {
            p.literal = Value::str(t.text);
        } else if (t.kind == Token::Kind::Keyword && (t.text == "TRUE" || t.text == "FALSE")) {
            p.literal = Value::boolean(t.text == "TRUE");
        } else {
            fail("expected a literal");
        }
        ++pos_;
        return p;
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

std::string literal_text(const Value& v) {
    switch (v.kind) {
    case Value::Kind::Bool: return v.b ? "TRUE" : "FALSE";
    case Value::Kind::Int:
    case Value::Kind::Id: return std::to_string(v.i);
    case Value::Kind::Str: {
        std::string out = "'";
        for (char c : v.s) {
            if (c == '\'') out += '\'';
            out += c;
        }
        return out + "'";
    }
    default: throw Error(ErrorCode::InvalidFormat, "unsupported literal " + describe(v));
    }
}

} // namespace

Query parse_query(std::string_view text) { return Parser(tokenize(text)).parse(); }

std::string print_query(const Query& q) {
    std::string out = "SELECT ";
    for (std::size_t k = 0; k < q.select.size(); ++k) out += (k ? ", " : "") + q.select[k].text();
    out += "\nFROM " + q.from;
    for (const auto& j : q.joins) out += "\nJOIN " + j.table + " ON " + j.left.text() + " = " + j.right.text();
    for (std::size_t k = 0; k < q.where.size(); ++k) {
        const Predicate& p = q.where[k];
        out += k ? "\n  AND " : "\nWHERE ";
        out += p.column.text();
        out += p.kind == Predicate::Kind::IsNull ? " IS NULL" : " = " + literal_text(p.literal);
    }
    return out + ";";
}

// ── evaluation ─────────────────────────────────────────────────────────

namespace {

struct Slot {
    std::size_t table;
    std::size_t column;
};

struct Scope {
    const Database& db;
    std::vector<const Table*> tables;
    std::vector<std::string> names;

    /// Resolves against the first `visible` tables.
    Slot resolve(const ColumnRef& r, std::size_t visible) const {
        if (r.table) {
            for (std::size_t t = 0; t < visible; ++t) {
                if (names[t] != *r.table) continue;
                auto c = tables[t]->column_index(r.column);
                if (!c) throw Error(ErrorCode::UnknownColumn, *r.table + " has no column '" + r.column + "'");
                return {t, *c};
            }
            if (!db.has_table(*r.table)) throw Error(ErrorCode::UnknownTable, "no table '" + *r.table + "'");
            throw Error(ErrorCode::UnknownColumn, "table '" + *r.table + "' is not in scope for " + r.text());
        }
        std::optional<Slot> found;
        for (std::size_t t = 0; t < visible; ++t) {
            if (auto c = tables[t]->column_index(r.column)) {
                if (found)
                    throw Error(ErrorCode::AmbiguousColumn, "column '" + r.column + "' is ambiguous between " +
                                                                names[found->table] + " and " + names[t]);
                found = Slot{t, *c};
            }
        }
        if (!found) throw Error(ErrorCode::UnknownColumn, "no column '" + r.column + "' in scope");
        return *found;
    }
};

const Value& unwrap(const Value& v) { return v.kind == Value::Kind::Some ? v.items.front() : v; }

bool cells_equal(const Value& a, const Value& b) {
    const Value& x = unwrap(a);
    const Value& y = unwrap(b);
    if (x.is_none() || y.is_none()) return false;
    bool xn = x.kind == Value::Kind::Int || x.kind == Value::Kind::Id;
    bool yn = y.kind == Value::Kind::Int || y.kind == Value::Kind::Id;
    if (xn && yn) return x.i == y.i;
    if (x.kind == Value::Kind::DateTime && y.kind == Value::Kind::Str) return x.dt.iso() == y.s;
    if (y.kind == Value::Kind::DateTime && x.kind == Value::Kind::Str) return y.dt.iso() == x.s;
    return x == y;
}

} // namespace

ResultSet evaluate_query(const Database& db, const Query& q) {
    Scope scope{db, {}, {}};
    for (const auto& name : q.tables()) {
        if (std::find(scope.names.begin(), scope.names.end(), name) != scope.names.end())
            throw Error(ErrorCode::SyntaxError, "table '" + name + "' appears twice; aliases are not supported");
        scope.tables.push_back(&db.table(name));
        scope.names.push_back(name);
    }
    const std::size_t n = scope.tables.size();

    std::vector<std::pair<Slot, Slot>> on;
    for (std::size_t k = 0; k < q.joins.size(); ++k)
        on.emplace_back(scope.resolve(q.joins[k].left, k + 2), scope.resolve(q.joins[k].right, k + 2));
    std::vector<Slot> filters;
    for (const auto& p : q.where) filters.push_back(scope.resolve(p.column, n));
    ResultSet rs;
    std::vector<Slot> projection;
    for (const auto& r : q.select) {
        projection.push_back(scope.resolve(r, n));
        rs.columns.push_back(r.column);
    }

    std::vector<const Row*> bound(n, nullptr);
    auto cell = [&](Slot s) -> const Value& { return (*bound[s.table])[s.column]; };
    auto emit = [&] {
        for (std::size_t k = 0; k < q.where.size(); ++k) {
            const Value& v = cell(filters[k]);
            if (q.where[k].kind == Predicate::Kind::IsNull ? !v.is_none() : !cells_equal(v, q.where[k].literal))
                return;
        }
        Row out;
        for (Slot s : projection) out.push_back(cell(s));
        rs.rows.push_back(std::move(out));
    };
    auto loop = [&](auto& self, std::size_t depth) -> void {
        if (depth == n) return emit();
        for (const Row& r : scope.tables[depth]->rows) {
            bound[depth] = &r;
            if (depth > 0 && !cells_equal(cell(on[depth - 1].first), cell(on[depth - 1].second))) continue;
            self(self, depth + 1);
        }
    };
    loop(loop, 0);
    return rs;
}

bool same_results(const ResultSet& a, const ResultSet& b) {
    if (a.columns.size() != b.columns.size() || a.rows.size() != b.rows.size()) return false;
    std::vector<std::size_t> perm;
    std::vector<bool> used(b.columns.size(), false);
    for (const auto& name : a.columns) {
        std::optional<std::size_t> hit;
        for (std::size_t k = 0; k < b.columns.size() && !hit; ++k)
            if (!used[k] && b.columns[k] == name) hit = k;
        if (!hit) return false;
        used[*hit] = true;
        perm.push_back(*hit);
    }
    std::vector<Row> ra = a.rows, rb;
    for (const auto& row : b.rows) {
        Row r;
        for (std::size_t k : perm) r.push_back(row[k]);
        rb.push_back(std::move(r));
    }
    std::sort(ra.begin(), ra.end());
    std::sort(rb.begin(), rb.end());
    return ra == rb;
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string cell_text(const Value& v) {
    const Value& x = unwrap(v);
    switch (x.kind) {
    case Value::Kind::None: return "";
    case Value::Kind::Bool: return x.b ? "true" : "false";
    case Value::Kind::Int:
    case Value::Kind::Id: return std::to_string(x.i);
    case Value::Kind::Str: return x.s;
    case Value::Kind::DateTime: return x.dt.iso();
    default: return describe(x);
    }
}

} // namespace

std::string to_csv(const ResultSet& rs) {
    std::string out;
    auto line = [&](const std::vector<std::string>& fields) {
        for (std::size_t k = 0; k < fields.size(); ++k) out += (k ? "," : "") + csv_field(fields[k]);
        out += "\r\n";
    };
    line(rs.columns);
    for (const auto& row : rs.rows) {
        std::vector<std::string> f;
        for (const auto& c : row) f.push_back(cell_text(c));
        line(f);
    }
    return out;
}

// ── rewrite ────────────────────────────────────────────────────────────

namespace {

[[noreturn]] void cannot(const std::string& msg) { throw Error(ErrorCode::CannotRewrite, msg); }

template <typename Q, typename F>
void each_ref(Q& q, F&& f) {
    for (auto& r : q.select) f(r);
    for (auto& j : q.joins) {
        f(j.left);
        f(j.right);
    }
    for (auto& p : q.where) f(p.column);
}

bool mentions(const Query& q, const std::string& table) {
    auto t = q.tables();
    return std::find(t.begin(), t.end(), table) != t.end();
}

Query rewrite_extract(const Query& q, const Correspondence& corr) {
    if (!mentions(q, corr.source)) return q;
    auto touches = [&](const ColumnRef& r) {
        return corr.extracts(r.column) && (!r.table || *r.table == corr.source);
    };
    bool affected = false;
    each_ref(q, [&](const ColumnRef& r) { affected = affected || touches(r); });
    if (!affected) return q;

    if (mentions(q, corr.new_table)) cannot("query already uses table '" + corr.new_table + "'");
    each_ref(q, [&](const ColumnRef& r) {
        if (!r.table && (r.column == corr.fk || r.column == corr.key))
            cannot("bare column '" + r.column + "' would become ambiguous after the join");
    });
    auto tables = q.tables();
    std::size_t at = static_cast<std::size_t>(std::find(tables.begin(), tables.end(), corr.source) - tables.begin());
    if (at > 0) {
        const JoinClause& own = q.joins[at - 1];
        if (touches(own.left) || touches(own.right))
            cannot("join condition on '" + corr.source + "' uses an extracted column before it can be joined");
    }

    Query out = q;
    each_ref(out, [&](ColumnRef& r) {
        if (r.table && *r.table == corr.source && corr.extracts(r.column)) r.table = corr.new_table;
    });
    JoinClause j{corr.new_table, ColumnRef{corr.source, corr.fk}, ColumnRef{corr.new_table, corr.key}};
    out.joins.insert(out.joins.begin() + static_cast<std::ptrdiff_t>(at), std::move(j));
    return out;
}

Query rewrite_absorb(const Query& q, const Correspondence& corr) {
    if (!mentions(q, corr.new_table)) return q;
    if (q.from == corr.new_table) cannot("query reads '" + corr.new_table + "' directly; it no longer exists");
    auto is_link = [&](const JoinClause& j) {
        ColumnRef fk{corr.source, corr.fk}, key{corr.new_table, corr.key};
        return j.table == corr.new_table && ((j.left == fk && j.right == key) || (j.left == key && j.right == fk));
    };
    auto it = std::find_if(q.joins.begin(), q.joins.end(), is_link);
    if (it == q.joins.end()) cannot("no join of '" + corr.new_table + "' on " + corr.source + "." + corr.fk);
    auto tables = q.tables();
    if (std::find(tables.begin(), tables.end(), corr.source) > tables.begin() + (it - q.joins.begin()) + 1)
        cannot("'" + corr.source + "' is joined after '" + corr.new_table + "'");

    Query out = q;
    out.joins.erase(out.joins.begin() + (it - q.joins.begin()));
    each_ref(out, [&](ColumnRef& r) {
        bool bare_link = !r.table && (r.column == corr.fk || r.column == corr.key);
        bool src_fk = r.table && *r.table == corr.source && r.column == corr.fk;
        if (bare_link || src_fk) cannot("'" + r.text() + "' disappears when the entity is absorbed");
        if (r.table && *r.table == corr.new_table) {
            if (!corr.extracts(r.column)) cannot("'" + r.text() + "' has no counterpart in '" + corr.source + "'");
            r.table = corr.source;
        }
    });
    return out;
}

} // namespace

Query rewrite_query(const Query& q, const Correspondence& corr) {
    return corr.kind == Correspondence::Kind::Extract ? rewrite_extract(q, corr) : rewrite_absorb(q, corr);
}

} // namespace schemakit
