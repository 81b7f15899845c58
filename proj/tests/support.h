// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Fixture loading and hand-rolled random generators shared by the unit and
// acceptance tests.
#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "schemakit/codec.h"
#include "schemakit/database.h"
#include "schemakit/doc.h"
#include "schemakit/entity.h"
#include "schemakit/query.h"
#include "schemakit/schema.h"

namespace schemakit::testing {

inline std::filesystem::path data_path(const std::string& name) {
    return std::filesystem::path(SCHEMAKIT_TESTDATA) / name;
}

inline Json data_json(const std::string& name) { return read_json_file(data_path(name)); }
inline std::string data_text(const std::string& name) { return read_text_file(data_path(name)); }

inline std::vector<Json> data_lines(const std::string& name) {
    std::vector<Json> out;
    std::string text = data_text(name), line;
    for (std::size_t at = 0; at < text.size();) {
        std::size_t nl = text.find('\n', at);
        line = text.substr(at, nl == std::string::npos ? std::string::npos : nl - at);
        if (line.find_first_not_of(" \t\r") != std::string::npos) out.push_back(Json::parse(line));
        at = nl == std::string::npos ? text.size() : nl + 1;
    }
    return out;
}

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    int range(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }
    template <typename T>
    const T& pick(const std::vector<T>& xs) {
        return xs[static_cast<std::size_t>(range(0, static_cast<int>(xs.size()) - 1))];
    }
    template <typename T>
    void shuffle(std::vector<T>& xs) { std::shuffle(xs.begin(), xs.end(), rng_); }

    std::string label(const std::string& prefix, int n) { return prefix + std::to_string(range(0, n - 1)); }

    // ------------------------------------------------------------- types

    TypeExpr prim() {
        static const std::vector<Prim> all{Prim::Bool, Prim::Int, Prim::String, Prim::DateTime, Prim::Id};
        return TypeExpr::primitive(pick(all));
    }

    TypeExpr type(int depth) {
        int k = depth <= 0 ? 0 : range(0, 5);
        switch (k) {
        case 1: return TypeExpr::option(type(depth - 1));
        case 2: return TypeExpr::list(type(depth - 1));
        case 3:
        case 4: {
            std::vector<Field> fields;
            int n = range(0, 4);
            for (int i = 0; i < n; ++i) {
                std::string l = label("f", 8);
                if (std::none_of(fields.begin(), fields.end(), [&](const Field& f) { return f.label == l; }))
                    fields.push_back({l, type(depth - 1)});
            }
            return TypeExpr::record(std::move(fields));
        }
        case 5: {
            std::vector<Case> cases;
            int n = range(1, 4);
            for (int i = 0; i < n; ++i) {
                std::string l = label("C", 8);
                if (std::any_of(cases.begin(), cases.end(), [&](const Case& c) { return c.label == l; })) continue;
                Case c{l, {}};
                int arity = range(0, 2);
                for (int a = 0; a < arity; ++a) c.payload.push_back(type(depth - 1));
                cases.push_back(std::move(c));
            }
            return TypeExpr::variant(std::move(cases));
        }
        default: return prim();
        }
    }

    Value value_of(Prim p) {
        switch (p) {
        case Prim::Bool: return Value::boolean(chance(0.5));
        case Prim::Int: return Value::integer(range(-5, 5));
        case Prim::String: return Value::str(pick(std::vector<std::string>{"a", "b", "x y", "", "q,\"r\""}));
        case Prim::DateTime: return Value::datetime(DateTime{2024, range(1, 12), range(1, 28), std::nullopt, 0, 0});
        case Prim::Id: return Value::id(range(1, 9));
        }
        return Value::none();
    }

    /// Structural recursion on the type: always conforming.
    Value value(const TypeExpr& t) {
        switch (t.kind) {
        case TypeExpr::Kind::Prim: return value_of(t.prim);
        case TypeExpr::Kind::Option: return chance(0.4) ? Value::none() : Value::some(value(t.element()));
        case TypeExpr::Kind::List: {
            std::vector<Value> xs;
            int n = range(0, 3);
            for (int i = 0; i < n; ++i) xs.push_back(value(t.element()));
            return Value::list(std::move(xs));
        }
        case TypeExpr::Kind::Record: {
            std::vector<RecordEntry> es;
            for (const auto& f : t.fields) es.push_back({f.label, value(f.type)});
            return Value::record(std::move(es));
        }
        case TypeExpr::Kind::Variant: {
            const Case& c = pick(t.cases);
            std::vector<Value> payload;
            for (const auto& p : c.payload) payload.push_back(value(p));
            return Value::variant(c.label, std::move(payload));
        }
        case TypeExpr::Kind::Named: break;
        }
        return Value::none();
    }

    // ---------------------------------------------------------- databases

    /// Source table S (key k, columns s0..) and optionally T (key tk,
    /// columns t0..). Small value domains so duplicates and nulls are common.
    Database database(bool with_second) {
        Database db;
        db.tables.emplace("S", table("k", "s", range(1, 5), range(0, 8)));
        if (with_second) db.tables.emplace("T", table("tk", "t", range(1, 3), range(0, 5)));
        return db;
    }

    ExtractSpec extract_spec(const Database& db) {
        const Table& s = db.table("S");
        std::vector<std::string> cols;
        for (const auto& c : s.columns)
            if (c.name != s.key && chance(0.5)) cols.push_back(c.name);
        if (cols.empty()) cols.push_back(s.columns[static_cast<std::size_t>(range(1, static_cast<int>(s.columns.size()) - 1))].name);
        return {"S", cols, "E", "ek", "efk"};
    }

    /// A query valid on `db`. When S is joined rather than read, its join
    /// condition avoids the columns in `avoid`.
    Query query(const Database& db, const std::vector<std::string>& avoid = {}) {
        Query q;
        bool join = db.has_table("T") && chance(0.6);
        bool s_first = !join || chance(0.5);
        std::vector<std::string> scope{"S"};
        if (join) scope.push_back("T");
        q.from = s_first ? "S" : "T";
        if (join) {
            const Table& s = db.table("S");
            const Table& t = db.table("T");
            std::vector<std::pair<std::string, std::string>> pairs;
            for (const auto& cs : s.columns)
                for (const auto& ct : t.columns)
                    if (column_kind(cs) == column_kind(ct) &&
                        (s_first || std::find(avoid.begin(), avoid.end(), cs.name) == avoid.end()))
                        pairs.emplace_back(cs.name, ct.name);
            if (pairs.empty()) {
                q.from = "S";
                join = false;
            } else {
                auto [sc, tc] = pick(pairs);
                ColumnRef a{std::string("S"), sc}, b{std::string("T"), tc};
                q.joins.push_back(s_first ? JoinClause{"T", a, b} : JoinClause{"S", b, a});
            }
        }
        std::vector<std::pair<std::string, Column>> cols;
        for (const auto& name : q.tables())
            for (const auto& c : db.table(name).columns) cols.emplace_back(name, c);
        int nsel = range(1, static_cast<int>(cols.size()));
        for (int i = 0; i < nsel; ++i) {
            const auto& [tbl, col] = pick(cols);
            q.select.push_back(ref(tbl, col.name));
        }
        int nwhere = range(0, 2);
        for (int i = 0; i < nwhere; ++i) {
            const auto& [tbl, col] = pick(cols);
            Predicate p;
            p.column = ref(tbl, col.name);
            if (col.type.kind == TypeExpr::Kind::Option && chance(0.5)) {
                p.kind = Predicate::Kind::IsNull;
            } else {
                p.kind = Predicate::Kind::Equals;
                Prim pr = column_kind(col);
                if (pr == Prim::String)
                    p.literal = Value::str(pick(strings()));
                else if (pr == Prim::Bool)
                    p.literal = Value::boolean(chance(0.5));
                else
                    p.literal = Value::integer(range(0, 3));
            }
            q.where.push_back(std::move(p));
        }
        return q;
    }

    // ---------------------------------------------------------- documents

    /// article with lists `ul[id='lK']` of "name, mail" items, headings and a
    /// dl of numbers and formulas.
    doc::Node document() {
        Json kids = Json::array();
        kids.push_back({{"tag", "h2"}, {"children", {{{"text", "People"}}}}});
        int lists = range(1, 3);
        for (int l = 0; l < lists; ++l) {
            Json items = Json::array();
            int n = range(0, 4);
            for (int i = 0; i < n; ++i) items.push_back({{"tag", "li"}, {"children", {{{"text", person()}}}}});
            kids.push_back({{"tag", "ul"}, {"attrs", {{"id", "l" + std::to_string(l)}}}, {"children", items}});
            if (chance(0.3)) kids.push_back({{"tag", "h2"}, {"children", {{{"text", "Notes"}}}}});
        }
        Json dl = Json::array();
        dl.push_back(dd("$" + std::to_string(range(1, 9) * 100)));
        dl.push_back(dd("=COUNT(/ul[id='l0']/li)"));
        dl.push_back(dd("=/dl/dd[0] * /dl/dd[1]"));
        kids.push_back({{"tag", "dl"}, {"children", dl}});
        return doc::node_from_json(Json{{"tag", "article"}, {"children", kids}});
    }

    std::string list_path(bool items) {
        std::string p = "/" + pick(std::vector<std::string>{"ul", "ol", "table"});
        if (chance(0.8)) p += "[id='l" + std::to_string(range(0, 2)) + "']";
        if (items) p += "/" + pick(std::vector<std::string>{"li", "li", "tr"});
        return p;
    }

    Json doc_edit(int seq) {
        Json j{{"seq", seq}};
        switch (range(0, 6)) {
        case 0:
            j["op"] = "change_tag";
            j["selector"] = list_path(false);
            j["tag"] = pick(std::vector<std::string>{"table", "ol"});
            j["child_map"] = {{"li", pick(std::vector<std::string>{"tr", "item"})}};
            break;
        case 1:
            j["op"] = "wrap";
            j["selector"] = list_path(true);
            j["tag"] = pick(std::vector<std::string>{"tbody", "group"});
            break;
        case 2:
            j["op"] = "split_text";
            j["selector"] = list_path(true);
            j["separator"] = ", ";
            j["tag"] = pick(std::vector<std::string>{"td", "span"});
            break;
        case 3:
            j["op"] = "add_column";
            j["selector"] = list_path(false);
            j["header"] = pick(std::vector<std::string>{"Who", "Note"});
            j["default"] = pick(std::vector<std::string>{"", "-"});
            break;
        case 4:
            j["op"] = "insert_item";
            j["selector"] = list_path(false);
            j["subtree"] = {{"tag", "li"}, {"children", {{{"text", person()}}}}};
            if (chance(0.5)) j["position"] = range(0, 3);
            break;
        case 5:
            j["op"] = "reorder";
            j["selector"] = list_path(false);
            if (chance(0.3)) j["key_column"] = 0;
            break;
        default:
            j["op"] = "set_text";
            j["selector"] = chance(0.3) ? std::string("/h2[0]") : list_path(true) + "[" + std::to_string(range(0, 2)) + "]";
            j["text"] = person();
            break;
        }
        return j;
    }

    doc::EditLog edit_log(const std::string& author) {
        std::vector<Json> lines{{{"author", author}}};
        int n = range(0, 4), seq = 0;
        for (int i = 0; i < n; ++i) lines.push_back(doc_edit(seq += range(1, 2)));
        return doc::edit_log_from_json_lines(lines);
    }

    /// A cell fitting `c`, drawn from the same small domains as table().
    Value cell_for(const Column& c) {
        if (c.type.kind != TypeExpr::Kind::Option) return cell(c.type.prim);
        return chance(0.3) ? Value::none() : Value::some(cell(c.type.element().prim));
    }

private:
    static Json dd(const std::string& text) { return {{"tag", "dd"}, {"children", {{{"text", text}}}}}; }

    std::string person() {
        static const std::vector<std::string> names{"Ada Lovelace", "Grace Hopper", "Alan Kay", "Barbara Liskov",
                                                    "Edsger Dijkstra", "Frances Allen"};
        const std::string& n = pick(names);
        return n + ", " + std::string(1, static_cast<char>(std::tolower(n[0]))) + "@example.org";
    }

    static std::vector<std::string> strings() { return {"red", "green", "blue, dark", "it's"}; }

    static Prim column_kind(const Column& c) {
        return c.type.kind == TypeExpr::Kind::Option ? c.type.element().prim : c.type.prim;
    }

    ColumnRef ref(const std::string& table, const std::string& column) {
        if (chance(0.5)) return ColumnRef{std::nullopt, column};
        return ColumnRef{table, column};
    }

    Value cell(Prim p) {
        switch (p) {
        case Prim::String: return Value::str(pick(strings()));
        case Prim::Bool: return Value::boolean(chance(0.5));
        default: return Value::integer(range(0, 3));
        }
    }

    Table table(const std::string& key, const std::string& prefix, int ncols, int nrows) {
        static const std::vector<Prim> kinds{Prim::Int, Prim::String, Prim::Bool};
        Table t;
        t.key = key;
        t.columns.push_back({key, TypeExpr::primitive(Prim::Id), std::nullopt});
        for (int c = 0; c < ncols; ++c) {
            TypeExpr ty = TypeExpr::primitive(pick(kinds));
            if (chance(0.3)) ty = TypeExpr::option(ty);
            t.columns.push_back({prefix + std::to_string(c), ty, std::nullopt});
        }
        for (int r = 0; r < nrows; ++r) {
            Row row{Value::id(r + 1)};
            for (std::size_t c = 1; c < t.columns.size(); ++c) {
                const TypeExpr& ty = t.columns[c].type;
                if (ty.kind == TypeExpr::Kind::Option)
                    row.push_back(chance(0.3) ? Value::none() : Value::some(cell(ty.element().prim)));
                else
                    row.push_back(cell(ty.prim));
            }
            t.rows.push_back(std::move(row));
        }
        return t;
    }

    std::mt19937_64 rng_;
};

/// Rows of `t` projected onto `names`, sorted: a column-order-free view.
// One to four random edits applied to `t`.
inline TypeExpr mutate_type(Gen& g, TypeExpr t) {
    int n = g.range(1, 4);
    for (int i = 0; i < n; ++i) {
        if (t.kind == TypeExpr::Kind::Record) {
            int k = g.range(0, 3);
            if (k == 0 || t.fields.empty()) {
                std::string l = g.label("n", 6);
                if (!t.find_field(l)) t.fields.insert(t.fields.begin() + g.range(0, static_cast<int>(t.fields.size())), {l, g.type(1)});
            } else if (k == 1) {
                t.fields.erase(t.fields.begin() + g.range(0, static_cast<int>(t.fields.size()) - 1));
            } else if (k == 2) {
                auto& f = t.fields[static_cast<std::size_t>(g.range(0, static_cast<int>(t.fields.size()) - 1))];
                f.type = g.chance(0.5) ? mutate_type(g, f.type) : g.type(2);
            } else {
                g.shuffle(t.fields);
            }
        } else if (t.kind == TypeExpr::Kind::Variant) {
            int k = g.range(0, 2);
            if (k == 0) {
                std::string l = g.label("N", 6);
                if (!t.find_case(l)) t.cases.push_back({l, {g.type(1)}});
            } else if (k == 1 && t.cases.size() > 1) {
                t.cases.erase(t.cases.begin() + g.range(0, static_cast<int>(t.cases.size()) - 1));
            } else {
                auto& c = t.cases[static_cast<std::size_t>(g.range(0, static_cast<int>(t.cases.size()) - 1))];
                c.payload = {g.type(1)};
            }
        } else if (t.kind == TypeExpr::Kind::List || t.kind == TypeExpr::Kind::Option) {
            t.inner.front() = mutate_type(g, t.element());
        } else {
            t = g.type(2);
        }
    }
    return t;
}

// Whitespace-insensitive token stream of a query text.
inline std::vector<std::string> query_words(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) out.push_back(cur), cur.clear();
        } else if (c == ',' || c == ';' || c == '=') {
            if (!cur.empty()) out.push_back(cur), cur.clear();
            out.emplace_back(1, c);
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline doc::NodePath any_node_path(Gen& g) {
    static const char* tags[] = {"ul", "li", "table", "tr", "dd", "a"};
    doc::NodePath p;
    int n = g.range(1, 3);
    for (int k = 0; k < n; ++k) {
        doc::Step s;
        s.tag = tags[g.range(0, 5)];
        if (g.chance(0.3)) s.id = g.chance(0.5) ? "x" : "speakers";
        if (g.chance(0.3)) s.index = static_cast<std::size_t>(g.range(0, 3));
        p.steps.push_back(std::move(s));
    }
    return p;
}

inline doc::Formula any_formula(Gen& g, int depth) {
    static const double numbers[] = {0, 1, 2, 3.5, 12, 1200, 0.25};
    doc::Formula f;
    int k = depth > 0 ? g.range(0, 4) : g.range(0, 2);
    if (k == 0) {
        f.kind = doc::Formula::Kind::Number;
        f.number = numbers[g.range(0, 6)];
    } else if (k <= 2) {
        f.kind = k == 1 ? doc::Formula::Kind::Ref : doc::Formula::Kind::Count;
        f.path = any_node_path(g);
    } else {
        f.kind = k == 3 ? doc::Formula::Kind::Add : doc::Formula::Kind::Mul;
        f.args = {any_formula(g, depth - 1), any_formula(g, depth - 1)};
    }
    return f;
}

inline std::vector<Row> rows_by_columns(const Table& t, const std::vector<std::string>& names) {
    std::vector<Row> out;
    for (const auto& row : t.rows) {
        Row r;
        for (const auto& n : names) r.push_back(row[*t.column_index(n)]);
        out.push_back(std::move(r));
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace schemakit::testing
