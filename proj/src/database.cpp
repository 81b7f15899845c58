// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
#include "schemakit/database.h"

#include <algorithm>
#include <set>

#include "schemakit/error.h"
#include "schemakit/schema.h"

namespace schemakit {

std::optional<std::size_t> Table::column_index(std::string_view name) const {
    for (std::size_t k = 0; k < columns.size(); ++k)
        if (columns[k].name == name) return k;
    return std::nullopt;
}

std::size_t Table::key_index() const {
    auto k = column_index(key);
    if (!k) throw Error(ErrorCode::SpecInvalid, "key column '" + key + "' is missing");
    return *k;
}

const Row* Table::find_row(const Value& k) const {
    std::size_t ki = key_index();
    for (const auto& r : rows)
        if (r[ki] == k) return &r;
    return nullptr;
}

Row* Table::find_row(const Value& k) {
    std::size_t ki = key_index();
    for (auto& r : rows)
        if (r[ki] == k) return &r;
    return nullptr;
}

const Table& Database::table(std::string_view name) const {
    auto it = tables.find(name);
    if (it == tables.end()) throw Error(ErrorCode::UnknownTable, "no table '" + std::string(name) + "'");
    return it->second;
}

Table& Database::table(std::string_view name) {
    auto it = tables.find(name);
    if (it == tables.end()) throw Error(ErrorCode::UnknownTable, "no table '" + std::string(name) + "'");
    return it->second;
}

std::vector<std::string> integrity_problems(const Database& db) {
    std::vector<std::string> out;
    for (const auto& [name, t] : db.tables) {
        std::set<std::string> names;
        for (const auto& c : t.columns)
            if (!names.insert(c.name).second) out.push_back(name + ": duplicate column '" + c.name + "'");
        auto ki = t.column_index(t.key);
        if (!ki) {
            out.push_back(name + ": key column '" + t.key + "' is missing");
            continue;
        }
        std::set<Value> keys;
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            const Row& row = t.rows[r];
            if (row.size() != t.columns.size()) {
                out.push_back(name + ": row " + std::to_string(r) + " has wrong arity");
                continue;
            }
            if (row[*ki].is_none()) out.push_back(name + ": row " + std::to_string(r) + " has a null key");
            if (!keys.insert(row[*ki]).second) out.push_back(name + ": duplicate key " + describe(row[*ki]));
            for (std::size_t c = 0; c < row.size(); ++c) {
                const Column& col = t.columns[c];
                if (!conforms(row[c], col.type).ok())
                    out.push_back(name + "." + col.name + ": cell " + describe(row[c]) + " is not " + describe(col.type));
            }
        }
    }
    for (const auto& [name, t] : db.tables) {
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            const Column& col = t.columns[c];
            if (!col.ref) continue;
            auto target = db.tables.find(*col.ref);
            if (target == db.tables.end()) {
                out.push_back(name + "." + col.name + ": references missing table '" + *col.ref + "'");
                continue;
            }
            for (const auto& row : t.rows) {
                if (c >= row.size() || row[c].is_none()) continue;
                const Value& ref = row[c].kind == Value::Kind::Some ? row[c].items.front() : row[c];
                if (!target->second.find_row(ref))
                    out.push_back(name + "." + col.name + ": dangling reference " + describe(ref));
            }
        }
    }
    return out;
}

void validate(const Database& db) {
    auto problems = integrity_problems(db);
    if (problems.empty()) return;
    const std::string& first = problems.front();
    bool dangling = first.find("dangling") != std::string::npos || first.find("missing table") != std::string::npos;
    throw Error(dangling ? ErrorCode::DanglingReference : ErrorCode::SpecInvalid, first);
}

Value next_key(const Table& t) {
    std::size_t ki = t.key_index();
    std::int64_t best = 0;
    bool is_id = t.columns[ki].type.is_prim(Prim::Id);
    for (const auto& r : t.rows) best = std::max(best, r[ki].i);
    return is_id ? Value::id(best + 1) : Value::integer(best + 1);
}

std::string column_type_name(const TypeExpr& t) {
    if (t.kind == TypeExpr::Kind::Option) return std::string(to_string(t.element().prim)) + "?";
    return std::string(to_string(t.prim));
}

TypeExpr column_type_from_name(std::string_view name) {
    bool nullable = !name.empty() && name.back() == '?';
    if (nullable) name.remove_suffix(1);
    auto p = prim_from_string(name);
    if (!p) throw Error(ErrorCode::InvalidFormat, "unknown column type '" + std::string(name) + "'");
    TypeExpr t = TypeExpr::primitive(*p);
    return nullable ? TypeExpr::option(t) : t;
}

Json cell_to_json(const Value& v) {
    switch (v.kind) {
    case Value::Kind::None: return nullptr;
    case Value::Kind::Some: return cell_to_json(v.items.front());
    case Value::Kind::Bool: return v.b;
    case Value::Kind::Int:
    case Value::Kind::Id: return v.i;
    case Value::Kind::Str: return v.s;
    case Value::Kind::DateTime: return v.dt.iso();
    default: throw Error(ErrorCode::InvalidFormat, "cell values must be scalar, got " + describe(v));
    }
}

Value cell_from_json(const Json& j, const TypeExpr& type) {
    if (type.kind == TypeExpr::Kind::Option) {
        if (j.is_null()) return Value::none();
        return Value::some(cell_from_json(j, type.element()));
    }
    auto bad = [&] { return Error(ErrorCode::InvalidFormat, "cell " + j.dump() + " is not " + describe(type)); };
    switch (type.prim) {
    case Prim::Bool:
        if (!j.is_boolean()) throw bad();
        return Value::boolean(j.get<bool>());
    case Prim::Int:
        if (!j.is_number_integer()) throw bad();
        return Value::integer(j.get<std::int64_t>());
    case Prim::Id:
        if (!j.is_number_integer()) throw bad();
        return Value::id(j.get<std::int64_t>());
    case Prim::String:
        if (!j.is_string()) throw bad();
        return Value::str(j.get<std::string>());
    case Prim::DateTime: {
        auto dt = j.is_string() ? DateTime::parse(j.get<std::string>()) : std::nullopt;
        if (!dt) throw bad();
        return Value::datetime(*dt);
    }
    }
    throw bad();
}

Json to_json(const Column& c) {
    Json j{{"name", c.name}, {"type", column_type_name(c.type)}};
    if (c.ref) j["ref"] = *c.ref;
    return j;
}

Column column_from_json(const Json& j) {
    Column c{require_string(j, "name"), column_type_from_name(require_string(j, "type")), std::nullopt};
    if (j.contains("ref")) c.ref = j.at("ref").get<std::string>();
    return c;
}

Json to_json(const Database& db) {
    Json tables = Json::object();
    for (const auto& [name, t] : db.tables) {
        Json cols = Json::array();
        for (const auto& c : t.columns) cols.push_back(to_json(c));
        Json rows = Json::array();
        for (const auto& r : t.rows) {
            Json row = Json::array();
            for (const auto& cell : r) row.push_back(cell_to_json(cell));
            rows.push_back(std::move(row));
        }
        tables[name] = Json{{"key", t.key}, {"columns", std::move(cols)}, {"rows", std::move(rows)}};
    }
    return Json{{"tables", std::move(tables)}};
}

Database database_from_json(const Json& j) {
    Database db;
    for (const auto& [name, tj] : require(j, "tables").items()) {
        Table t;
        t.key = require_string(tj, "key");
        for (const auto& cj : require(tj, "columns")) t.columns.push_back(column_from_json(cj));
        for (const auto& rj : require(tj, "rows")) {
            if (!rj.is_array() || rj.size() != t.columns.size())
                throw Error(ErrorCode::InvalidFormat, name + ": row arity must equal column count");
            Row row;
            for (std::size_t c = 0; c < t.columns.size(); ++c) row.push_back(cell_from_json(rj[c], t.columns[c].type));
            t.rows.push_back(std::move(row));
        }
        db.tables.emplace(name, std::move(t));
    }
    validate(db);
    return db;
}

} // namespace schemakit
