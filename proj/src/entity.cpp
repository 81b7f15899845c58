// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
#include "schemakit/entity.h"

#include <algorithm>
#include <set>

#include "schemakit/error.h"
#include "schemakit/schema.h"

namespace schemakit {

bool Correspondence::extracts(std::string_view column) const {
    return std::any_of(columns.begin(), columns.end(), [&](const Column& c) { return c.name == column; });
}

Correspondence Correspondence::inverse() const {
    Correspondence c = *this;
    c.kind = kind == Kind::Extract ? Kind::Absorb : Kind::Extract;
    return c;
}

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::SpecInvalid, msg); }

const Value& unwrap(const Value& v) { return v.kind == Value::Kind::Some ? v.items.front() : v; }

void check_spec(const Database& db, const ExtractSpec& spec) {
    if (!db.has_table(spec.source)) invalid("no source table '" + spec.source + "'");
    const Table& src = db.table(spec.source);
    if (spec.columns.empty()) invalid("no columns to extract");
    std::set<std::string> seen;
    for (const auto& c : spec.columns) {
        if (!src.column_index(c)) invalid("source '" + spec.source + "' has no column '" + c + "'");
        if (c == src.key) invalid("cannot extract the source key '" + c + "'");
        if (!seen.insert(c).second) invalid("column '" + c + "' listed twice");
    }
    if (db.has_table(spec.new_table)) invalid("table '" + spec.new_table + "' already exists");
    if (spec.new_table.empty() || spec.key.empty() || spec.fk.empty()) invalid("new table, key and fk must be named");
    if (seen.count(spec.key)) invalid("new key '" + spec.key + "' collides with an extracted column");
    for (const auto& col : src.columns)
        if (!seen.count(col.name) && col.name == spec.fk)
            invalid("fk '" + spec.fk + "' collides with column '" + col.name + "' of '" + spec.source + "'");
}

ExtractResult do_extract(const Database& db, const ExtractSpec& spec, const Correspondence* prior) {
    check_spec(db, spec);
    const Table& src = db.table(spec.source);

    std::vector<std::size_t> idx;
    for (std::size_t c = 0; c < src.columns.size(); ++c)
        if (std::find(spec.columns.begin(), spec.columns.end(), src.columns[c].name) != spec.columns.end())
            idx.push_back(c);

    Correspondence corr;
    corr.kind = Correspondence::Kind::Extract;
    corr.source = spec.source;
    corr.new_table = spec.new_table;
    corr.key = spec.key;
    corr.fk = spec.fk;
    corr.positions = idx;
    for (std::size_t c : idx) corr.columns.push_back(src.columns[c]);

    std::int64_t next = 1;
    if (prior)
        for (const auto& [tuple, key] : prior->assignment) next = std::max(next, key.i + 1);

    Table entity;
    entity.key = spec.key;
    entity.columns.push_back({spec.key, TypeExpr::primitive(Prim::Id), std::nullopt});
    for (std::size_t c : idx) entity.columns.push_back(src.columns[c]);

    Table source;
    source.key = src.key;
    for (std::size_t c = 0; c < src.columns.size(); ++c)
        if (std::find(idx.begin(), idx.end(), c) == idx.end()) source.columns.push_back(src.columns[c]);
    corr.fk_position = source.columns.size();
    source.columns.push_back({spec.fk, TypeExpr::primitive(Prim::Id), spec.new_table});

    std::map<Row, Value> assigned;
    for (const auto& row : src.rows) {
        Row tuple;
        for (std::size_t c : idx) tuple.push_back(row[c]);
        auto it = assigned.find(tuple);
        if (it == assigned.end()) {
            std::optional<Value> key;
            if (prior)
                for (const auto& [t, k] : prior->assignment)
                    if (t == tuple) key = k;
            if (!key) key = Value::id(next++);
            it = assigned.emplace(tuple, *key).first;
            Row erow{*key};
            erow.insert(erow.end(), tuple.begin(), tuple.end());
            entity.rows.push_back(std::move(erow));
            corr.assignment.emplace_back(tuple, *key);
        }
        Row srow;
        for (std::size_t c = 0; c < row.size(); ++c)
            if (std::find(idx.begin(), idx.end(), c) == idx.end()) srow.push_back(row[c]);
        srow.push_back(it->second);
        source.rows.push_back(std::move(srow));
    }

    Database out = db;
    out.tables[spec.source] = std::move(source);
    out.tables.emplace(spec.new_table, std::move(entity));
    return {std::move(out), std::move(corr)};
}

} // namespace

ExtractResult extract_entity(const Database& db, const ExtractSpec& spec) { return do_extract(db, spec, nullptr); }

ExtractResult extract_entity(const Database& db, const ExtractSpec& spec, const Correspondence& prior) {
    return do_extract(db, spec, &prior);
}

namespace {

/// Shared join: replaces the fk column of `source` by `absorbed` columns of
/// `entity`, inserting them at `positions` (ascending, indexes in the result).
Database join_back(const Database& db, const std::string& source_name, const std::string& entity_name,
                   const std::string& fk, const std::vector<std::string>& absorbed,
                   const std::vector<std::size_t>& positions) {
    const Table& src = db.table(source_name);
    const Table& entity = db.table(entity_name);
    auto fki = src.column_index(fk);
    if (!fki) invalid("'" + source_name + "' has no column '" + fk + "'");
    bool nullable = src.columns[*fki].type.kind == TypeExpr::Kind::Option;

    std::vector<std::size_t> entity_idx;
    for (const auto& name : absorbed) {
        auto e = entity.column_index(name);
        if (!e) invalid("'" + entity_name + "' has no column '" + name + "'");
        if (name != fk && src.column_index(name)) invalid("column '" + name + "' already exists in '" + source_name + "'");
        entity_idx.push_back(*e);
    }

    Table out;
    out.key = src.key;
    std::vector<Column> base;
    for (std::size_t c = 0; c < src.columns.size(); ++c)
        if (c != *fki) base.push_back(src.columns[c]);
    std::vector<std::pair<std::size_t, std::size_t>> insertions;  // (position, entity column)
    for (std::size_t k = 0; k < absorbed.size(); ++k) insertions.emplace_back(positions[k], entity_idx[k]);

    out.columns = base;
    for (const auto& [pos, ec] : insertions) {
        Column col = entity.columns[ec];
        if (nullable && col.type.kind != TypeExpr::Kind::Option) col.type = TypeExpr::option(col.type);
        out.columns.insert(out.columns.begin() + static_cast<std::ptrdiff_t>(std::min(pos, out.columns.size())), col);
    }

    for (const auto& row : src.rows) {
        const Value& ref = row[*fki];
        const Row* target = nullptr;
        if (!ref.is_none()) {
            target = entity.find_row(unwrap(ref));
            if (!target)
                throw Error(ErrorCode::DanglingReference,
                            source_name + "." + fk + " references missing " + entity_name + " " + describe(unwrap(ref)));
        }
        Row r;
        for (std::size_t c = 0; c < row.size(); ++c)
            if (c != *fki) r.push_back(row[c]);
        for (const auto& [pos, ec] : insertions) {
            Value cell = target ? (*target)[ec] : Value::none();
            if (nullable && target && cell.kind != Value::Kind::Some && cell.kind != Value::Kind::None)
                cell = Value::some(cell);
            r.insert(r.begin() + static_cast<std::ptrdiff_t>(std::min(pos, r.size())), cell);
        }
        out.rows.push_back(std::move(r));
    }

    Database result = db;
    result.tables[source_name] = std::move(out);
    result.tables.erase(entity_name);
    return result;
}

} // namespace

Database absorb_entity(const Database& db, const std::string& table, const std::string& fk, AbsorbMode mode) {
    if (mode == AbsorbMode::Nest)
        throw Error(ErrorCode::Unsupported, "nested absorb is not supported; use join mode");
    const Table& entity = db.table(table);
    std::vector<std::string> sources;
    for (const auto& [name, t] : db.tables) {
        for (const auto& c : t.columns) {
            if (c.ref != table) continue;
            if (c.name == fk)
                sources.push_back(name);
            else
                invalid("'" + name + "." + c.name + "' also references '" + table + "'; absorbing would dangle it");
        }
    }
    if (sources.size() != 1)
        invalid("expected exactly one table referencing '" + table + "' via '" + fk + "', found " +
                std::to_string(sources.size()));
    std::size_t fki = *db.table(sources.front()).column_index(fk);
    std::vector<std::string> absorbed;
    std::vector<std::size_t> positions;
    for (const auto& c : entity.columns) {
        if (c.name == entity.key) continue;
        positions.push_back(fki + absorbed.size());
        absorbed.push_back(c.name);
    }
    return join_back(db, sources.front(), table, fk, absorbed, positions);
}

Database absorb_entity(const Database& db, const Correspondence& corr) {
    for (const auto& [name, t] : db.tables)
        for (const auto& c : t.columns)
            if (c.ref == corr.new_table && !(name == corr.source && c.name == corr.fk))
                invalid("'" + name + "." + c.name + "' also references '" + corr.new_table + "'");
    std::vector<std::string> absorbed;
    for (const auto& c : corr.columns) absorbed.push_back(c.name);
    return join_back(db, corr.source, corr.new_table, corr.fk, absorbed, corr.positions);
}

std::vector<RowRef> referencing_rows(const Database& db, const std::string& table, const Value& id) {
    std::vector<RowRef> out;
    for (const auto& [name, t] : db.tables) {
        std::size_t ki = t.key_index();
        for (const auto& row : t.rows) {
            bool hit = false;
            for (std::size_t c = 0; c < t.columns.size(); ++c)
                if (t.columns[c].ref == table && !row[c].is_none() && unwrap(row[c]) == id) hit = true;
            if (hit) out.push_back({name, row[ki]});
        }
    }
    return out;
}

namespace {

void redirect(Database& db, const std::string& table, const Value& from, const Value& to) {
    for (auto& [name, t] : db.tables) {
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            if (t.columns[c].ref != table) continue;
            for (auto& row : t.rows) {
                Value& cell = row[c];
                if (cell.kind == Value::Kind::Some && cell.items.front() == from)
                    cell.items.front() = to;
                else if (cell == from)
                    cell = to;
            }
        }
    }
}

} // namespace

Database merge_entities(const Database& db, const std::string& table, const std::vector<Value>& ids,
                        const MergeResolution& resolution) {
    if (ids.empty()) invalid("merge needs at least one id");
    Database out = db;
    Table& t = out.table(table);
    for (const auto& id : ids)
        if (!t.find_row(id)) throw Error(ErrorCode::UnknownId, table + " has no row " + describe(id));
    const Value survivor = ids.front();
    {
        Row& keep = *t.find_row(survivor);
        for (const auto& [col, v] : resolution.fields) {
            auto c = t.column_index(col);
            if (!c) throw Error(ErrorCode::UnknownColumn, table + " has no column '" + col + "'");
            if (col == t.key) invalid("cannot overwrite the key column");
            if (!conforms(v, t.columns[*c].type).ok())
                throw Error(ErrorCode::NonConforming, "value for '" + col + "' is not " + describe(t.columns[*c].type));
            keep[*c] = v;
        }
    }
    std::size_t ki = t.key_index();
    for (std::size_t k = 1; k < ids.size(); ++k) {
        if (ids[k] == survivor) continue;
        std::erase_if(t.rows, [&](const Row& r) { return r[ki] == ids[k]; });
        redirect(out, table, ids[k], survivor);
    }
    return out;
}

SplitResult split_entity(const Database& db, const std::string& table, const Value& source_id,
                         const std::optional<Reassignment>& reassignment) {
    const Table& t = db.table(table);
    const Row* src = t.find_row(source_id);
    if (!src) throw Error(ErrorCode::UnknownId, table + " has no row " + describe(source_id));
    if (!reassignment)
        throw Error(ErrorCode::NotInteractive, "split of " + table + " " + describe(source_id) +
                                                   " needs guidance: which references move to the new row?");
    auto refs = referencing_rows(db, table, source_id);
    for (const auto& [ref, side] : *reassignment)
        if (std::find(refs.begin(), refs.end(), ref) == refs.end())
            invalid(ref.table + " row " + describe(ref.key) + " does not reference " + table + " " + describe(source_id));

    Database out = db;
    Table& target = out.table(table);
    Value clone_key = next_key(target);
    Row clone = *src;
    clone[target.key_index()] = clone_key;
    target.rows.push_back(std::move(clone));

    for (const auto& [ref, side] : *reassignment) {
        if (side != SplitSide::New) continue;
        Table& rt = out.table(ref.table);
        Row& row = *rt.find_row(ref.key);
        for (std::size_t c = 0; c < rt.columns.size(); ++c) {
            if (rt.columns[c].ref != table) continue;
            if (row[c].kind == Value::Kind::Some && row[c].items.front() == source_id)
                row[c].items.front() = clone_key;
            else if (row[c] == source_id)
                row[c] = clone_key;
        }
    }
    return {std::move(out), clone_key};
}

Json to_json(const Correspondence& c) {
    Json cols = Json::array();
    for (const auto& col : c.columns) cols.push_back(to_json(col));
    Json assignment = Json::array();
    for (const auto& [tuple, key] : c.assignment) {
        Json t = Json::array();
        for (const auto& cell : tuple) t.push_back(cell_to_json(cell));
        assignment.push_back(Json{{"tuple", std::move(t)}, {"key", key.i}});
    }
    return Json{{"op", c.kind == Correspondence::Kind::Extract ? "extract" : "absorb"},
                {"source", c.source},
                {"new_table", c.new_table},
                {"key", c.key},
                {"fk", c.fk},
                {"columns", std::move(cols)},
                {"positions", c.positions},
                {"fk_position", c.fk_position},
                {"assignment", std::move(assignment)}};
}

Correspondence correspondence_from_json(const Json& j) {
    Correspondence c;
    std::string op = require_string(j, "op");
    if (op == "extract")
        c.kind = Correspondence::Kind::Extract;
    else if (op == "absorb")
        c.kind = Correspondence::Kind::Absorb;
    else
        throw Error(ErrorCode::InvalidFormat, "unknown correspondence op '" + op + "'");
    c.source = require_string(j, "source");
    c.new_table = require_string(j, "new_table");
    c.key = require_string(j, "key");
    c.fk = require_string(j, "fk");
    for (const auto& col : require(j, "columns")) c.columns.push_back(column_from_json(col));
    c.positions = require(j, "positions").get<std::vector<std::size_t>>();
    if (c.positions.size() != c.columns.size())
        throw Error(ErrorCode::InvalidFormat, "positions must match columns");
    c.fk_position = j.value("fk_position", std::size_t{0});
    for (const auto& a : require(j, "assignment")) {
        Row tuple;
        const Json& t = require(a, "tuple");
        if (t.size() != c.columns.size()) throw Error(ErrorCode::InvalidFormat, "assignment tuple arity mismatch");
        for (std::size_t k = 0; k < t.size(); ++k) tuple.push_back(cell_from_json(t[k], c.columns[k].type));
        c.assignment.emplace_back(std::move(tuple), Value::id(require(a, "key").get<std::int64_t>()));
    }
    return c;
}

} // namespace schemakit
