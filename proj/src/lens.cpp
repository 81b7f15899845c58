// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
#include "schemakit/lens.h"

#include <algorithm>

#include "schemakit/codec.h"
#include "schemakit/error.h"

namespace schemakit {

std::string_view to_string(WritePolicy p) {
    switch (p) {
    case WritePolicy::OnlyNew: return "only-new";
    case WritePolicy::ReplaceHead: return "replace-head";
    case WritePolicy::Prepend: return "prepend";
    }
    return "?";
}

WritePolicy write_policy_from_string(std::string_view s) {
    for (auto p : {WritePolicy::OnlyNew, WritePolicy::ReplaceHead, WritePolicy::Prepend})
        if (to_string(p) == s) return p;
    throw Error(ErrorCode::UsageError, "unknown write policy '" + std::string(s) + "'",
                Json{{"choices", {"only-new", "replace-head", "prepend"}}});
}

// ── construction ────────────────────────────────────────────────────────

Lens lens_for(const Correspondence& corr) {
    if (corr.kind != Correspondence::Kind::Extract)
        throw Error(ErrorCode::Unsupported, "lenses are derived from extract correspondences only");
    Lens l;
    l.kind = Lens::Kind::ExtractEntity;
    l.correspondence = corr;
    return l;
}

Lens lens_for(const TypeExpr& old_type, const std::vector<TypeEdit>& edits) {
    const edit::ChangeFieldType* change = nullptr;
    const edit::RenameField* rename = nullptr;
    bool rename_first = false;
    for (const auto& e : edits) {
        if (auto c = std::get_if<edit::ChangeFieldType>(&e); c && !change) {
            change = c;
        } else if (auto r = std::get_if<edit::RenameField>(&e); r && !rename) {
            rename = r;
            rename_first = change == nullptr;
        } else {
            throw Error(ErrorCode::Unsupported, "no lens for this evolution", Json{{"edit", to_json(e)}});
        }
    }
    if (!change)
        throw Error(ErrorCode::Unsupported, "no lens for a change without a type change; migrate handles renames");
    if (change->type.kind != TypeExpr::Kind::List)
        throw Error(ErrorCode::Unsupported, "only scalar-to-list type changes have a lens");
    MultiplicityLens m;
    m.path = change->path;
    m.scalar = m.list = change->label;
    if (rename) {
        bool linked = rename->path == change->path &&
                      (rename_first ? rename->to == change->label : rename->from == change->label);
        if (!linked) throw Error(ErrorCode::Unsupported, "rename and type change address different fields");
        m.scalar = rename->from;
        m.list = rename->to;
    }
    const TypeExpr& rec = resolve_path(old_type, m.path);
    const Field* f = rec.kind == TypeExpr::Kind::Record ? rec.find_field(m.scalar) : nullptr;
    if (!f) throw Error(ErrorCode::PathNotFound, "no field '" + m.scalar + "' at " + format_path(m.path));
    const TypeExpr& elem = change->type.element();
    if (f->type == elem)
        m.nullable = false;
    else if (f->type.kind == TypeExpr::Kind::Option && f->type.element() == elem)
        m.nullable = true;
    else
        throw Error(ErrorCode::Unsupported, "list element type differs from the scalar field type");
    m.old_type = old_type;
    m.new_type = apply_type_edits(old_type, edits);
    Lens l;
    l.kind = Lens::Kind::Multiplicity;
    l.multiplicity = std::move(m);
    return l;
}

namespace {

const MultiplicityLens& multiplicity(const Lens& l) {
    if (l.kind != Lens::Kind::Multiplicity) throw Error(ErrorCode::Unsupported, "this lens works on databases");
    return l.multiplicity;
}

const Correspondence& extraction(const Lens& l) {
    if (l.kind != Lens::Kind::ExtractEntity) throw Error(ErrorCode::Unsupported, "this lens works on values");
    return l.correspondence;
}

template <typename V, typename F>
void each_record(V& v, const TypePath& path, std::size_t k, F& f) {
    if (k == path.size()) {
        f(v);
        return;
    }
    const PathStep& s = path[k];
    switch (s.kind) {
    case PathStep::Kind::Field:
        if (auto* c = v.get(s.label)) each_record(*c, path, k + 1, f);
        break;
    case PathStep::Kind::Elem:
        for (auto& x : v.items) each_record(x, path, k + 1, f);
        break;
    case PathStep::Kind::Some:
        if (v.kind == Value::Kind::Some) each_record(v.items.front(), path, k + 1, f);
        break;
    case PathStep::Kind::Payload:
        if (v.kind == Value::Kind::Variant && v.s == s.label && s.index < v.items.size())
            each_record(v.items[s.index], path, k + 1, f);
        break;
    }
}

template <typename V>
std::vector<V*> records(V& v, const TypePath& path) {
    std::vector<V*> out;
    auto collect = [&](V& r) { out.push_back(&r); };
    each_record(v, path, 0, collect);
    return out;
}

void require_conforming(const Value& v, const TypeExpr& t, const char* side) {
    auto report = conforms(v, t);
    if (report.ok()) return;
    Json vs = Json::array();
    for (const auto& x : report.violations) vs.push_back({{"path", x.path}, {"message", x.message}});
    throw Error(ErrorCode::NonConforming, std::string(side) + " data does not fit its schema", Json{{"violations", vs}});
}

std::string record_where(const MultiplicityLens& m, std::size_t i, const std::string& field) {
    return format_path(m.path) + "#" + std::to_string(i) + "." + field;
}

Value entry_value(const Value& rec, const std::string& label) {
    const Value* v = rec.get(label);
    if (!v) throw Error(ErrorCode::PathNotFound, "record has no field '" + label + "'");
    return *v;
}

void replace_entry(Value& rec, const std::string& from, const std::string& to, Value v) {
    for (auto& e : rec.entries)
        if (e.label == from) {
            e.label = to;
            e.value = std::move(v);
            return;
        }
}

Value scalar_of(const MultiplicityLens& m, const std::vector<Value>& list) {
    if (list.empty()) {
        if (!m.nullable)
            throw Error(ErrorCode::NonConforming, "an empty list has no reading as the required field '" + m.scalar + "'");
        return Value::none();
    }
    return m.nullable ? Value::some(list.front()) : list.front();
}

std::vector<Value> list_of(const MultiplicityLens& m, const Value& scalar) {
    if (!m.nullable) return {scalar};
    if (scalar.is_none()) return {};
    return {scalar.kind == Value::Kind::Some ? scalar.items.front() : scalar};
}

} // namespace

// ── values ──────────────────────────────────────────────────────────────

Value fwd(const Lens& lens, const Value& old_data) {
    const MultiplicityLens& m = multiplicity(lens);
    require_conforming(old_data, m.old_type, "old-schema");
    Value out = old_data;
    for (Value* rec : records(out, m.path)) {
        Value scalar = entry_value(*rec, m.scalar);
        replace_entry(*rec, m.scalar, m.list, Value::list(list_of(m, scalar)));
    }
    return out;
}

Backward<Value> bwd(const Lens& lens, const Value& new_data) {
    const MultiplicityLens& m = multiplicity(lens);
    require_conforming(new_data, m.new_type, "new-schema");
    Backward<Value> out{new_data, {}};
    auto recs = records(out.data, m.path);
    for (std::size_t i = 0; i < recs.size(); ++i) {
        std::vector<Value> list = entry_value(*recs[i], m.list).items;
        if (list.size() > 1) {
            Json tail = Json::array();
            for (std::size_t k = 1; k < list.size(); ++k) tail.push_back(to_json(list[k]));
            out.drops.push_back({record_where(m, i, m.list), tail, "only the first element fits '" + m.scalar + "'"});
        }
        replace_entry(*recs[i], m.list, m.scalar, scalar_of(m, list));
    }
    return out;
}

std::vector<Value> putback(const Value& write, const std::vector<Value>& current, std::optional<WritePolicy> policy) {
    if (write.is_none()) return {};
    const Value& w = write.kind == Value::Kind::Some ? write.items.front() : write;
    if (current.empty()) return {w};
    if (current.front() == w) return current;
    if (!policy) {
        Json cur = Json::array();
        for (const auto& v : current) cur.push_back(to_json(v));
        throw Error(ErrorCode::PolicyRequired, "writing a new scalar over a list needs a write policy",
                    Json{{"write", to_json(w)}, {"current", cur}, {"choices", {"only-new", "replace-head", "prepend"}}});
    }
    std::vector<Value> out{w};
    switch (*policy) {
    case WritePolicy::OnlyNew: break;
    case WritePolicy::ReplaceHead: out.insert(out.end(), current.begin() + 1, current.end()); break;
    case WritePolicy::Prepend: out.insert(out.end(), current.begin(), current.end()); break;
    }
    return out;
}

Value put(const Lens& lens, const Value& old_written, const Value& new_current, std::optional<WritePolicy> policy) {
    const MultiplicityLens& m = multiplicity(lens);
    require_conforming(new_current, m.new_type, "new-schema");
    Value out = fwd(lens, old_written);
    auto written = records(old_written, m.path);
    auto current = records(new_current, m.path);
    auto result = records(out, m.path);
    for (std::size_t i = 0; i < std::min(written.size(), current.size()); ++i) {
        auto list = putback(entry_value(*written[i], m.scalar), entry_value(*current[i], m.list).items, policy);
        replace_entry(*result[i], m.list, m.list, Value::list(std::move(list)));
    }
    return out;
}

// ── databases ───────────────────────────────────────────────────────────

namespace {

ExtractSpec spec_of(const Correspondence& c) {
    ExtractSpec s{c.source, {}, c.new_table, c.key, c.fk};
    for (const auto& col : c.columns) s.columns.push_back(col.name);
    return s;
}

Json row_json(const Table& t, const Row& row) {
    Json j = Json::object();
    for (std::size_t c = 0; c < t.columns.size(); ++c) j[t.columns[c].name] = cell_to_json(row[c]);
    return j;
}

std::string row_where(const std::string& table, const Value& key) { return table + "[" + describe(key) + "]"; }

Value bare(const Value& v) { return v.kind == Value::Kind::Some ? v.items.front() : v; }

bool references(const Row& row, std::size_t fki, const Value& key) {
    return !row[fki].is_none() && bare(row[fki]) == key;
}

std::size_t reference_count(const Database& db, const Correspondence& c, const Value& key) {
    const Table& src = db.table(c.source);
    std::size_t fki = *src.column_index(c.fk);
    return static_cast<std::size_t>(
        std::count_if(src.rows.begin(), src.rows.end(), [&](const Row& r) { return references(r, fki, key); }));
}

} // namespace

Database fwd(const Lens& lens, const Database& old_data) {
    const Correspondence& c = extraction(lens);
    if (!old_data.has_table(c.source) || old_data.has_table(c.new_table))
        throw Error(ErrorCode::NonConforming, "old-schema database must have '" + c.source + "' and no '" +
                                                  c.new_table + "'");
    const Table& src = old_data.table(c.source);
    for (const auto& col : c.columns) {
        auto i = src.column_index(col.name);
        if (!i || !(src.columns[*i] == col))
            throw Error(ErrorCode::NonConforming, "column '" + col.name + "' of '" + c.source + "' does not match");
    }
    return extract_entity(old_data, spec_of(c), c).db;
}

Backward<Database> bwd(const Lens& lens, const Database& new_data) {
    const Correspondence& c = extraction(lens);
    if (!new_data.has_table(c.source) || !new_data.has_table(c.new_table))
        throw Error(ErrorCode::NonConforming, "new-schema database must have '" + c.source + "' and '" +
                                                  c.new_table + "'");
    Backward<Database> out;
    const Table& entity = new_data.table(c.new_table);
    std::size_t ki = entity.key_index();
    for (const auto& row : entity.rows)
        if (reference_count(new_data, c, row[ki]) == 0)
            out.drops.push_back({row_where(c.new_table, row[ki]), row_json(entity, row),
                                 "no row of '" + c.source + "' references it"});
    for (std::size_t col = 0; col < entity.columns.size(); ++col) {
        const std::string& name = entity.columns[col].name;
        if (col == ki || c.extracts(name)) continue;
        Json values = Json::array();
        for (const auto& row : entity.rows) values.push_back(cell_to_json(row[col]));
        out.drops.push_back({c.new_table + "." + name, values, "column has no place in the old schema"});
    }
    out.data = absorb_entity(new_data, c);
    return out;
}

// ── data edits ──────────────────────────────────────────────────────────

std::string_view to_string(DataEdit::Kind k) {
    switch (k) {
    case DataEdit::Kind::InsertRow: return "insert_row";
    case DataEdit::Kind::SetCell: return "set_cell";
    case DataEdit::Kind::DeleteRow: return "delete_row";
    case DataEdit::Kind::SetField: return "set_field";
    }
    return "?";
}

Json to_json(const DataEdit& e) {
    Json j{{"op", std::string(to_string(e.kind))}};
    switch (e.kind) {
    case DataEdit::Kind::InsertRow: {
        j["table"] = e.table;
        Json cells = Json::object();
        for (const auto& [name, v] : e.cells) cells[name] = to_json(v);
        j["cells"] = cells;
        break;
    }
    case DataEdit::Kind::SetCell:
        j["table"] = e.table;
        j["key"] = to_json(e.key);
        j["column"] = e.column;
        j["value"] = to_json(e.value);
        break;
    case DataEdit::Kind::DeleteRow:
        j["table"] = e.table;
        j["key"] = to_json(e.key);
        break;
    case DataEdit::Kind::SetField:
        j["item"] = e.item;
        j["field"] = e.column;
        j["value"] = to_json(e.value);
        break;
    }
    return j;
}

DataEdit data_edit_from_json(const Json& j) {
    DataEdit e;
    std::string op = require_string(j, "op");
    if (op == "insert_row") {
        e.kind = DataEdit::Kind::InsertRow;
        e.table = require_string(j, "table");
        for (const auto& [name, v] : require(j, "cells").items()) e.cells.emplace_back(name, value_from_json(v));
    } else if (op == "set_cell") {
        e.kind = DataEdit::Kind::SetCell;
        e.table = require_string(j, "table");
        e.key = value_from_json(require(j, "key"));
        e.column = require_string(j, "column");
        e.value = value_from_json(require(j, "value"));
    } else if (op == "delete_row") {
        e.kind = DataEdit::Kind::DeleteRow;
        e.table = require_string(j, "table");
        e.key = value_from_json(require(j, "key"));
    } else if (op == "set_field") {
        e.kind = DataEdit::Kind::SetField;
        e.item = require(j, "item").get<std::size_t>();
        e.column = require_string(j, "field");
        e.value = value_from_json(require(j, "value"));
    } else {
        throw Error(ErrorCode::InvalidFormat, "unknown data edit '" + op + "'");
    }
    return e;
}

Json to_json(const Drop& d) { return Json{{"where", d.where}, {"value", d.value}, {"reason", d.reason}}; }

namespace {

Table& table_of(Database& db, const std::string& name) {
    if (!db.has_table(name)) throw Error(ErrorCode::UnknownTable, "no table '" + name + "'", Json{{"table", name}});
    return db.table(name);
}

std::size_t column_of(const Table& t, const std::string& table, const std::string& name) {
    auto i = t.column_index(name);
    if (!i)
        throw Error(ErrorCode::UnknownColumn, "no column '" + name + "' in '" + table + "'",
                    Json{{"table", table}, {"column", name}});
    return *i;
}

void check_cell(const Column& col, const Value& v) {
    if (!conforms(v, col.type).ok())
        throw Error(ErrorCode::NonConforming, describe(v) + " does not fit column '" + col.name + "'",
                    Json{{"column", col.name}, {"value", to_json(v)}});
}

Row& row_of(Table& t, const std::string& table, const Value& key) {
    Row* r = t.find_row(key);
    if (!r) throw Error(ErrorCode::UnknownId, "no row " + describe(key) + " in '" + table + "'", Json{{"table", table}});
    return *r;
}

} // namespace

Database apply_data_edit(Database db, const DataEdit& e) {
    switch (e.kind) {
    case DataEdit::Kind::InsertRow: {
        Table& t = table_of(db, e.table);
        for (const auto& [name, v] : e.cells) column_of(t, e.table, name);
        Row row;
        for (const auto& col : t.columns) {
            auto it = std::find_if(e.cells.begin(), e.cells.end(), [&](const auto& c) { return c.first == col.name; });
            if (it == e.cells.end()) {
                if (col.type.kind != TypeExpr::Kind::Option)
                    throw Error(ErrorCode::SpecInvalid, "insert into '" + e.table + "' misses '" + col.name + "'");
                row.push_back(Value::none());
            } else {
                check_cell(col, it->second);
                row.push_back(it->second);
            }
        }
        if (t.find_row(row[t.key_index()]))
            throw Error(ErrorCode::SpecInvalid, "duplicate key " + describe(row[t.key_index()]) + " in '" + e.table + "'");
        t.rows.push_back(std::move(row));
        break;
    }
    case DataEdit::Kind::SetCell: {
        Table& t = table_of(db, e.table);
        std::size_t c = column_of(t, e.table, e.column);
        if (c == t.key_index()) throw Error(ErrorCode::SpecInvalid, "keys cannot be edited");
        check_cell(t.columns[c], e.value);
        row_of(t, e.table, e.key)[c] = e.value;
        break;
    }
    case DataEdit::Kind::DeleteRow: {
        Table& t = table_of(db, e.table);
        Row& r = row_of(t, e.table, e.key);
        t.rows.erase(t.rows.begin() + (&r - t.rows.data()));
        break;
    }
    case DataEdit::Kind::SetField: throw Error(ErrorCode::Unsupported, "set_field applies to values, not databases");
    }
    return db;
}

Value apply_data_edit(const TypePath& path, Value v, const DataEdit& e) {
    if (e.kind != DataEdit::Kind::SetField) throw Error(ErrorCode::Unsupported, "row edits apply to databases");
    auto recs = records(v, path);
    if (e.item >= recs.size())
        throw Error(ErrorCode::UnknownId, "no record " + std::to_string(e.item) + " at " + format_path(path));
    Value* field = recs[e.item]->get(e.column);
    if (!field) throw Error(ErrorCode::PathNotFound, "record has no field '" + e.column + "'");
    *field = e.value;
    return v;
}

// ── transport ───────────────────────────────────────────────────────────

namespace {

[[noreturn]] void untransportable(const DataEdit& e, const std::string& why) {
    throw Error(ErrorCode::Untransportable, why, Json{{"edit", to_json(e)}});
}

DataEdit set_cell(const std::string& table, const Value& key, const std::string& column, const Value& v) {
    DataEdit e;
    e.kind = DataEdit::Kind::SetCell;
    e.table = table;
    e.key = key;
    e.column = column;
    e.value = v;
    return e;
}

/// The entity row carrying `attrs`, if any.
std::optional<Value> entity_with(const Table& entity, const Correspondence& c, const std::vector<Value>& attrs) {
    for (const auto& row : entity.rows) {
        bool same = true;
        for (std::size_t k = 0; k < c.columns.size() && same; ++k)
            same = row[*entity.column_index(c.columns[k].name)] == attrs[k];
        if (same) return row[entity.key_index()];
    }
    return std::nullopt;
}

Transported forward(const DataEdit& e, const Correspondence& c, const Database& ns) {
    Transported out;
    if (e.table == c.new_table) untransportable(e, "'" + c.new_table + "' does not exist in the old schema");
    if (!ns.has_table(e.table)) untransportable(e, "no table '" + e.table + "' in the new schema");
    if (e.table != c.source) {
        out.edits.push_back(e);
        return out;
    }
    const Table& src = ns.table(c.source);
    const Table& entity = ns.table(c.new_table);
    switch (e.kind) {
    case DataEdit::Kind::InsertRow: {
        std::vector<Value> attrs;
        for (const auto& col : c.columns) {
            auto it = std::find_if(e.cells.begin(), e.cells.end(), [&](const auto& x) { return x.first == col.name; });
            attrs.push_back(it == e.cells.end() ? Value::none() : it->second);
        }
        std::optional<Value> key = entity_with(entity, c, attrs);
        if (!key) {
            key = next_key(entity);
            DataEdit ins;
            ins.kind = DataEdit::Kind::InsertRow;
            ins.table = c.new_table;
            ins.cells.emplace_back(c.key, *key);
            for (std::size_t k = 0; k < c.columns.size(); ++k) ins.cells.emplace_back(c.columns[k].name, attrs[k]);
            out.edits.push_back(std::move(ins));
        }
        DataEdit row = e;
        row.cells.clear();
        for (const auto& cell : e.cells)
            if (!c.extracts(cell.first)) row.cells.push_back(cell);
        row.cells.emplace_back(c.fk, *key);
        out.edits.push_back(std::move(row));
        break;
    }
    case DataEdit::Kind::SetCell: {
        if (!c.extracts(e.column)) {
            out.edits.push_back(e);
            break;
        }
        const Row* r = src.find_row(e.key);
        if (!r) untransportable(e, "no row " + describe(e.key) + " in '" + c.source + "'");
        Value ref = (*r)[*src.column_index(c.fk)];
        if (ref.is_none()) untransportable(e, "row " + describe(e.key) + " has no '" + c.new_table + "' entry");
        out.edits.push_back(set_cell(c.new_table, bare(ref), e.column, e.value));
        break;
    }
    case DataEdit::Kind::DeleteRow: out.edits.push_back(e); break;
    case DataEdit::Kind::SetField: untransportable(e, "set_field does not address a database");
    }
    return out;
}

Transported backward(const DataEdit& e, const Correspondence& c, const Database& ns) {
    Transported out;
    if (!ns.has_table(e.table)) untransportable(e, "no table '" + e.table + "' in the new schema");
    if (e.kind == DataEdit::Kind::SetField) untransportable(e, "set_field does not address a database");
    const Table& src = ns.table(c.source);
    const Table& entity = ns.table(c.new_table);
    std::size_t fki = *src.column_index(c.fk);
    auto entity_row = [&](const Value& key) -> const Row& {
        const Row* r = entity.find_row(bare(key));
        if (!r) untransportable(e, "'" + c.new_table + "' has no row " + describe(key));
        return *r;
    };
    auto orphaned = [&](const Value& key) {
        if (reference_count(ns, c, key) == 1)
            out.drops.push_back({row_where(c.new_table, key), row_json(entity, entity_row(key)),
                                 "no longer referenced from '" + c.source + "'"});
    };

    if (e.table == c.new_table) {
        switch (e.kind) {
        case DataEdit::Kind::InsertRow: {
            Json cells = Json::object();
            for (const auto& [name, v] : e.cells) cells[name] = cell_to_json(v);
            auto key = std::find_if(e.cells.begin(), e.cells.end(), [&](const auto& x) { return x.first == c.key; });
            out.drops.push_back({row_where(c.new_table, key == e.cells.end() ? Value::none() : key->second), cells,
                                 "shows in the old schema only once a row of '" + c.source + "' references it"});
            break;
        }
        case DataEdit::Kind::SetCell: {
            if (e.column == c.key) untransportable(e, "keys cannot be edited");
            entity_row(e.key);
            if (!c.extracts(e.column)) {
                out.drops.push_back({row_where(c.new_table, e.key) + "." + e.column, to_json(e.value),
                                     "column has no place in the old schema"});
                break;
            }
            for (const auto& row : src.rows)
                if (references(row, fki, e.key))
                    out.edits.push_back(set_cell(c.source, row[src.key_index()], e.column, e.value));
            if (out.edits.empty())
                out.drops.push_back({row_where(c.new_table, e.key) + "." + e.column, to_json(e.value),
                                     "no row of '" + c.source + "' references it"});
            break;
        }
        default:
            if (reference_count(ns, c, e.key) > 0) untransportable(e, "the row is still referenced");
            break;
        }
        return out;
    }
    if (e.table != c.source) {
        out.edits.push_back(e);
        return out;
    }
    switch (e.kind) {
    case DataEdit::Kind::InsertRow: {
        DataEdit row = e;
        row.cells.clear();
        std::optional<Value> ref;
        for (const auto& cell : e.cells) {
            if (cell.first == c.fk)
                ref = cell.second;
            else
                row.cells.push_back(cell);
        }
        if (ref && !ref->is_none()) {
            const Row& target = entity_row(*ref);
            for (const auto& col : c.columns)
                row.cells.emplace_back(col.name, target[*entity.column_index(col.name)]);
        }
        out.edits.push_back(std::move(row));
        break;
    }
    case DataEdit::Kind::SetCell: {
        if (e.column != c.fk) {
            out.edits.push_back(e);
            break;
        }
        const Row* r = src.find_row(e.key);
        if (!r) untransportable(e, "no row " + describe(e.key) + " in '" + c.source + "'");
        const Row& target = entity_row(e.value);
        for (const auto& col : c.columns)
            out.edits.push_back(set_cell(c.source, e.key, col.name, target[*entity.column_index(col.name)]));
        if (!(*r)[fki].is_none() && bare((*r)[fki]) != bare(e.value)) orphaned(bare((*r)[fki]));
        break;
    }
    case DataEdit::Kind::DeleteRow: {
        const Row* r = src.find_row(e.key);
        if (!r) untransportable(e, "no row " + describe(e.key) + " in '" + c.source + "'");
        out.edits.push_back(e);
        if (!(*r)[fki].is_none()) orphaned(bare((*r)[fki]));
        break;
    }
    default: break;
    }
    return out;
}

} // namespace

Transported transport_edit(const DataEdit& e, const Lens& lens, Direction dir, const Database& new_side) {
    const Correspondence& c = extraction(lens);
    return dir == Direction::Forward ? forward(e, c, new_side) : backward(e, c, new_side);
}

Transported transport_edit(const DataEdit& e, const Lens& lens, Direction dir, const Value& new_side,
                           std::optional<WritePolicy> policy) {
    const MultiplicityLens& m = multiplicity(lens);
    if (e.kind != DataEdit::Kind::SetField) untransportable(e, "row edits do not address a value");
    auto recs = records(new_side, m.path);
    if (e.item >= recs.size()) untransportable(e, "no record " + std::to_string(e.item) + " at " + format_path(m.path));
    const Value& rec = *recs[e.item];
    Transported out;
    DataEdit t = e;
    const std::string& mine = dir == Direction::Forward ? m.scalar : m.list;
    const std::string& theirs = dir == Direction::Forward ? m.list : m.scalar;
    if (e.column == theirs && theirs != mine) untransportable(e, "'" + e.column + "' does not exist on this side");
    if (e.column != mine) {
        if (!rec.get(e.column)) untransportable(e, "no field '" + e.column + "' on either side");
        out.edits.push_back(e);
        return out;
    }
    t.column = theirs;
    if (dir == Direction::Forward) {
        t.value = Value::list(putback(e.value, entry_value(rec, m.list).items, policy));
    } else {
        const auto& list = e.value.items;
        if (list.empty() && !m.nullable) untransportable(e, "an empty list has no scalar reading");
        t.value = scalar_of(m, list);
        if (list.size() > 1) {
            Json tail = Json::array();
            for (std::size_t k = 1; k < list.size(); ++k) tail.push_back(to_json(list[k]));
            out.drops.push_back({record_where(m, e.item, m.list), tail, "only the first element fits '" + m.scalar + "'"});
        }
    }
    out.edits.push_back(std::move(t));
    return out;
}

// ── JSON ────────────────────────────────────────────────────────────────

Json to_json(const Lens& lens) {
    if (lens.kind == Lens::Kind::ExtractEntity)
        return Json{{"kind", "extract"}, {"correspondence", to_json(lens.correspondence)}};
    const MultiplicityLens& m = lens.multiplicity;
    return Json{{"kind", "multiplicity"},       {"path", format_path(m.path)},   {"scalar", m.scalar},
                {"list", m.list},               {"nullable", m.nullable},        {"old_type", to_json(m.old_type)},
                {"new_type", to_json(m.new_type)}};
}

Lens lens_from_json(const Json& j) {
    std::string kind = require_string(j, "kind");
    if (kind == "extract") return lens_for(correspondence_from_json(require(j, "correspondence")));
    if (kind != "multiplicity") throw Error(ErrorCode::InvalidFormat, "unknown lens kind '" + kind + "'");
    Lens l;
    l.kind = Lens::Kind::Multiplicity;
    MultiplicityLens& m = l.multiplicity;
    m.path = parse_path(require_string(j, "path"));
    m.scalar = require_string(j, "scalar");
    m.list = require_string(j, "list");
    m.nullable = require(j, "nullable").get<bool>();
    m.old_type = type_from_json(require(j, "old_type"));
    m.new_type = type_from_json(require(j, "new_type"));
    return l;
}

Lens lens_for_record(const Json& j) {
    if (j.contains("kind")) return lens_from_json(j);
    if (j.contains("correspondence")) return lens_for(correspondence_from_json(j.at("correspondence")));
    std::vector<TypeEdit> edits;
    for (const auto& e : require(j, "edits")) edits.push_back(type_edit_from_json(e));
    return lens_for(type_from_json(require(j, "old_type")), edits);
}

} // namespace schemakit
