// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Generators and single-case checks for the lens properties, shared by the
// unit tests and the acceptance binary.
#pragma once

#include "schemakit/lens.h"
#include "support.h"

namespace schemakit::testing {

inline Lens todo_lens() { return lens_for_record(data_json("todo_assignee_lens.json")); }

inline Lens orders_lens() {
    Database flat = database_from_json(data_json("orders_flat.json"));
    const Json s = data_json("orders_extract.json");
    ExtractSpec spec{s["source"], s["columns"].get<std::vector<std::string>>(), s["new_table"], s["key"], s["fk"]};
    return lens_for(extract_entity(flat, spec).correspondence);
}

inline Value todo_item(const std::string& title, Value person, const std::string& field = "assignee") {
    return Value::record({{"title", Value::str(title)}, {field, std::move(person)}});
}

inline Value todo(std::vector<Value> items) { return Value::record({{"items", Value::list(std::move(items))}}); }

inline std::vector<std::string> people() { return {"A", "B", "C", "Ada"}; }

inline std::vector<Value> people_list(Gen& g) {
    std::vector<Value> out;
    int n = g.range(0, 4);
    for (int i = 0; i < n; ++i) out.push_back(Value::str(g.pick(people())));
    return out;
}

inline Value old_todo(Gen& g) {
    std::vector<Value> items;
    int n = g.range(0, 4);
    for (int i = 0; i < n; ++i)
        items.push_back(todo_item("t" + std::to_string(i),
                                  g.chance(0.35) ? Value::none() : Value::some(Value::str(g.pick(people())))));
    return todo(std::move(items));
}

inline WritePolicy any_policy(Gen& g) {
    static const std::vector<WritePolicy> all{WritePolicy::OnlyNew, WritePolicy::ReplaceHead, WritePolicy::Prepend};
    return g.pick(all);
}

struct LawCase {
    bool put_get = false;
    bool get_put = false;
};

/// One (list, write, policy) case through the todo lens.
inline LawCase lens_law_case(Gen& g, const Lens& lens) {
    Value current = todo({todo_item("t", Value::list(people_list(g)), "assignees")});
    Value write = g.chance(0.2) ? Value::none() : Value::some(Value::str(g.pick(people())));
    Value written = todo({todo_item("t", write)});
    WritePolicy p = any_policy(g);
    LawCase out;
    out.put_get = bwd(lens, put(lens, written, current, p)).data == written;
    out.get_put = put(lens, bwd(lens, current).data, current, p) == current;
    return out;
}

// ── extract-lens transport ──────────────────────────────────────────────

struct TransportCase {
    bool agrees = false;
    bool silent_loss = false;
    std::string edit;
};

inline Database apply_all(Database db, const std::vector<DataEdit>& edits) {
    for (const auto& e : edits) db = apply_data_edit(std::move(db), e);
    return db;
}

inline DataEdit insert_row(const Table& t, const std::string& name, Gen& g,
                           const std::optional<std::pair<std::string, Value>>& fixed = std::nullopt) {
    DataEdit e;
    e.kind = DataEdit::Kind::InsertRow;
    e.table = name;
    for (const auto& col : t.columns) {
        if (col.name == t.key)
            e.cells.emplace_back(col.name, next_key(t));
        else if (fixed && fixed->first == col.name)
            e.cells.push_back(*fixed);
        else
            e.cells.emplace_back(col.name, g.cell_for(col));
    }
    return e;
}

inline const Row& any_row(Gen& g, const Table& t) {
    return t.rows[static_cast<std::size_t>(g.range(0, static_cast<int>(t.rows.size()) - 1))];
}

inline DataEdit edit_cell(const std::string& table, Value key, const std::string& column, Value v) {
    DataEdit e;
    e.kind = DataEdit::Kind::SetCell;
    e.table = table;
    e.key = std::move(key);
    e.column = column;
    e.value = std::move(v);
    return e;
}

inline DataEdit delete_row(const std::string& table, Value key) {
    DataEdit e;
    e.kind = DataEdit::Kind::DeleteRow;
    e.table = table;
    e.key = std::move(key);
    return e;
}

inline DataEdit new_side_edit(Gen& g, const Database& ns, const Correspondence& c) {
    const Table& src = ns.table(c.source);
    const Table& ent = ns.table(c.new_table);
    std::size_t eki = ent.key_index();
    int k = g.range(0, 6);
    if (ent.rows.empty()) k = 5;
    if (src.rows.empty() && k >= 2 && k <= 4) k = 0;
    switch (k) {
    case 0: return insert_row(src, c.source, g, std::pair{c.fk, any_row(g, ent)[eki]});
    case 1: {
        const Column& col = g.pick(c.columns);
        return edit_cell(c.new_table, any_row(g, ent)[eki], col.name, g.cell_for(col));
    }
    case 2: {
        const Column& col = src.columns[static_cast<std::size_t>(g.range(1, static_cast<int>(src.columns.size()) - 1))];
        if (col.name == c.fk) break;
        return edit_cell(c.source, any_row(g, src)[src.key_index()], col.name, g.cell_for(col));
    }
    case 3: return edit_cell(c.source, any_row(g, src)[src.key_index()], c.fk, any_row(g, ent)[eki]);
    case 4: return delete_row(c.source, any_row(g, src)[src.key_index()]);
    case 6: {
        auto note = ent.column_index("note");
        if (!note) break;
        return edit_cell(c.new_table, any_row(g, ent)[eki], "note", Value::some(Value::str("n")));
    }
    default: break;
    }
    for (const auto& row : ent.rows) {
        bool used = std::any_of(src.rows.begin(), src.rows.end(),
                                [&](const Row& r) { return r[*src.column_index(c.fk)] == row[eki]; });
        if (!used && g.chance(0.5)) return delete_row(c.new_table, row[eki]);
    }
    return insert_row(ent, c.new_table, g);
}

inline DataEdit old_side_edit(Gen& g, const Database& flat, const Correspondence& c) {
    const Table& src = flat.table(c.source);
    int k = src.rows.empty() ? 0 : g.range(0, 3);
    if (k == 0) return insert_row(src, c.source, g);
    const Value& key = any_row(g, src)[src.key_index()];
    if (k == 3) return delete_row(c.source, key);
    const Column& col = src.columns[static_cast<std::size_t>(g.range(1, static_cast<int>(src.columns.size()) - 1))];
    return edit_cell(c.source, key, col.name, g.cell_for(col));
}

/// The flat-side meaning of a forward transport: an extracted attribute
/// edit corrects the entity, so every row sharing its tuple follows.
inline Database entity_correction(Database flat, const DataEdit& e, const Correspondence& c) {
    Database out = apply_data_edit(flat, e);
    if (e.kind != DataEdit::Kind::SetCell || !c.extracts(e.column)) return out;
    const Table& before = flat.table(c.source);
    Table& after = out.table(c.source);
    auto tuple = [&](const Row& r) {
        Row t;
        for (const auto& col : c.columns) t.push_back(r[*before.column_index(col.name)]);
        return t;
    };
    Row edited = tuple(*before.find_row(e.key));
    std::size_t ci = *after.column_index(e.column);
    for (std::size_t i = 0; i < before.rows.size(); ++i)
        if (tuple(before.rows[i]) == edited) after.rows[i][ci] = e.value;
    return out;
}

inline TransportCase transport_case(Gen& g) {
    Database flat = g.database(false);
    auto [ns, corr] = extract_entity(flat, g.extract_spec(flat));
    Lens lens = lens_for(corr);
    TransportCase out;
    if (g.chance(0.5)) {
        if (g.chance(0.3)) {
            Table& ent = ns.table(corr.new_table);
            ent.columns.push_back({"note", TypeExpr::option(TypeExpr::primitive(Prim::String)), std::nullopt});
            for (auto& row : ent.rows) row.push_back(Value::none());
        }
        DataEdit e = new_side_edit(g, ns, corr);
        out.edit = "backward " + to_json(e).dump();
        Database ns2 = apply_data_edit(ns, e);
        Transported t = transport_edit(e, lens, Direction::Backward, ns);
        Database before = bwd(lens, ns).data;
        Database after = apply_all(before, t.edits);
        out.agrees = after == bwd(lens, ns2).data;
        out.silent_loss = !(ns2 == ns) && after == before && t.drops.empty();
    } else {
        DataEdit e = old_side_edit(g, flat, corr);
        out.edit = "forward " + to_json(e).dump();
        Database flat2 = apply_data_edit(flat, e);
        Transported t = transport_edit(e, lens, Direction::Forward, ns);
        Database ns2 = apply_all(ns, t.edits);
        out.agrees = bwd(lens, ns2).data == entity_correction(flat, e, corr);
        out.silent_loss = !(flat2 == flat) && ns2 == ns && t.drops.empty();
    }
    return out;
}

} // namespace schemakit::testing
