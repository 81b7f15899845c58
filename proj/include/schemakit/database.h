// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Keyed tabular store with typed columns and entity references.
//
// JSON form:
//   {"tables": {name: {"key": col,
//                      "columns": [{"name": n, "type": "int", "ref": "T"}, ...],
//                      "rows": [[cell, ...], ...]}}}
// Column types are primitive names; a trailing `?` makes the column
// nullable (blank cells are `null`).
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "schemakit/codec.h"
#include "schemakit/types.h"

namespace schemakit {

struct Column {
    std::string name;
    TypeExpr type;                    // Prim or Option(Prim)
    std::optional<std::string> ref;   // referenced table, for id columns

    bool operator==(const Column&) const = default;
};

using Row = std::vector<Value>;

struct Table {
    std::string key;
    std::vector<Column> columns;
    std::vector<Row> rows;

    std::optional<std::size_t> column_index(std::string_view name) const;
    std::size_t key_index() const;
    /// Row whose key equals `key`, or nullptr.
    const Row* find_row(const Value& key) const;
    Row* find_row(const Value& key);

    bool operator==(const Table&) const = default;
};

struct Database {
    std::map<std::string, Table, std::less<>> tables;

    const Table& table(std::string_view name) const;
    Table& table(std::string_view name);
    bool has_table(std::string_view name) const { return tables.find(name) != tables.end(); }

    bool operator==(const Database&) const = default;
};

/// Problems with keys, column names, cell types and references. Empty when
/// the database satisfies all its invariants.
std::vector<std::string> integrity_problems(const Database& db);

/// Throws SpecInvalid or DanglingReference on the first problem.
void validate(const Database& db);

/// Next sequential key for a table whose keys are integers or ids.
Value next_key(const Table& t);

std::string column_type_name(const TypeExpr& t);
TypeExpr column_type_from_name(std::string_view name);

Json cell_to_json(const Value& v);
Value cell_from_json(const Json& j, const TypeExpr& type);

Json to_json(const Column& c);
Column column_from_json(const Json& j);

Json to_json(const Database& db);
Database database_from_json(const Json& j);

} // namespace schemakit
