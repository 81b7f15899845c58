// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
//
// A small SQL subset: SELECT / FROM / JOIN .. ON / WHERE with IS NULL, = and
// AND. No aliases, so a table may appear at most once per query.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "schemakit/database.h"
#include "schemakit/entity.h"

namespace schemakit {

struct ColumnRef {
    std::optional<std::string> table;
    std::string column;

    std::string text() const { return table ? *table + "." + column : column; }
    bool operator==(const ColumnRef&) const = default;
};

struct JoinClause {
    std::string table;
    ColumnRef left;
    ColumnRef right;

    bool operator==(const JoinClause&) const = default;
};

struct Predicate {
    enum class Kind { IsNull, Equals };

    Kind kind = Kind::IsNull;
    ColumnRef column;
    Value literal;  // Int, Str or Bool; unused for IsNull

    bool operator==(const Predicate&) const = default;
};

struct Query {
    std::vector<ColumnRef> select;
    std::string from;
    std::vector<JoinClause> joins;
    std::vector<Predicate> where;  // conjunction

    /// from followed by join tables, in query order.
    std::vector<std::string> tables() const;
    bool operator==(const Query&) const = default;
};

/// Throws SyntaxError with details {line, column, token}.
Query parse_query(std::string_view text);

/// Canonical layout: one clause per line, terminated by `;`.
std::string print_query(const Query& q);

struct ResultSet {
    std::vector<std::string> columns;
    std::vector<Row> rows;
};

/// Nested-loop join, filter, project. Null never compares equal. Result
/// columns carry bare column names. Throws UnknownTable, UnknownColumn,
/// AmbiguousColumn.
ResultSet evaluate_query(const Database& db, const Query& q);

/// Multiset equality with columns matched by name.
bool same_results(const ResultSet& a, const ResultSet& b);

/// RFC 4180 CSV with a header row; nulls print as empty fields.
std::string to_csv(const ResultSet& rs);

/// Co-evolves a query with an entity extraction (or its inverse). Throws
/// CannotRewrite when the new names would collide with the query.
Query rewrite_query(const Query& q, const Correspondence& corr);

} // namespace schemakit
