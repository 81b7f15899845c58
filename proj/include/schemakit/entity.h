// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Entity evolution over a Database: Extract/Absorb Entity (schema changes)
// and Merge/Split Entities (data changes that rewire references).
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "schemakit/database.h"

namespace schemakit {

struct ExtractSpec {
    std::string source;
    std::vector<std::string> columns;
    std::string new_table;
    std::string key;
    std::string fk;
};

/// Retained record of an applied Extract (or its inverse, Absorb). Keeping
/// the key assignment makes absorb, query rewriting and lens generation
/// total.
struct Correspondence {
    enum class Kind { Extract, Absorb };

    Kind kind = Kind::Extract;
    std::string source;
    std::string new_table;
    std::string key;
    std::string fk;
    std::vector<Column> columns;          // extracted columns, source order
    std::vector<std::size_t> positions;   // their original indexes in source
    std::size_t fk_position = 0;          // index of fk in the evolved source
    std::vector<std::pair<Row, Value>> assignment;  // attribute tuple -> key

    bool extracts(std::string_view column) const;
    /// Same evolution viewed from the other side.
    Correspondence inverse() const;

    bool operator==(const Correspondence&) const = default;
};

struct ExtractResult {
    Database db;
    Correspondence correspondence;
};

/// Rows with equal attribute tuples share one new row; keys are assigned
/// 1, 2, ... in order of first appearance. Throws SpecInvalid.
ExtractResult extract_entity(const Database& db, const ExtractSpec& spec);

/// Same as extract_entity but reuses the keys recorded in `prior` for tuples
/// it already knows; unseen tuples get fresh sequential keys.
ExtractResult extract_entity(const Database& db, const ExtractSpec& spec, const Correspondence& prior);

enum class AbsorbMode { Join, Nest };

/// Joins `table` back into the single table whose `fk` column references it.
/// The absorbed columns take the place of the fk column.
Database absorb_entity(const Database& db, const std::string& table, const std::string& fk,
                       AbsorbMode mode = AbsorbMode::Join);

/// Absorb that restores the column positions recorded in `corr`.
Database absorb_entity(const Database& db, const Correspondence& corr);

struct MergeResolution {
    /// Column values written onto the survivor; empty means keep-first.
    std::map<std::string, Value> fields;
};

/// The first id survives; the others are deleted and every reference to
/// them in the database is redirected to the survivor. Throws UnknownId.
Database merge_entities(const Database& db, const std::string& table, const std::vector<Value>& ids,
                        const MergeResolution& resolution = {});

struct RowRef {
    std::string table;
    Value key;
    auto operator<=>(const RowRef& o) const {
        if (auto c = table <=> o.table; c != 0) return c;
        if (key == o.key) return std::strong_ordering::equal;
        return key < o.key ? std::strong_ordering::less : std::strong_ordering::greater;
    }
    bool operator==(const RowRef& o) const { return table == o.table && key == o.key; }
};

enum class SplitSide { Old, New };

using Reassignment = std::map<RowRef, SplitSide>;

struct SplitResult {
    Database db;
    Value clone_key;
};

/// Adds a clone of `source_id` under a fresh key and repoints the rows
/// mapped to New at it. A missing reassignment means nobody told us which
/// references move: NotInteractive.
SplitResult split_entity(const Database& db, const std::string& table, const Value& source_id,
                         const std::optional<Reassignment>& reassignment);

/// Every (table, row key) whose reference columns into `table` hold `id`.
std::vector<RowRef> referencing_rows(const Database& db, const std::string& table, const Value& id);

Json to_json(const Correspondence& c);
Correspondence correspondence_from_json(const Json& j);

} // namespace schemakit
