// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Bidirectional data transport across one schema change: the extract-entity
// lens over databases and the scalar/list multiplicity lens over values.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "schemakit/entity.h"

namespace schemakit {

enum class WritePolicy { OnlyNew, ReplaceHead, Prepend };

/// `only-new`, `replace-head`, `prepend`.
std::string_view to_string(WritePolicy p);
WritePolicy write_policy_from_string(std::string_view s);

/// `scalar : T` (or `option<T>`) became `list : list<T>` in the records at
/// `path`.
struct MultiplicityLens {
    TypePath path;
    std::string scalar;
    std::string list;
    TypeExpr old_type;
    TypeExpr new_type;
    bool nullable = true;  // old field is option<T>

    bool operator==(const MultiplicityLens&) const = default;
};

struct Lens {
    enum class Kind { ExtractEntity, Multiplicity };

    Kind kind = Kind::Multiplicity;
    Correspondence correspondence;  // ExtractEntity
    MultiplicityLens multiplicity;  // Multiplicity

    bool operator==(const Lens&) const = default;
};

Lens lens_for(const Correspondence& corr);

/// Recognizes a ChangeFieldType T -> list<T>, optionally paired with a
/// RenameField of the same field. Anything else: Unsupported.
Lens lens_for(const TypeExpr& old_type, const std::vector<TypeEdit>& edits);

/// Information the backward direction could not carry.
struct Drop {
    std::string where;
    Json value;
    std::string reason;
    bool operator==(const Drop&) const = default;
};

using DropReport = std::vector<Drop>;

template <typename T>
struct Backward {
    T data;
    DropReport drops;
};

/// Throws NonConforming when `old_data` does not fit the old schema.
Value fwd(const Lens& lens, const Value& old_data);
Database fwd(const Lens& lens, const Database& old_data);

Backward<Value> bwd(const Lens& lens, const Value& new_data);
Backward<Database> bwd(const Lens& lens, const Database& new_data);

/// The list after writing `write` through the scalar view. A null write
/// clears the list. When the write repeats the current head, or the list is
/// empty, there is nothing to decide; otherwise a missing policy raises
/// PolicyRequired.
std::vector<Value> putback(const Value& write, const std::vector<Value>& current, std::optional<WritePolicy> policy);

/// Record-wise putback of an old-schema value onto the current new-schema
/// value. Records are matched by position.
Value put(const Lens& lens, const Value& old_written, const Value& new_current, std::optional<WritePolicy> policy);

// ── edit transport ──────────────────────────────────────────────────────

struct DataEdit {
    enum class Kind { InsertRow, SetCell, DeleteRow, SetField };

    Kind kind = Kind::SetCell;
    std::string table;                                  // row edits
    Value key;                                          // SetCell, DeleteRow
    std::string column;                                 // SetCell; SetField: field label
    Value value;                                        // SetCell, SetField
    std::vector<std::pair<std::string, Value>> cells;   // InsertRow
    std::size_t item = 0;                               // SetField: record index at the lens path

    bool operator==(const DataEdit&) const = default;
};

std::string_view to_string(DataEdit::Kind k);
Json to_json(const DataEdit& e);
DataEdit data_edit_from_json(const Json& j);
Json to_json(const Drop& d);

/// Throws UnknownTable, UnknownColumn, UnknownId, SpecInvalid, NonConforming.
Database apply_data_edit(Database db, const DataEdit& e);

/// SetField on the `item`-th record under `path`.
Value apply_data_edit(const TypePath& path, Value v, const DataEdit& e);

enum class Direction { Forward, Backward };

struct Transported {
    std::vector<DataEdit> edits;
    DropReport drops;
};

/// Extract lens. `new_side` is the current new-schema database, before the
/// edit when it is the source side.
Transported transport_edit(const DataEdit& e, const Lens& lens, Direction dir, const Database& new_side);

/// Multiplicity lens. `new_side` is the current new-schema value.
Transported transport_edit(const DataEdit& e, const Lens& lens, Direction dir, const Value& new_side,
                           std::optional<WritePolicy> policy);

Json to_json(const Lens& lens);
Lens lens_from_json(const Json& j);

/// `{"correspondence": ..}` or `{"old_type": .., "edits": [..]}`.
Lens lens_for_record(const Json& j);

} // namespace schemakit
