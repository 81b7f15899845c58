// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "schemakit/types.h"

namespace schemakit {

struct Violation {
    std::string path;  // value path, e.g. `.items[0].title`
    std::string message;
    bool operator==(const Violation&) const = default;
};

struct ConformanceReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

/// Checks that `value` structurally inhabits `type`. Throws UnknownAlias
/// for unresolved Named types.
ConformanceReport conforms(const Value& value, const TypeExpr& type, const TypeDefs& defs = {});

/// Total map from old-field values to new-field values: either finite case
/// pairs or a named builtin transform.
struct ValueMapping {
    enum class Builtin { WrapSome, ToNone, ToList, BoolToInt, IntToString, Identity };

    std::vector<std::pair<Value, Value>> cases;
    std::optional<Builtin> builtin;

    static ValueMapping of_cases(std::vector<std::pair<Value, Value>> cases);
    static ValueMapping of_builtin(Builtin b);

    /// nullopt when a case mapping has no entry for `v`.
    std::optional<Value> apply(const Value& v) const;

    bool operator==(const ValueMapping&) const = default;
};

std::string_view to_string(ValueMapping::Builtin b);
std::optional<ValueMapping::Builtin> builtin_from_string(std::string_view name);

namespace edit {

struct AddField {
    TypePath path;
    std::string label;
    TypeExpr type;
    std::optional<Value> default_value;
    std::optional<std::size_t> position;  // append when absent
    bool operator==(const AddField&) const = default;
};
struct RemoveField {
    TypePath path;
    std::string label;
    bool operator==(const RemoveField&) const = default;
};
struct RenameField {
    TypePath path;
    std::string from;
    std::string to;
    bool operator==(const RenameField&) const = default;
};
/// An empty label replaces the node at `path` itself.
struct ChangeFieldType {
    TypePath path;
    std::string label;
    TypeExpr type;
    std::optional<ValueMapping> hint;
    bool operator==(const ChangeFieldType&) const = default;
};
struct AddCase {
    TypePath path;
    std::string label;
    std::vector<TypeExpr> payload;
    std::optional<std::size_t> position;
    bool operator==(const AddCase&) const = default;
};
struct RemoveCase {
    TypePath path;
    std::string label;
    bool operator==(const RemoveCase&) const = default;
};
struct RenameCase {
    TypePath path;
    std::string from;
    std::string to;
    bool operator==(const RenameCase&) const = default;
};
struct ChangeCasePayload {
    TypePath path;
    std::string label;
    std::vector<TypeExpr> payload;
    bool operator==(const ChangeCasePayload&) const = default;
};

} // namespace edit

using TypeEdit = std::variant<edit::AddField, edit::RemoveField, edit::RenameField, edit::ChangeFieldType,
                              edit::AddCase, edit::RemoveCase, edit::RenameCase, edit::ChangeCasePayload>;

/// Applies exactly one edit. Throws PathNotFound or DuplicateLabel.
TypeExpr apply_type_edit(const TypeExpr& type, const TypeEdit& edit);

/// Node addressed by `path`; throws PathNotFound.
const TypeExpr& resolve_path(const TypeExpr& type, const TypePath& path);

struct Ambiguity {
    enum class Kind { AmbiguousRename, MovedField };
    Kind kind = Kind::AmbiguousRename;
    TypePath path;
    std::vector<std::string> removed;
    std::vector<std::string> added;
    bool operator==(const Ambiguity&) const = default;
};

struct DiffResult {
    std::vector<TypeEdit> edits;
    std::vector<Ambiguity> ambiguities;
};

/// Explicitly asserted rename of a field or case under `path`.
struct RenameDirective {
    TypePath path;
    std::string from;
    std::string to;
};

/// Structural diff. Never infers renames; simultaneous removal and addition
/// under one record or variant is flagged instead.
DiffResult type_diff(const TypeExpr& old_type, const TypeExpr& new_type,
                     const std::vector<RenameDirective>& directives = {});

TypeExpr apply_type_edits(TypeExpr type, const std::vector<TypeEdit>& edits);

} // namespace schemakit
