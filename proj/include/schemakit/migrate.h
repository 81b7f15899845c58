// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Data migrations derived from type edits, plus the code-level (handler)
// consequences of changes to an event variant.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "schemakit/codec.h"
#include "schemakit/schema.h"

namespace schemakit {

/// One value transform, bound to a path in the old type. The path addresses
/// the record (or variant) the step works on; `[]` steps fan out over list
/// elements.
struct PlanStep {
    enum class Op { InitField, DropField, RenameField, MapField, MapNode, RenameCase, RejectCase, MapCase };

    Op op = Op::InitField;
    TypePath path;
    std::string label;
    std::string to;                        // RenameField / RenameCase
    Value value;                           // InitField
    std::optional<std::size_t> position;   // InitField
    std::optional<ValueMapping> mapping;   // MapField / MapNode / MapCase

    bool operator==(const PlanStep&) const = default;
};

struct MigrationPlan {
    std::vector<PlanStep> steps;
    bool operator==(const MigrationPlan&) const = default;
};

/// Input supplied by the programmer for edits the system cannot migrate on
/// its own: a value mapping or a default.
struct MigrationHint {
    std::optional<ValueMapping> mapping;
    std::optional<Value> default_value;
};

/// Derives the plan for one edit against `old_type`. Throws NeedsInput with
/// the required mapping domain in `details()` when the edit cannot be
/// migrated without a hint.
MigrationPlan derive_migration(const TypeExpr& old_type, const TypeEdit& edit, const MigrationHint& hint = {});

/// Hint addressed to the edit at (path, label).
struct KeyedHint {
    TypePath path;
    std::string label;
    MigrationHint hint;
};

/// Folds derive_migration over an edit script.
MigrationPlan derive_migration(const TypeExpr& old_type, const std::vector<TypeEdit>& edits,
                               const std::vector<KeyedHint>& hints = {});

struct DroppedDatum {
    std::string path;
    Value value;
};

struct MigrationOutcome {
    Value value;
    std::vector<DroppedDatum> dropped;
};

/// Throws MappingIncomplete when a mapping lacks a case present in the data.
MigrationOutcome migrate(const MigrationPlan& plan, const Value& value);
Value migrate_value(const MigrationPlan& plan, const Value& value);

// ── code layer ────────────────────────────────────────────────────────

/// Event case label -> opaque handler stub identifier (the arms of `update`).
using HandlerTable = std::map<std::string, std::string>;

struct CodeTodo {
    enum class Kind { MissingHandler, UnusedHandler, SignatureChanged };
    Kind kind = Kind::MissingHandler;
    std::string label;
    std::string note;
    bool operator==(const CodeTodo&) const = default;
};

std::string_view to_string(CodeTodo::Kind k);

struct Reconciliation {
    HandlerTable table;
    std::vector<CodeTodo> todos;
};

Reconciliation reconcile_handlers(const HandlerTable& table, const TypeExpr& old_event, const TypeExpr& new_event);

/// SignatureChanged todos for the render function, one per state field
/// whose type changed.
std::vector<CodeTodo> render_todos(const TypeExpr& old_state, const std::vector<TypeEdit>& edits);

Json to_json(const MigrationPlan& plan);
MigrationPlan plan_from_json(const Json& j);
Json to_json(const CodeTodo& todo);
std::vector<KeyedHint> hints_from_json(const Json& j);

} // namespace schemakit
