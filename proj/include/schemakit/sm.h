// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
//
// A small state machine language with typed global variables and on-entry
// actions, its interpreter, and patching of a running machine.
//
//     machine Doors
//     var isClosed: bool = true
//     init closed
//     state closed {
//       entry { isClosed := true }
//       on open -> opened
//     }
//
// Statements are `var := literal` or `var := not other`; `;` between them is
// optional. `//` starts a comment.
#pragma once

#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "schemakit/codec.h"

namespace schemakit::sm {

/// bool, int or string.
using VarType = Prim;

struct VarDecl {
    std::string name;
    VarType type = Prim::Bool;
    Value init;
    bool operator==(const VarDecl&) const = default;
};

struct Stmt {
    std::string target;
    std::optional<std::string> negated;  // `target := not negated`
    Value literal;                        // otherwise
    bool operator==(const Stmt&) const = default;
};

struct Transition {
    std::string event;
    std::string target;
    bool operator==(const Transition&) const = default;
};

struct State {
    std::string name;
    std::vector<Stmt> entry;
    std::vector<Transition> transitions;

    const Transition* on(std::string_view event) const;
    bool operator==(const State&) const = default;
};

struct MachineDef {
    std::string name;
    std::vector<VarDecl> vars;
    std::string initial;
    std::vector<State> states;

    const State* state(std::string_view name) const;
    State* state(std::string_view name);
    const VarDecl* var(std::string_view name) const;
    bool operator==(const MachineDef&) const = default;
};

/// Throws DuplicateState, UnknownTarget (transition target or initial state)
/// and InvalidMachine (duplicate variable or event, ill-typed statement).
void validate_machine(const MachineDef& def);

/// Equal up to the order of states, variables and transitions.
bool equivalent(const MachineDef& a, const MachineDef& b);

/// Throws SyntaxError (with line and column) or any validate_machine error.
MachineDef parse_machine(std::string_view text);
std::string print_machine(const MachineDef& def);

std::string format_stmt(const Stmt& s);
Stmt parse_stmt(std::string_view text);
std::string_view type_name(VarType t);

// ── run time ────────────────────────────────────────────────────────────

struct RuntimeState {
    std::string current;
    std::map<std::string, Value> vars;
    std::map<std::string, int> visited;
    std::deque<std::string> pending;
    bool operator==(const RuntimeState&) const = default;
};

/// Empty when `rt` is a valid run-time state of `def`.
std::vector<std::string> runtime_problems(const MachineDef& def, const RuntimeState& rt);

/// Variables at their initializers, the initial state entered once.
RuntimeState start(const MachineDef& def);

struct Stepped {
    RuntimeState rt;
    bool fired = false;
    std::string note;  // set when the event is dropped
};

/// Unmatched events leave the state untouched and produce a note.
Stepped step(const MachineDef& def, RuntimeState rt, const std::string& event);

/// Processes the pending queue front to back.
std::vector<Stepped> drain(const MachineDef& def, RuntimeState rt);

// ── patches ─────────────────────────────────────────────────────────────

namespace change {
struct AddState { State state; bool operator==(const AddState&) const = default; };
struct RenameState { std::string from, to; bool operator==(const RenameState&) const = default; };
struct RemoveState { std::string name; bool operator==(const RemoveState&) const = default; };
struct AddVar { VarDecl var; bool operator==(const AddVar&) const = default; };
struct RemoveVar { std::string name; bool operator==(const RemoveVar&) const = default; };
struct RenameVar { std::string from, to; bool operator==(const RenameVar&) const = default; };
/// Redeclares the variable. The live value is `value` when given, kept when
/// the type is unchanged, converted when a conversion exists, else reset.
struct ChangeVarType {
    std::string name;
    VarType type = Prim::Int;
    Value init;
    std::optional<Value> value;
    bool operator==(const ChangeVarType&) const = default;
};
struct AddTransition { std::string state; Transition transition; bool operator==(const AddTransition&) const = default; };
struct RemoveTransition { std::string state, event; bool operator==(const RemoveTransition&) const = default; };
struct ChangeTransitionEvent {
    std::string state, from, to;
    bool operator==(const ChangeTransitionEvent&) const = default;
};
struct SetEntryStatements {
    std::string state;
    std::vector<Stmt> entry;
    bool operator==(const SetEntryStatements&) const = default;
};
struct SetInitial { std::string state; bool operator==(const SetInitial&) const = default; };
} // namespace change

using Change = std::variant<change::AddState, change::RenameState, change::RemoveState, change::AddVar,
                            change::RemoveVar, change::RenameVar, change::ChangeVarType, change::AddTransition,
                            change::RemoveTransition, change::ChangeTransitionEvent, change::SetEntryStatements,
                            change::SetInitial>;

struct CurrentStateStrategy {
    enum class Kind { Reject, GotoInitial, Explicit };
    Kind kind = Kind::Reject;
    std::string target;  // Explicit
    bool operator==(const CurrentStateStrategy&) const = default;
};

enum class PendingEventStrategy { Drop, Reject };

/// A removed and an added name of the same kind that might be a rename.
struct Ambiguity {
    std::string kind;  // "var" or "state"
    std::string removed;
    std::string added;
    bool operator==(const Ambiguity&) const = default;
};

struct Patch {
    std::vector<Change> changes;
    CurrentStateStrategy current;
    PendingEventStrategy pending = PendingEventStrategy::Reject;
    std::vector<Ambiguity> ambiguities;
    bool operator==(const Patch&) const = default;
};

struct RenameDirective {
    enum class Kind { Var, State };
    Kind kind = Kind::Var;
    std::string from, to;
};

/// Throws BadDirective when a directive names something absent.
Patch diff_machines(const MachineDef& old_def, const MachineDef& new_def,
                    const std::vector<RenameDirective>& directives = {});

/// The definition alone, with no run-time state. Throws InvalidPatch.
MachineDef apply_changes(const MachineDef& def, const std::vector<Change>& changes);

struct Patched {
    MachineDef def;
    RuntimeState rt;
    std::vector<std::string> notes;
};

/// Throws Rejected (a strategy refused) or InvalidPatch (records do not fit
/// the definition, or the result is not a valid machine).
Patched patch(const MachineDef& def, const RuntimeState& rt, const Patch& p);

Json to_json(const Change& c);
Change change_from_json(const Json& j);
Json to_json(const Patch& p);
Patch patch_from_json(const Json& j);
Json to_json(const RuntimeState& rt);
RuntimeState runtime_from_json(const Json& j);
Json to_json(const CurrentStateStrategy& s);
CurrentStateStrategy current_strategy_from_json(const Json& j);
PendingEventStrategy pending_strategy_from_string(std::string_view s);
std::string_view to_string(PendingEventStrategy s);

// ── sessions ────────────────────────────────────────────────────────────

struct SessionResult {
    MachineDef def;
    RuntimeState rt;
    std::vector<Json> trace;
};

/// Runs JSON-lines records: `{"event": e}` steps now, `{"enqueue": e}` queues
/// an event and `{"drain": true}` processes the queue. `{"patch": ..}` holds
/// a patch object or names a file relative to `base`: a patch (JSON) or a
/// new machine (`.sml`, diffed with optional `"renames"` directives); `"currentStateStrategy"` and
/// `"pendingEventStrategy"` override the patch's own. A rejected patch
/// leaves the machine untouched and is traced.
SessionResult run_session(const MachineDef& def, const std::vector<Json>& records, const std::filesystem::path& base);

/// One record of a session, appended to `s.trace`.
void run_record(SessionResult& s, const Json& record, const std::filesystem::path& base);

} // namespace schemakit::sm
