// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
#include "schemakit/migrate.h"

#include <algorithm>
#include <functional>

#include "schemakit/error.h"

namespace schemakit {

namespace {

using Builtin = ValueMapping::Builtin;

/// Finite domains are enumerable; anything else needs a builtin transform.
std::optional<std::vector<Value>> finite_domain(const TypeExpr& t) {
    switch (t.kind) {
    case TypeExpr::Kind::Prim:
        if (t.prim == Prim::Bool) return std::vector<Value>{Value::boolean(false), Value::boolean(true)};
        return std::nullopt;
    case TypeExpr::Kind::Option: {
        auto inner = finite_domain(t.element());
        if (!inner) return std::nullopt;
        std::vector<Value> out{Value::none()};
        for (auto& v : *inner) out.push_back(Value::some(v));
        return out;
    }
    case TypeExpr::Kind::Variant: {
        std::vector<Value> out;
        for (const auto& c : t.cases) {
            if (!c.payload.empty()) return std::nullopt;
            out.push_back(Value::variant(c.label, {}));
        }
        return out;
    }
    default: return std::nullopt;
    }
}

bool builtin_fits(Builtin b, const TypeExpr& from, const TypeExpr& to) {
    switch (b) {
    case Builtin::WrapSome: return to.kind == TypeExpr::Kind::Option && to.element() == from;
    case Builtin::ToNone: return to.kind == TypeExpr::Kind::Option;
    case Builtin::ToList:
        if (to.kind != TypeExpr::Kind::List) return false;
        // Options unwrap (nothing -> [], some x -> [x]); anything else becomes a singleton.
        if (from.kind == TypeExpr::Kind::Option) return from.element() == to.element();
        return to.element() == from;
    case Builtin::BoolToInt: return from.is_prim(Prim::Bool) && to.is_prim(Prim::Int);
    case Builtin::IntToString: return from.is_prim(Prim::Int) && to.is_prim(Prim::String);
    case Builtin::Identity: return from == to;
    }
    return false;
}

std::optional<Builtin> automatic_coercion(const TypeExpr& from, const TypeExpr& to) {
    for (Builtin b : {Builtin::Identity, Builtin::WrapSome, Builtin::ToList, Builtin::BoolToInt, Builtin::IntToString})
        if (builtin_fits(b, from, to)) return b;
    return std::nullopt;
}

Json needs_input_details(const TypePath& path, const std::string& label, const TypeExpr& from, const TypeExpr& to) {
    Json d;
    d["path"] = format_path(path);
    d["label"] = label;
    d["from"] = to_json(from);
    d["to"] = to_json(to);
    auto domain = finite_domain(from);
    d["finite"] = domain.has_value();
    if (domain) {
        Json values = Json::array();
        for (const auto& v : *domain) values.push_back(to_json(v));
        d["domain"] = std::move(values);
    } else {
        d["requires"] = "builtin";
    }
    return d;
}

std::string where(const TypePath& path, const std::string& label) {
    return format_path(path) + (label.empty() ? "" : "." + label);
}

/// Validates a hint mapping for a type change and returns it, or throws
/// NeedsInput describing what is still missing.
ValueMapping checked_mapping(const ValueMapping& m, const TypePath& path, const std::string& label,
                             const TypeExpr& from, const TypeExpr& to) {
    auto details = needs_input_details(path, label, from, to);
    if (m.builtin) {
        if (!builtin_fits(*m.builtin, from, to))
            throw Error(ErrorCode::NeedsInput,
                        "transform '" + std::string(to_string(*m.builtin)) + "' does not map " + describe(from) +
                            " to " + describe(to) + " at " + where(path, label),
                        details);
        return m;
    }
    auto domain = finite_domain(from);
    if (!domain)
        throw Error(ErrorCode::NeedsInput,
                    "domain " + describe(from) + " at " + where(path, label) + " is infinite; a builtin transform is required",
                    details);
    for (const auto& v : *domain)
        if (!m.apply(v))
            throw Error(ErrorCode::NeedsInput, "mapping at " + where(path, label) + " has no case for " + describe(v), details);
    for (const auto& [from_v, to_v] : m.cases)
        if (!conforms(to_v, to).ok())
            throw Error(ErrorCode::NonConforming, "mapping output " + describe(to_v) + " does not conform to " + describe(to));
    return m;
}

struct PlanDeriver {
    const TypeExpr& old_type;
    const MigrationHint& hint;

    MigrationPlan operator()(const edit::AddField& e) const {
        resolve_path(old_type, e.path);
        PlanStep s;
        s.op = PlanStep::Op::InitField;
        s.path = e.path;
        s.label = e.label;
        s.position = e.position;
        if (e.default_value) {
            s.value = *e.default_value;
        } else if (hint.default_value) {
            s.value = *hint.default_value;
        } else if (e.type.kind == TypeExpr::Kind::Option) {
            s.value = Value::none();
        } else if (e.type.kind == TypeExpr::Kind::List) {
            s.value = Value::list({});
        } else {
            Json d{{"path", format_path(e.path)}, {"label", e.label}, {"to", to_json(e.type)}, {"requires", "default"}};
            throw Error(ErrorCode::NeedsInput, "field " + where(e.path, e.label) + " needs an initial value", d);
        }
        if (!conforms(s.value, e.type).ok())
            throw Error(ErrorCode::NonConforming, "initial value for " + where(e.path, e.label) + " does not conform");
        return {{s}};
    }
    MigrationPlan operator()(const edit::RemoveField& e) const {
        PlanStep s;
        s.op = PlanStep::Op::DropField;
        s.path = e.path;
        s.label = e.label;
        return {{s}};
    }
    MigrationPlan operator()(const edit::RenameField& e) const {
        PlanStep s;
        s.op = PlanStep::Op::RenameField;
        s.path = e.path;
        s.label = e.from;
        s.to = e.to;
        return {{s}};
    }
    MigrationPlan operator()(const edit::ChangeFieldType& e) const {
        const TypeExpr& node = resolve_path(old_type, e.path);
        const TypeExpr* from = &node;
        if (!e.label.empty()) {
            const Field* f = node.find_field(e.label);
            if (!f) throw Error(ErrorCode::PathNotFound, "no field " + where(e.path, e.label));
            from = &f->type;
        }
        if (*from == e.type) return {};
        PlanStep s;
        s.op = e.label.empty() ? PlanStep::Op::MapNode : PlanStep::Op::MapField;
        s.path = e.path;
        s.label = e.label;
        const std::optional<ValueMapping>& supplied = e.hint ? e.hint : hint.mapping;
        if (supplied) {
            s.mapping = checked_mapping(*supplied, e.path, e.label, *from, e.type);
        } else if (auto b = automatic_coercion(*from, e.type)) {
            s.mapping = ValueMapping::of_builtin(*b);
        } else {
            throw Error(ErrorCode::NeedsInput,
                        "changing " + where(e.path, e.label) + " from " + describe(*from) + " to " + describe(e.type) +
                            " needs a value mapping",
                        needs_input_details(e.path, e.label, *from, e.type));
        }
        return {{s}};
    }
    MigrationPlan operator()(const edit::AddCase&) const { return {}; }
    MigrationPlan operator()(const edit::RemoveCase& e) const {
        PlanStep s;
        s.path = e.path;
        s.label = e.label;
        if (hint.mapping) {
            s.op = PlanStep::Op::MapCase;
            s.mapping = hint.mapping;
        } else {
            s.op = PlanStep::Op::RejectCase;
        }
        return {{s}};
    }
    MigrationPlan operator()(const edit::RenameCase& e) const {
        PlanStep s;
        s.op = PlanStep::Op::RenameCase;
        s.path = e.path;
        s.label = e.from;
        s.to = e.to;
        return {{s}};
    }
    MigrationPlan operator()(const edit::ChangeCasePayload& e) const {
        const TypeExpr& node = resolve_path(old_type, e.path);
        const Case* c = node.find_case(e.label);
        if (!c) throw Error(ErrorCode::PathNotFound, "no case " + where(e.path, e.label));
        if (c->payload == e.payload) return {};
        if (!hint.mapping) {
            Json d{{"path", format_path(e.path)}, {"label", e.label}, {"finite", false}, {"requires", "cases"}};
            throw Error(ErrorCode::NeedsInput, "payload change of case '" + e.label + "' needs a value mapping", d);
        }
        PlanStep s;
        s.op = PlanStep::Op::MapCase;
        s.path = e.path;
        s.label = e.label;
        s.mapping = hint.mapping;
        return {{s}};
    }
};

std::pair<TypePath, std::string> edit_key(const TypeEdit& e) {
    return std::visit(
        [](const auto& x) -> std::pair<TypePath, std::string> {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, edit::RenameField> || std::is_same_v<T, edit::RenameCase>)
                return {x.path, x.from};
            else
                return {x.path, x.label};
        },
        e);
}

} // namespace

MigrationPlan derive_migration(const TypeExpr& old_type, const TypeEdit& edit, const MigrationHint& hint) {
    return std::visit(PlanDeriver{old_type, hint}, edit);
}

MigrationPlan derive_migration(const TypeExpr& old_type, const std::vector<TypeEdit>& edits,
                               const std::vector<KeyedHint>& hints) {
    MigrationPlan plan;
    TypeExpr current = old_type;
    for (const auto& e : edits) {
        auto [path, label] = edit_key(e);
        MigrationHint hint;
        for (const auto& h : hints)
            if (h.path == path && h.label == label) hint = h.hint;
        MigrationPlan step = derive_migration(current, e, hint);
        plan.steps.insert(plan.steps.end(), step.steps.begin(), step.steps.end());
        current = apply_type_edit(current, e);
    }
    return plan;
}

// ── execution ──────────────────────────────────────────────────────────

namespace {

using NodeFn = std::function<void(Value&, const std::string&)>;

void walk(Value& v, const TypePath& path, std::size_t k, const std::string& at, const NodeFn& fn) {
    if (k == path.size()) return fn(v, at);
    const PathStep& step = path[k];
    switch (step.kind) {
    case PathStep::Kind::Field: {
        Value* child = v.kind == Value::Kind::Record ? v.get(step.label) : nullptr;
        if (!child) throw Error(ErrorCode::NonConforming, "value has no field '" + step.label + "' at '" + at + "'");
        return walk(*child, path, k + 1, at + "." + step.label, fn);
    }
    case PathStep::Kind::Elem:
        if (v.kind != Value::Kind::List) throw Error(ErrorCode::NonConforming, "expected list at '" + at + "'");
        for (std::size_t n = 0; n < v.items.size(); ++n)
            walk(v.items[n], path, k + 1, at + "[" + std::to_string(n) + "]", fn);
        return;
    case PathStep::Kind::Some:
        if (v.kind == Value::Kind::Some) walk(v.items.front(), path, k + 1, at + "?", fn);
        return;
    case PathStep::Kind::Payload:
        if (v.kind == Value::Kind::Variant && v.s == step.label && step.index < v.items.size())
            walk(v.items[step.index], path, k + 1, at + "|" + step.label + ":" + std::to_string(step.index), fn);
        return;
    }
}

Value mapped(const ValueMapping& m, const Value& v, const std::string& at) {
    auto out = m.apply(v);
    if (!out) throw Error(ErrorCode::MappingIncomplete, "mapping has no case for " + describe(v) + " at '" + at + "'");
    return *out;
}

RecordEntry* entry(Value& rec, const std::string& label, const std::string& at) {
    if (rec.kind != Value::Kind::Record) throw Error(ErrorCode::NonConforming, "expected record at '" + at + "'");
    for (auto& e : rec.entries)
        if (e.label == label) return &e;
    return nullptr;
}

} // namespace

MigrationOutcome migrate(const MigrationPlan& plan, const Value& value) {
    MigrationOutcome out{value, {}};
    for (const auto& s : plan.steps) {
        NodeFn fn = [&](Value& node, const std::string& at) {
            switch (s.op) {
            case PlanStep::Op::InitField: {
                if (entry(node, s.label, at)) return;
                std::size_t pos = std::min(s.position.value_or(node.entries.size()), node.entries.size());
                node.entries.insert(node.entries.begin() + static_cast<std::ptrdiff_t>(pos), {s.label, s.value});
                return;
            }
            case PlanStep::Op::DropField: {
                RecordEntry* e = entry(node, s.label, at);
                if (!e) return;
                out.dropped.push_back({at + "." + s.label, e->value});
                node.entries.erase(node.entries.begin() + (e - node.entries.data()));
                return;
            }
            case PlanStep::Op::RenameField:
                if (RecordEntry* e = entry(node, s.label, at)) e->label = s.to;
                return;
            case PlanStep::Op::MapField:
                if (RecordEntry* e = entry(node, s.label, at)) e->value = mapped(*s.mapping, e->value, at + "." + s.label);
                return;
            case PlanStep::Op::MapNode: node = mapped(*s.mapping, node, at); return;
            case PlanStep::Op::RenameCase:
                if (node.kind == Value::Kind::Variant && node.s == s.label) node.s = s.to;
                return;
            case PlanStep::Op::RejectCase:
                if (node.kind == Value::Kind::Variant && node.s == s.label)
                    throw Error(ErrorCode::MappingIncomplete,
                                "value of removed case '" + s.label + "' at '" + at + "' has no mapping");
                return;
            case PlanStep::Op::MapCase:
                if (node.kind == Value::Kind::Variant && node.s == s.label) node = mapped(*s.mapping, node, at);
                return;
            }
        };
        walk(out.value, s.path, 0, "", fn);
    }
    return out;
}

Value migrate_value(const MigrationPlan& plan, const Value& value) { return migrate(plan, value).value; }

// ── handlers ───────────────────────────────────────────────────────────

std::string_view to_string(CodeTodo::Kind k) {
    switch (k) {
    case CodeTodo::Kind::MissingHandler: return "MissingHandler";
    case CodeTodo::Kind::UnusedHandler: return "UnusedHandler";
    case CodeTodo::Kind::SignatureChanged: return "SignatureChanged";
    }
    return "?";
}

Reconciliation reconcile_handlers(const HandlerTable& table, const TypeExpr& old_event, const TypeExpr& new_event) {
    if (old_event.kind != TypeExpr::Kind::Variant || new_event.kind != TypeExpr::Kind::Variant)
        throw Error(ErrorCode::NonConforming, "event types must be variants");
    Reconciliation r{table, {}};
    for (const auto& c : old_event.cases) {
        const Case* now = new_event.find_case(c.label);
        if (!now) {
            if (r.table.erase(c.label))
                r.todos.push_back({CodeTodo::Kind::UnusedHandler, c.label,
                                   "case '" + c.label + "' was removed; its arm in update is unused"});
        } else if (now->payload != c.payload && table.count(c.label)) {
            r.todos.push_back({CodeTodo::Kind::SignatureChanged, c.label,
                               "payload of '" + c.label + "' changed; review its arm in update"});
        }
    }
    for (const auto& c : new_event.cases) {
        if (!r.table.count(c.label))
            r.todos.push_back({CodeTodo::Kind::MissingHandler, c.label,
                               "update needs an arm for case '" + c.label + "'"});
    }
    return r;
}

std::vector<CodeTodo> render_todos(const TypeExpr& old_state, const std::vector<TypeEdit>& edits) {
    std::vector<CodeTodo> out;
    TypeExpr current = old_state;
    for (const auto& e : edits) {
        if (const auto* c = std::get_if<edit::ChangeFieldType>(&e)) {
            const TypeExpr& node = resolve_path(current, c->path);
            const TypeExpr& from = c->label.empty() ? node : node.find_field(c->label)->type;
            if (from != c->type)
                out.push_back({CodeTodo::Kind::SignatureChanged, "render",
                               "render reads " + where(c->path, c->label) + ", now " + describe(c->type) +
                                   " (was " + describe(from) + ")"});
        }
        current = apply_type_edit(current, e);
    }
    return out;
}

// ── json ───────────────────────────────────────────────────────────────

namespace {

std::string_view op_name(PlanStep::Op op) {
    switch (op) {
    case PlanStep::Op::InitField: return "init-field";
    case PlanStep::Op::DropField: return "drop-field";
    case PlanStep::Op::RenameField: return "rename-field";
    case PlanStep::Op::MapField: return "map-field";
    case PlanStep::Op::MapNode: return "map-node";
    case PlanStep::Op::RenameCase: return "rename-case";
    case PlanStep::Op::RejectCase: return "reject-case";
    case PlanStep::Op::MapCase: return "map-case";
    }
    return "?";
}

} // namespace

Json to_json(const MigrationPlan& plan) {
    Json steps = Json::array();
    for (const auto& s : plan.steps) {
        Json j;
        j["op"] = std::string(op_name(s.op));
        j["path"] = format_path(s.path);
        if (!s.label.empty()) j["label"] = s.label;
        if (!s.to.empty()) j["to"] = s.to;
        if (s.op == PlanStep::Op::InitField) j["value"] = to_json(s.value);
        if (s.position) j["position"] = *s.position;
        if (s.mapping) j["mapping"] = to_json(*s.mapping);
        steps.push_back(std::move(j));
    }
    return Json{{"steps", std::move(steps)}};
}

MigrationPlan plan_from_json(const Json& j) {
    MigrationPlan plan;
    for (const auto& sj : require(j, "steps")) {
        PlanStep s;
        std::string op = require_string(sj, "op");
        bool found = false;
        for (auto candidate : {PlanStep::Op::InitField, PlanStep::Op::DropField, PlanStep::Op::RenameField,
                               PlanStep::Op::MapField, PlanStep::Op::MapNode, PlanStep::Op::RenameCase,
                               PlanStep::Op::RejectCase, PlanStep::Op::MapCase}) {
            if (op_name(candidate) == op) {
                s.op = candidate;
                found = true;
            }
        }
        if (!found) throw Error(ErrorCode::InvalidFormat, "unknown plan op '" + op + "'");
        s.path = parse_path(sj.value("path", ""));
        s.label = sj.value("label", "");
        s.to = sj.value("to", "");
        if (sj.contains("value")) s.value = value_from_json(sj.at("value"));
        if (sj.contains("position")) s.position = sj.at("position").get<std::size_t>();
        if (sj.contains("mapping")) s.mapping = mapping_from_json(sj.at("mapping"));
        if ((s.op == PlanStep::Op::MapField || s.op == PlanStep::Op::MapNode || s.op == PlanStep::Op::MapCase) &&
            !s.mapping)
            throw Error(ErrorCode::InvalidFormat, "plan step '" + op + "' needs a mapping");
        plan.steps.push_back(std::move(s));
    }
    return plan;
}

Json to_json(const CodeTodo& todo) {
    return Json{{"todo", std::string(to_string(todo.kind))}, {"label", todo.label}, {"note", todo.note}};
}

std::vector<KeyedHint> hints_from_json(const Json& j) {
    std::vector<KeyedHint> out;
    if (!j.is_array()) throw Error(ErrorCode::InvalidFormat, "hints must be an array");
    for (const auto& h : j) {
        KeyedHint k;
        k.path = parse_path(h.value("path", ""));
        k.label = require_string(h, "label");
        if (h.contains("mapping")) k.hint.mapping = mapping_from_json(h.at("mapping"));
        if (h.contains("default")) k.hint.default_value = value_from_json(h.at("default"));
        out.push_back(std::move(k));
    }
    return out;
}

} // namespace schemakit
