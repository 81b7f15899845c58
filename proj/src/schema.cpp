// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
#include "schemakit/schema.h"

#include <algorithm>
#include <set>

#include "schemakit/error.h"

namespace schemakit {

// ── conformance ────────────────────────────────────────────────────────

namespace {

bool prim_matches(Prim p, Value::Kind k) {
    switch (p) {
    case Prim::Bool: return k == Value::Kind::Bool;
    case Prim::Int: return k == Value::Kind::Int;
    case Prim::String: return k == Value::Kind::Str;
    case Prim::DateTime: return k == Value::Kind::DateTime;
    case Prim::Id: return k == Value::Kind::Id;
    }
    return false;
}

std::string_view kind_name(Value::Kind k) {
    switch (k) {
    case Value::Kind::Bool: return "bool";
    case Value::Kind::Int: return "int";
    case Value::Kind::Str: return "string";
    case Value::Kind::DateTime: return "datetime";
    case Value::Kind::Id: return "id";
    case Value::Kind::None: return "none";
    case Value::Kind::Some: return "some";
    case Value::Kind::List: return "list";
    case Value::Kind::Record: return "record";
    case Value::Kind::Variant: return "variant";
    }
    return "?";
}

const TypeExpr& resolve_alias(const TypeExpr& type, const TypeDefs& defs) {
    const TypeExpr* t = &type;
    std::set<std::string, std::less<>> seen;
    while (t->kind == TypeExpr::Kind::Named) {
        if (!seen.insert(t->alias).second)
            throw Error(ErrorCode::UnknownAlias, "alias cycle through '" + t->alias + "'");
        auto it = defs.find(t->alias);
        if (it == defs.end()) throw Error(ErrorCode::UnknownAlias, "unknown type alias '" + t->alias + "'");
        t = &it->second;
    }
    return *t;
}

void check(const Value& v, const TypeExpr& declared, const TypeDefs& defs, const std::string& path,
           std::vector<Violation>& out) {
    const TypeExpr& t = resolve_alias(declared, defs);
    auto mismatch = [&] {
        out.push_back({path, "expected " + describe(t) + ", found " + std::string(kind_name(v.kind))});
    };
    switch (t.kind) {
    case TypeExpr::Kind::Prim:
        if (!prim_matches(t.prim, v.kind)) mismatch();
        return;
    case TypeExpr::Kind::Option:
        if (v.kind == Value::Kind::None) return;
        if (v.kind != Value::Kind::Some) return mismatch();
        check(v.items.front(), t.element(), defs, path + "?", out);
        return;
    case TypeExpr::Kind::List:
        if (v.kind != Value::Kind::List) return mismatch();
        for (std::size_t k = 0; k < v.items.size(); ++k)
            check(v.items[k], t.element(), defs, path + "[" + std::to_string(k) + "]", out);
        return;
    case TypeExpr::Kind::Record: {
        if (v.kind != Value::Kind::Record) return mismatch();
        for (const auto& f : t.fields) {
            const Value* fv = v.get(f.label);
            if (!fv)
                out.push_back({path + "." + f.label, "missing field"});
            else
                check(*fv, f.type, defs, path + "." + f.label, out);
        }
        std::set<std::string_view> labels;
        for (const auto& e : v.entries) {
            if (!t.find_field(e.label)) out.push_back({path + "." + e.label, "unexpected field"});
            if (!labels.insert(e.label).second) out.push_back({path + "." + e.label, "duplicate field"});
        }
        return;
    }
    case TypeExpr::Kind::Variant: {
        if (v.kind != Value::Kind::Variant) return mismatch();
        const Case* c = t.find_case(v.s);
        if (!c) {
            out.push_back({path, "unknown case '" + v.s + "'"});
            return;
        }
        if (c->payload.size() != v.items.size()) {
            out.push_back({path + "|" + v.s, "payload arity " + std::to_string(v.items.size()) + ", expected " +
                                                 std::to_string(c->payload.size())});
            return;
        }
        for (std::size_t k = 0; k < v.items.size(); ++k)
            check(v.items[k], c->payload[k], defs, path + "|" + v.s + ":" + std::to_string(k), out);
        return;
    }
    case TypeExpr::Kind::Named: break;  // resolved above
    }
}

} // namespace

ConformanceReport conforms(const Value& value, const TypeExpr& type, const TypeDefs& defs) {
    ConformanceReport report;
    check(value, type, defs, "", report.violations);
    return report;
}

// ── value mappings ─────────────────────────────────────────────────────

ValueMapping ValueMapping::of_cases(std::vector<std::pair<Value, Value>> cases) {
    ValueMapping m;
    m.cases = std::move(cases);
    return m;
}

ValueMapping ValueMapping::of_builtin(Builtin b) {
    ValueMapping m;
    m.builtin = b;
    return m;
}

std::optional<Value> ValueMapping::apply(const Value& v) const {
    if (builtin) {
        switch (*builtin) {
        case Builtin::WrapSome: return Value::some(v);
        case Builtin::ToNone: return Value::none();
        case Builtin::ToList: return v.is_none() ? Value::list({}) : Value::list({v.kind == Value::Kind::Some ? v.items.front() : v});
        case Builtin::BoolToInt:
            if (v.kind != Value::Kind::Bool) return std::nullopt;
            return Value::integer(v.b ? 1 : 0);
        case Builtin::IntToString:
            if (v.kind != Value::Kind::Int) return std::nullopt;
            return Value::str(std::to_string(v.i));
        case Builtin::Identity: return v;
        }
    }
    for (const auto& [from, to] : cases)
        if (from == v) return to;
    return std::nullopt;
}

std::string_view to_string(ValueMapping::Builtin b) {
    switch (b) {
    case ValueMapping::Builtin::WrapSome: return "wrap-some";
    case ValueMapping::Builtin::ToNone: return "to-none";
    case ValueMapping::Builtin::ToList: return "to-list";
    case ValueMapping::Builtin::BoolToInt: return "bool-to-int";
    case ValueMapping::Builtin::IntToString: return "int-to-string";
    case ValueMapping::Builtin::Identity: return "identity";
    }
    return "?";
}

std::optional<ValueMapping::Builtin> builtin_from_string(std::string_view name) {
    using B = ValueMapping::Builtin;
    for (B b : {B::WrapSome, B::ToNone, B::ToList, B::BoolToInt, B::IntToString, B::Identity})
        if (to_string(b) == name) return b;
    return std::nullopt;
}

// ── type edits ─────────────────────────────────────────────────────────

namespace {

[[noreturn]] void path_not_found(const TypePath& path, const std::string& why) {
    throw Error(ErrorCode::PathNotFound, "path '" + format_path(path) + "': " + why);
}

TypeExpr& navigate(TypeExpr& root, const TypePath& path) {
    TypeExpr* node = &root;
    for (std::size_t k = 0; k < path.size(); ++k) {
        const PathStep& step = path[k];
        TypePath prefix(path.begin(), path.begin() + static_cast<std::ptrdiff_t>(k));
        if (node->kind == TypeExpr::Kind::Named)
            path_not_found(path, "crosses alias '" + node->alias + "'; edit the definition instead");
        switch (step.kind) {
        case PathStep::Kind::Field: {
            if (node->kind != TypeExpr::Kind::Record) path_not_found(path, "'" + format_path(prefix) + "' is not a record");
            auto it = std::find_if(node->fields.begin(), node->fields.end(),
                                   [&](const Field& f) { return f.label == step.label; });
            if (it == node->fields.end()) path_not_found(path, "no field '" + step.label + "'");
            node = &it->type;
            break;
        }
        case PathStep::Kind::Elem:
            if (node->kind != TypeExpr::Kind::List) path_not_found(path, "'" + format_path(prefix) + "' is not a list");
            node = &node->inner.front();
            break;
        case PathStep::Kind::Some:
            if (node->kind != TypeExpr::Kind::Option) path_not_found(path, "'" + format_path(prefix) + "' is not an option");
            node = &node->inner.front();
            break;
        case PathStep::Kind::Payload: {
            if (node->kind != TypeExpr::Kind::Variant) path_not_found(path, "'" + format_path(prefix) + "' is not a variant");
            auto it = std::find_if(node->cases.begin(), node->cases.end(),
                                   [&](const Case& c) { return c.label == step.label; });
            if (it == node->cases.end()) path_not_found(path, "no case '" + step.label + "'");
            if (step.index >= it->payload.size()) path_not_found(path, "payload index out of range");
            node = &it->payload[step.index];
            break;
        }
        }
    }
    return *node;
}

TypeExpr& record_at(TypeExpr& root, const TypePath& path) {
    TypeExpr& node = navigate(root, path);
    if (node.kind != TypeExpr::Kind::Record) path_not_found(path, "not a record");
    return node;
}

TypeExpr& variant_at(TypeExpr& root, const TypePath& path) {
    TypeExpr& node = navigate(root, path);
    if (node.kind != TypeExpr::Kind::Variant) path_not_found(path, "not a variant");
    return node;
}

bool contains_alias(const TypeExpr& t) {
    if (t.kind == TypeExpr::Kind::Named) return true;
    for (const auto& i : t.inner)
        if (contains_alias(i)) return true;
    for (const auto& f : t.fields)
        if (contains_alias(f.type)) return true;
    for (const auto& c : t.cases)
        for (const auto& p : c.payload)
            if (contains_alias(p)) return true;
    return false;
}

template <class Items>
auto find_label(Items& items, std::string_view label) {
    return std::find_if(items.begin(), items.end(), [&](const auto& x) { return x.label == label; });
}

struct EditApplier {
    TypeExpr& root;

    void operator()(const edit::AddField& e) {
        TypeExpr& rec = record_at(root, e.path);
        if (rec.find_field(e.label)) throw Error(ErrorCode::DuplicateLabel, "field '" + e.label + "' already exists");
        if (e.default_value && !contains_alias(e.type)) {
            auto report = conforms(*e.default_value, e.type);
            if (!report.ok())
                throw Error(ErrorCode::NonConforming, "default for '" + e.label + "' does not conform to " + describe(e.type));
        }
        std::size_t pos = e.position.value_or(rec.fields.size());
        if (pos > rec.fields.size()) path_not_found(e.path, "position out of range");
        rec.fields.insert(rec.fields.begin() + static_cast<std::ptrdiff_t>(pos), Field{e.label, e.type});
    }
    void operator()(const edit::RemoveField& e) {
        TypeExpr& rec = record_at(root, e.path);
        auto it = find_label(rec.fields, e.label);
        if (it == rec.fields.end()) path_not_found(e.path, "no field '" + e.label + "'");
        rec.fields.erase(it);
    }
    void operator()(const edit::RenameField& e) {
        TypeExpr& rec = record_at(root, e.path);
        auto it = find_label(rec.fields, e.from);
        if (it == rec.fields.end()) path_not_found(e.path, "no field '" + e.from + "'");
        if (e.from != e.to && rec.find_field(e.to))
            throw Error(ErrorCode::DuplicateLabel, "field '" + e.to + "' already exists");
        it->label = e.to;
    }
    void operator()(const edit::ChangeFieldType& e) {
        if (e.label.empty()) {
            navigate(root, e.path) = e.type;
            return;
        }
        TypeExpr& rec = record_at(root, e.path);
        auto it = find_label(rec.fields, e.label);
        if (it == rec.fields.end()) path_not_found(e.path, "no field '" + e.label + "'");
        it->type = e.type;
    }
    void operator()(const edit::AddCase& e) {
        TypeExpr& var = variant_at(root, e.path);
        if (var.find_case(e.label)) throw Error(ErrorCode::DuplicateLabel, "case '" + e.label + "' already exists");
        std::size_t pos = e.position.value_or(var.cases.size());
        if (pos > var.cases.size()) path_not_found(e.path, "position out of range");
        var.cases.insert(var.cases.begin() + static_cast<std::ptrdiff_t>(pos), Case{e.label, e.payload});
    }
    void operator()(const edit::RemoveCase& e) {
        TypeExpr& var = variant_at(root, e.path);
        auto it = find_label(var.cases, e.label);
        if (it == var.cases.end()) path_not_found(e.path, "no case '" + e.label + "'");
        var.cases.erase(it);
    }
    void operator()(const edit::RenameCase& e) {
        TypeExpr& var = variant_at(root, e.path);
        auto it = find_label(var.cases, e.from);
        if (it == var.cases.end()) path_not_found(e.path, "no case '" + e.from + "'");
        if (e.from != e.to && var.find_case(e.to))
            throw Error(ErrorCode::DuplicateLabel, "case '" + e.to + "' already exists");
        it->label = e.to;
    }
    void operator()(const edit::ChangeCasePayload& e) {
        TypeExpr& var = variant_at(root, e.path);
        auto it = find_label(var.cases, e.label);
        if (it == var.cases.end()) path_not_found(e.path, "no case '" + e.label + "'");
        it->payload = e.payload;
    }
};

} // namespace

TypeExpr apply_type_edit(const TypeExpr& type, const TypeEdit& e) {
    TypeExpr out = type;
    std::visit(EditApplier{out}, e);
    return out;
}

TypeExpr apply_type_edits(TypeExpr type, const std::vector<TypeEdit>& edits) {
    for (const auto& e : edits) type = apply_type_edit(type, e);
    return type;
}

const TypeExpr& resolve_path(const TypeExpr& type, const TypePath& path) {
    // navigate() only mutates through the returned reference.
    return navigate(const_cast<TypeExpr&>(type), path);
}

// ── diff ───────────────────────────────────────────────────────────────

namespace {

bool refinable(const TypeExpr& a, const TypeExpr& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
    case TypeExpr::Kind::Record:
    case TypeExpr::Kind::Variant: return true;
    case TypeExpr::Kind::List:
    case TypeExpr::Kind::Option: return refinable(a.element(), b.element());
    default: return false;
    }
}

/// Longest common subsequence of two label sequences (the labels that keep
/// their relative order).
std::set<std::string> stable_labels(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    const std::size_t n = a.size(), m = b.size();
    std::vector<std::vector<std::size_t>> dp(n + 1, std::vector<std::size_t>(m + 1, 0));
    for (std::size_t i = n; i-- > 0;)
        for (std::size_t j = m; j-- > 0;)
            dp[i][j] = a[i] == b[j] ? dp[i + 1][j + 1] + 1 : std::max(dp[i + 1][j], dp[i][j + 1]);
    std::set<std::string> out;
    for (std::size_t i = 0, j = 0; i < n && j < m;) {
        if (a[i] == b[j]) {
            out.insert(a[i]);
            ++i;
            ++j;
        } else if (dp[i + 1][j] >= dp[i][j + 1]) {
            ++i;
        } else {
            ++j;
        }
    }
    return out;
}

struct Differ {
    DiffResult& result;

    void node(const TypePath& path, const TypeExpr& a, const TypeExpr& b) {
        if (a == b) return;
        if (a.kind == TypeExpr::Kind::Record && b.kind == TypeExpr::Kind::Record) return record(path, a, b);
        if (a.kind == TypeExpr::Kind::Variant && b.kind == TypeExpr::Kind::Variant) return variant(path, a, b);
        if (refinable(a, b)) {
            TypePath inner = path;
            inner.push_back({a.kind == TypeExpr::Kind::List ? PathStep::Kind::Elem : PathStep::Kind::Some, "", 0});
            return node(inner, a.element(), b.element());
        }
        if (!path.empty() && path.back().kind == PathStep::Kind::Field) {
            TypePath parent(path.begin(), path.end() - 1);
            result.edits.push_back(edit::ChangeFieldType{parent, path.back().label, b, std::nullopt});
        } else {
            result.edits.push_back(edit::ChangeFieldType{path, "", b, std::nullopt});
        }
    }

    template <class Item>
    static std::vector<std::string> labels(const std::vector<Item>& items) {
        std::vector<std::string> out;
        for (const auto& x : items) out.push_back(x.label);
        return out;
    }

    void record(const TypePath& path, const TypeExpr& a, const TypeExpr& b) {
        auto old_labels = labels(a.fields), new_labels = labels(b.fields);
        std::vector<std::string> common_old, common_new, removed, added;
        for (const auto& l : old_labels) (b.find_field(l) ? common_old : removed).push_back(l);
        for (const auto& l : new_labels) (a.find_field(l) ? common_new : added).push_back(l);
        auto stable = stable_labels(common_old, common_new);
        std::vector<std::string> moved;
        for (const auto& l : common_new)
            if (!stable.count(l)) moved.push_back(l);

        for (const auto& l : old_labels)
            if (!stable.count(l)) result.edits.push_back(edit::RemoveField{path, l});
        for (const auto& l : common_old) {
            if (!stable.count(l)) continue;
            TypePath sub = path;
            sub.push_back({PathStep::Kind::Field, l, 0});
            node(sub, a.find_field(l)->type, b.find_field(l)->type);
        }
        for (std::size_t k = 0; k < b.fields.size(); ++k) {
            const Field& f = b.fields[k];
            if (stable.count(f.label)) continue;
            result.edits.push_back(edit::AddField{path, f.label, f.type, std::nullopt, k});
        }
        if (!removed.empty() && !added.empty())
            result.ambiguities.push_back({Ambiguity::Kind::AmbiguousRename, path, removed, added});
        if (!moved.empty()) result.ambiguities.push_back({Ambiguity::Kind::MovedField, path, moved, moved});
    }

    void variant(const TypePath& path, const TypeExpr& a, const TypeExpr& b) {
        auto old_labels = labels(a.cases), new_labels = labels(b.cases);
        std::vector<std::string> common_old, common_new, removed, added;
        for (const auto& l : old_labels) (b.find_case(l) ? common_old : removed).push_back(l);
        for (const auto& l : new_labels) (a.find_case(l) ? common_new : added).push_back(l);
        auto stable = stable_labels(common_old, common_new);
        std::vector<std::string> moved;
        for (const auto& l : common_new)
            if (!stable.count(l)) moved.push_back(l);

        for (const auto& l : old_labels)
            if (!stable.count(l)) result.edits.push_back(edit::RemoveCase{path, l});
        for (const auto& l : common_old) {
            if (!stable.count(l)) continue;
            const Case* ca = a.find_case(l);
            const Case* cb = b.find_case(l);
            if (ca->payload != cb->payload) result.edits.push_back(edit::ChangeCasePayload{path, l, cb->payload});
        }
        for (std::size_t k = 0; k < b.cases.size(); ++k) {
            const Case& c = b.cases[k];
            if (stable.count(c.label)) continue;
            result.edits.push_back(edit::AddCase{path, c.label, c.payload, k});
        }
        if (!removed.empty() && !added.empty())
            result.ambiguities.push_back({Ambiguity::Kind::AmbiguousRename, path, removed, added});
        if (!moved.empty()) result.ambiguities.push_back({Ambiguity::Kind::MovedField, path, moved, moved});
    }
};

} // namespace

DiffResult type_diff(const TypeExpr& old_type, const TypeExpr& new_type,
                     const std::vector<RenameDirective>& directives) {
    DiffResult result;
    TypeExpr renamed = old_type;
    for (const auto& d : directives) {
        const TypeExpr& target = resolve_path(renamed, d.path);
        TypeEdit e;
        if (target.kind == TypeExpr::Kind::Record)
            e = edit::RenameField{d.path, d.from, d.to};
        else if (target.kind == TypeExpr::Kind::Variant)
            e = edit::RenameCase{d.path, d.from, d.to};
        else
            path_not_found(d.path, "rename directive must address a record or variant");
        renamed = apply_type_edit(renamed, e);
        result.edits.push_back(std::move(e));
    }
    Differ{result}.node({}, renamed, new_type);
    return result;
}

} // namespace schemakit
