// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Structural type language and value model. Types and values are plain
// immutable-by-convention value types; every operation over them is a
// pure function.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace schemakit {

enum class Prim { Bool, Int, String, DateTime, Id };

std::string_view to_string(Prim p);
std::optional<Prim> prim_from_string(std::string_view name);

struct Field;
struct Case;

struct TypeExpr {
    enum class Kind { Prim, Option, List, Record, Variant, Named };

    Kind kind = Kind::Prim;
    Prim prim = Prim::Int;
    std::vector<TypeExpr> inner;  // exactly one element for Option/List
    std::vector<Field> fields;    // Record
    std::vector<Case> cases;      // Variant
    std::string alias;            // Named

    static TypeExpr primitive(Prim p);
    static TypeExpr option(TypeExpr t);
    static TypeExpr list(TypeExpr t);
    static TypeExpr record(std::vector<Field> fields);
    static TypeExpr variant(std::vector<Case> cases);
    static TypeExpr named(std::string alias);

    bool is_prim(Prim p) const { return kind == Kind::Prim && prim == p; }
    const TypeExpr& element() const { return inner.front(); }

    const Field* find_field(std::string_view label) const;
    const Case* find_case(std::string_view label) const;

    bool operator==(const TypeExpr& other) const;
};

struct Field {
    std::string label;
    TypeExpr type;
    bool operator==(const Field&) const = default;
};

struct Case {
    std::string label;
    std::vector<TypeExpr> payload;
    bool operator==(const Case&) const = default;
};

/// Alias table for Named types.
using TypeDefs = std::map<std::string, TypeExpr, std::less<>>;

/// Human-readable rendering, e.g. `{ id : id; done : option<bool> }`.
std::string describe(const TypeExpr& t);

/// Calendar date with optional time of day. Date-only values serialize as
/// `YYYY-MM-DD`, otherwise `YYYY-MM-DDTHH:MM:SS`.
struct DateTime {
    int year = 1970;
    int month = 1;
    int day = 1;
    std::optional<int> hour;
    int minute = 0;
    int second = 0;

    std::string iso() const;
    static std::optional<DateTime> parse(std::string_view text);

    auto operator<=>(const DateTime&) const = default;
};

struct RecordEntry;

struct Value {
    enum class Kind { Bool, Int, Str, DateTime, Id, None, Some, List, Record, Variant };

    Kind kind = Kind::None;
    bool b = false;
    std::int64_t i = 0;         // Int and Id
    std::string s;              // Str; Variant label
    DateTime dt;
    std::vector<Value> items;   // Some (one item), List, Variant payload
    std::vector<RecordEntry> entries;

    static Value boolean(bool v);
    static Value integer(std::int64_t v);
    static Value str(std::string v);
    static Value datetime(DateTime v);
    static Value id(std::int64_t v);
    static Value none();
    static Value some(Value v);
    static Value list(std::vector<Value> v);
    static Value record(std::vector<RecordEntry> entries);
    static Value variant(std::string label, std::vector<Value> payload);

    bool is_none() const { return kind == Kind::None; }
    const Value* get(std::string_view label) const;
    Value* get(std::string_view label);

    bool operator==(const Value& other) const;
    /// Total order, used for sorting and canonical grouping.
    bool operator<(const Value& other) const;
};

struct RecordEntry {
    std::string label;
    Value value;
    bool operator==(const RecordEntry&) const = default;
};

/// Rendering close to the source listings: `{ id = 1; title = "x" }`.
std::string describe(const Value& v);

/// Step in a path through a type (and correspondingly through a value).
struct PathStep {
    enum class Kind { Field, Elem, Some, Payload };
    Kind kind = Kind::Field;
    std::string label;      // Field / Payload case label
    std::size_t index = 0;  // Payload position

    bool operator==(const PathStep&) const = default;
};

/// Path syntax: `.label` field, `[]` list element, `?` option inner,
/// `|Case:n` n-th payload of variant case. Empty string is the root.
using TypePath = std::vector<PathStep>;

std::string format_path(const TypePath& path);
TypePath parse_path(std::string_view text);

} // namespace schemakit
