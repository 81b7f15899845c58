// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
#include "schemakit/types.h"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "schemakit/error.h"

namespace schemakit {

std::string_view to_string(Prim p) {
    switch (p) {
    case Prim::Bool: return "bool";
    case Prim::Int: return "int";
    case Prim::String: return "string";
    case Prim::DateTime: return "datetime";
    case Prim::Id: return "id";
    }
    return "?";
}

std::optional<Prim> prim_from_string(std::string_view name) {
    if (name == "bool") return Prim::Bool;
    if (name == "int") return Prim::Int;
    if (name == "string") return Prim::String;
    if (name == "datetime") return Prim::DateTime;
    if (name == "id") return Prim::Id;
    return std::nullopt;
}

TypeExpr TypeExpr::primitive(Prim p) {
    TypeExpr t;
    t.kind = Kind::Prim;
    t.prim = p;
    return t;
}

TypeExpr TypeExpr::option(TypeExpr inner) {
    TypeExpr t;
    t.kind = Kind::Option;
    t.inner.push_back(std::move(inner));
    return t;
}

TypeExpr TypeExpr::list(TypeExpr inner) {
    TypeExpr t;
    t.kind = Kind::List;
    t.inner.push_back(std::move(inner));
    return t;
}

TypeExpr TypeExpr::record(std::vector<Field> fields) {
    TypeExpr t;
    t.kind = Kind::Record;
    t.fields = std::move(fields);
    return t;
}

TypeExpr TypeExpr::variant(std::vector<Case> cases) {
    TypeExpr t;
    t.kind = Kind::Variant;
    t.cases = std::move(cases);
    return t;
}

TypeExpr TypeExpr::named(std::string alias) {
    TypeExpr t;
    t.kind = Kind::Named;
    t.alias = std::move(alias);
    return t;
}

const Field* TypeExpr::find_field(std::string_view label) const {
    for (const auto& f : fields)
        if (f.label == label) return &f;
    return nullptr;
}

const Case* TypeExpr::find_case(std::string_view label) const {
    for (const auto& c : cases)
        if (c.label == label) return &c;
    return nullptr;
}

bool TypeExpr::operator==(const TypeExpr& o) const {
    if (kind != o.kind) return false;
    switch (kind) {
    case Kind::Prim: return prim == o.prim;
    case Kind::Option:
    case Kind::List: return inner == o.inner;
    case Kind::Record: return fields == o.fields;
    case Kind::Variant: return cases == o.cases;
    case Kind::Named: return alias == o.alias;
    }
    return false;
}

std::string describe(const TypeExpr& t) {
    switch (t.kind) {
    case TypeExpr::Kind::Prim: return std::string(to_string(t.prim));
    case TypeExpr::Kind::Option: return "option<" + describe(t.element()) + ">";
    case TypeExpr::Kind::List: return "list<" + describe(t.element()) + ">";
    case TypeExpr::Kind::Named: return t.alias;
    case TypeExpr::Kind::Record: {
        std::string out = "{ ";
        for (std::size_t i = 0; i < t.fields.size(); ++i) {
            if (i) out += "; ";
            out += t.fields[i].label + " : " + describe(t.fields[i].type);
        }
        return out + " }";
    }
    case TypeExpr::Kind::Variant: {
        std::string out;
        for (std::size_t i = 0; i < t.cases.size(); ++i) {
            if (i) out += " ";
            out += "| " + t.cases[i].label;
            for (std::size_t k = 0; k < t.cases[i].payload.size(); ++k)
                out += (k ? " * " : " of ") + describe(t.cases[i].payload[k]);
        }
        return out;
    }
    }
    return "?";
}

std::string DateTime::iso() const {
    char buf[32];
    if (hour)
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d", year, month, day, *hour, minute, second);
    else
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    return buf;
}

namespace {

bool parse_fixed(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    auto first = s.data() + pos;
    auto [p, ec] = std::from_chars(first, first + len, out);
    return ec == std::errc{} && p == first + len;
}

bool days_valid(int y, int m, int d) {
    static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m < 1 || m > 12 || d < 1) return false;
    int limit = kDays[m - 1];
    bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    if (m == 2 && leap) limit = 29;
    return d <= limit;
}

} // namespace

std::optional<DateTime> DateTime::parse(std::string_view s) {
    DateTime dt;
    if (s.size() != 10 && s.size() != 19) return std::nullopt;
    if (s[4] != '-' || s[7] != '-') return std::nullopt;
    if (!parse_fixed(s, 0, 4, dt.year) || !parse_fixed(s, 5, 2, dt.month) || !parse_fixed(s, 8, 2, dt.day))
        return std::nullopt;
    if (!days_valid(dt.year, dt.month, dt.day)) return std::nullopt;
    if (s.size() == 19) {
        int h = 0;
        if (s[10] != 'T' || s[13] != ':' || s[16] != ':') return std::nullopt;
        if (!parse_fixed(s, 11, 2, h) || !parse_fixed(s, 14, 2, dt.minute) || !parse_fixed(s, 17, 2, dt.second))
            return std::nullopt;
        if (h > 23 || dt.minute > 59 || dt.second > 59) return std::nullopt;
        dt.hour = h;
    }
    return dt;
}

Value Value::boolean(bool v) {
    Value x;
    x.kind = Kind::Bool;
    x.b = v;
    return x;
}

Value Value::integer(std::int64_t v) {
    Value x;
    x.kind = Kind::Int;
    x.i = v;
    return x;
}

Value Value::str(std::string v) {
    Value x;
    x.kind = Kind::Str;
    x.s = std::move(v);
    return x;
}

Value Value::datetime(DateTime v) {
    Value x;
    x.kind = Kind::DateTime;
    x.dt = v;
    return x;
}

Value Value::id(std::int64_t v) {
    Value x;
    x.kind = Kind::Id;
    x.i = v;
    return x;
}

Value Value::none() { return Value{}; }

Value Value::some(Value v) {
    Value x;
    x.kind = Kind::Some;
    x.items.push_back(std::move(v));
    return x;
}

Value Value::list(std::vector<Value> v) {
    Value x;
    x.kind = Kind::List;
    x.items = std::move(v);
    return x;
}

Value Value::record(std::vector<RecordEntry> entries) {
    Value x;
    x.kind = Kind::Record;
    x.entries = std::move(entries);
    return x;
}

Value Value::variant(std::string label, std::vector<Value> payload) {
    Value x;
    x.kind = Kind::Variant;
    x.s = std::move(label);
    x.items = std::move(payload);
    return x;
}

const Value* Value::get(std::string_view label) const {
    for (const auto& e : entries)
        if (e.label == label) return &e.value;
    return nullptr;
}

Value* Value::get(std::string_view label) {
    for (auto& e : entries)
        if (e.label == label) return &e.value;
    return nullptr;
}

bool Value::operator==(const Value& o) const {
    if (kind != o.kind) return false;
    switch (kind) {
    case Kind::Bool: return b == o.b;
    case Kind::Int:
    case Kind::Id: return i == o.i;
    case Kind::Str: return s == o.s;
    case Kind::DateTime: return dt == o.dt;
    case Kind::None: return true;
    case Kind::Some:
    case Kind::List: return items == o.items;
    case Kind::Record: return entries == o.entries;
    case Kind::Variant: return s == o.s && items == o.items;
    }
    return false;
}

bool Value::operator<(const Value& o) const {
    if (kind != o.kind) return kind < o.kind;
    switch (kind) {
    case Kind::Bool: return b < o.b;
    case Kind::Int:
    case Kind::Id: return i < o.i;
    case Kind::Str: return s < o.s;
    case Kind::DateTime: return dt < o.dt;
    case Kind::None: return false;
    case Kind::Some:
    case Kind::List: return items < o.items;
    case Kind::Record: {
        return std::lexicographical_compare(
            entries.begin(), entries.end(), o.entries.begin(), o.entries.end(),
            [](const RecordEntry& a, const RecordEntry& b) {
                if (a.label != b.label) return a.label < b.label;
                return a.value < b.value;
            });
    }
    case Kind::Variant:
        if (s != o.s) return s < o.s;
        return items < o.items;
    }
    return false;
}

std::string describe(const Value& v) {
    switch (v.kind) {
    case Value::Kind::Bool: return v.b ? "true" : "false";
    case Value::Kind::Int: return std::to_string(v.i);
    case Value::Kind::Id: return "#" + std::to_string(v.i);
    case Value::Kind::Str: return "\"" + v.s + "\"";
    case Value::Kind::DateTime: return "DateTime(" + v.dt.iso() + ")";
    case Value::Kind::None: return "Nothing";
    case Value::Kind::Some: return "Just(" + describe(v.items.front()) + ")";
    case Value::Kind::List: {
        std::string out = "[";
        for (std::size_t k = 0; k < v.items.size(); ++k) out += (k ? ", " : "") + describe(v.items[k]);
        return out + "]";
    }
    case Value::Kind::Record: {
        std::string out = "{ ";
        for (std::size_t k = 0; k < v.entries.size(); ++k)
            out += (k ? "; " : "") + v.entries[k].label + " = " + describe(v.entries[k].value);
        return out + " }";
    }
    case Value::Kind::Variant: {
        std::string out = v.s;
        for (std::size_t k = 0; k < v.items.size(); ++k) out += (k ? ", " : "(") + describe(v.items[k]);
        return v.items.empty() ? out : out + ")";
    }
    }
    return "?";
}

std::string format_path(const TypePath& path) {
    std::string out;
    for (const auto& step : path) {
        switch (step.kind) {
        case PathStep::Kind::Field: out += "." + step.label; break;
        case PathStep::Kind::Elem: out += "[]"; break;
        case PathStep::Kind::Some: out += "?"; break;
        case PathStep::Kind::Payload: out += "|" + step.label + ":" + std::to_string(step.index); break;
        }
    }
    return out;
}

namespace {

bool is_label_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

} // namespace

TypePath parse_path(std::string_view text) {
    TypePath path;
    std::size_t pos = 0;
    auto fail = [&](const char* why) {
        throw Error(ErrorCode::InvalidFormat, "bad type path '" + std::string(text) + "': " + why);
    };
    auto read_label = [&] {
        std::size_t start = pos;
        while (pos < text.size() && is_label_char(text[pos])) ++pos;
        if (start == pos) fail("expected label");
        return std::string(text.substr(start, pos - start));
    };
    while (pos < text.size()) {
        char c = text[pos];
        if (c == '.') {
            ++pos;
            path.push_back({PathStep::Kind::Field, read_label(), 0});
        } else if (c == '[') {
            if (text.substr(pos, 2) != "[]") fail("expected []");
            pos += 2;
            path.push_back({PathStep::Kind::Elem, "", 0});
        } else if (c == '?') {
            ++pos;
            path.push_back({PathStep::Kind::Some, "", 0});
        } else if (c == '|') {
            ++pos;
            std::string label = read_label();
            if (pos >= text.size() || text[pos] != ':') fail("expected ':' after case label");
            ++pos;
            std::size_t start = pos;
            while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
            if (start == pos) fail("expected payload index");
            std::size_t index = std::stoul(std::string(text.substr(start, pos - start)));
            path.push_back({PathStep::Kind::Payload, label, index});
        } else {
            fail("unexpected character");
        }
    }
    return path;
}

} // namespace schemakit
