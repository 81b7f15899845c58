// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
#include "schemakit/codec.h"

#include <fstream>
#include <sstream>

#include "schemakit/error.h"

namespace schemakit {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::InvalidFormat, what); }

std::string single_key(const Json& j, const char* what) {
    if (!j.is_object() || j.size() != 1) bad(std::string("expected single-key tagged object for ") + what);
    return j.begin().key();
}

} // namespace

const Json& require(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) bad(std::string("missing key '") + key + "'");
    return j.at(key);
}

std::string require_string(const Json& j, const char* key) {
    const Json& v = require(j, key);
    if (!v.is_string()) bad(std::string("key '") + key + "' must be a string");
    return v.get<std::string>();
}

Json to_json(const TypeExpr& t) {
    Json j = Json::object();
    switch (t.kind) {
    case TypeExpr::Kind::Prim: j["prim"] = std::string(to_string(t.prim)); break;
    case TypeExpr::Kind::Option: j["option"] = to_json(t.element()); break;
    case TypeExpr::Kind::List: j["list"] = to_json(t.element()); break;
    case TypeExpr::Kind::Named: j["named"] = t.alias; break;
    case TypeExpr::Kind::Record: {
        Json fields = Json::array();
        for (const auto& f : t.fields) fields.push_back(Json{{"label", f.label}, {"type", to_json(f.type)}});
        j["record"] = std::move(fields);
        break;
    }
    case TypeExpr::Kind::Variant: {
        Json cases = Json::array();
        for (const auto& c : t.cases) {
            Json payload = Json::array();
            for (const auto& p : c.payload) payload.push_back(to_json(p));
            cases.push_back(Json{{"label", c.label}, {"payload", std::move(payload)}});
        }
        j["variant"] = std::move(cases);
        break;
    }
    }
    return j;
}

TypeExpr type_from_json(const Json& j) {
    std::string tag = single_key(j, "type");
    const Json& body = j.begin().value();
    if (tag == "prim") {
        auto p = body.is_string() ? prim_from_string(body.get<std::string>()) : std::nullopt;
        if (!p) bad("unknown primitive " + body.dump());
        return TypeExpr::primitive(*p);
    }
    if (tag == "option") return TypeExpr::option(type_from_json(body));
    if (tag == "list") return TypeExpr::list(type_from_json(body));
    if (tag == "named") {
        if (!body.is_string()) bad("named type must be a string");
        return TypeExpr::named(body.get<std::string>());
    }
    if (tag == "record") {
        if (!body.is_array()) bad("record fields must be an array");
        std::vector<Field> fields;
        for (const auto& f : body) {
            std::string label = require_string(f, "label");
            for (const auto& existing : fields)
                if (existing.label == label) throw Error(ErrorCode::DuplicateLabel, "duplicate field '" + label + "'");
            fields.push_back({label, type_from_json(require(f, "type"))});
        }
        return TypeExpr::record(std::move(fields));
    }
    if (tag == "variant") {
        if (!body.is_array()) bad("variant cases must be an array");
        std::vector<Case> cases;
        for (const auto& c : body) {
            Case out{require_string(c, "label"), {}};
            for (const auto& existing : cases)
                if (existing.label == out.label) throw Error(ErrorCode::DuplicateLabel, "duplicate case '" + out.label + "'");
            if (c.contains("payload"))
                for (const auto& p : c.at("payload")) out.payload.push_back(type_from_json(p));
            cases.push_back(std::move(out));
        }
        return TypeExpr::variant(std::move(cases));
    }
    bad("unknown type tag '" + tag + "'");
}

Json to_json(const TypeDefs& defs) {
    Json j = Json::object();
    for (const auto& [name, t] : defs) j[name] = to_json(t);
    return j;
}

TypeDefs defs_from_json(const Json& j) {
    if (!j.is_object()) bad("type definitions must be an object");
    TypeDefs defs;
    for (const auto& [name, t] : j.items()) defs.emplace(name, type_from_json(t));
    return defs;
}

Json to_json(const Value& v) {
    Json j = Json::object();
    switch (v.kind) {
    case Value::Kind::Bool: j["bool"] = v.b; break;
    case Value::Kind::Int: j["int"] = v.i; break;
    case Value::Kind::Id: j["id"] = v.i; break;
    case Value::Kind::Str: j["str"] = v.s; break;
    case Value::Kind::DateTime: j["datetime"] = v.dt.iso(); break;
    case Value::Kind::None: j["none"] = nullptr; break;
    case Value::Kind::Some: j["some"] = to_json(v.items.front()); break;
    case Value::Kind::List: {
        Json items = Json::array();
        for (const auto& x : v.items) items.push_back(to_json(x));
        j["list"] = std::move(items);
        break;
    }
    case Value::Kind::Record: {
        Json entries = Json::object();
        for (const auto& e : v.entries) entries[e.label] = to_json(e.value);
        j["record"] = std::move(entries);
        break;
    }
    case Value::Kind::Variant: {
        Json payload = Json::array();
        for (const auto& x : v.items) payload.push_back(to_json(x));
        j["variant"] = Json{{"label", v.s}, {"payload", std::move(payload)}};
        break;
    }
    }
    return j;
}

Value value_from_json(const Json& j) {
    std::string tag = single_key(j, "value");
    const Json& body = j.begin().value();
    if (tag == "bool") {
        if (!body.is_boolean()) bad("bool value must be boolean");
        return Value::boolean(body.get<bool>());
    }
    if (tag == "int" || tag == "id") {
        if (!body.is_number_integer()) bad(tag + " value must be an integer");
        return tag == "int" ? Value::integer(body.get<std::int64_t>()) : Value::id(body.get<std::int64_t>());
    }
    if (tag == "str") {
        if (!body.is_string()) bad("str value must be a string");
        return Value::str(body.get<std::string>());
    }
    if (tag == "datetime") {
        auto dt = body.is_string() ? DateTime::parse(body.get<std::string>()) : std::nullopt;
        if (!dt) bad("bad datetime " + body.dump());
        return Value::datetime(*dt);
    }
    if (tag == "none") return Value::none();
    if (tag == "some") return Value::some(value_from_json(body));
    if (tag == "list") {
        if (!body.is_array()) bad("list value must be an array");
        std::vector<Value> items;
        for (const auto& x : body) items.push_back(value_from_json(x));
        return Value::list(std::move(items));
    }
    if (tag == "record") {
        if (!body.is_object()) bad("record value must be an object");
        std::vector<RecordEntry> entries;
        for (const auto& [label, x] : body.items()) entries.push_back({label, value_from_json(x)});
        return Value::record(std::move(entries));
    }
    if (tag == "variant") {
        std::vector<Value> payload;
        if (body.contains("payload"))
            for (const auto& x : body.at("payload")) payload.push_back(value_from_json(x));
        return Value::variant(require_string(body, "label"), std::move(payload));
    }
    bad("unknown value tag '" + tag + "'");
}

Json to_json(const ValueMapping& m) {
    if (m.builtin) return Json{{"builtin", std::string(to_string(*m.builtin))}};
    Json cases = Json::array();
    for (const auto& [from, to] : m.cases) cases.push_back(Json{{"from", to_json(from)}, {"to", to_json(to)}});
    return Json{{"cases", std::move(cases)}};
}

ValueMapping mapping_from_json(const Json& j) {
    if (j.contains("builtin")) {
        auto b = builtin_from_string(require_string(j, "builtin"));
        if (!b) bad("unknown builtin transform " + j.at("builtin").dump());
        return ValueMapping::of_builtin(*b);
    }
    std::vector<std::pair<Value, Value>> cases;
    for (const auto& c : require(j, "cases"))
        cases.emplace_back(value_from_json(require(c, "from")), value_from_json(require(c, "to")));
    return ValueMapping::of_cases(std::move(cases));
}

namespace {

Json payload_json(const std::vector<TypeExpr>& payload) {
    Json out = Json::array();
    for (const auto& t : payload) out.push_back(to_json(t));
    return out;
}

std::vector<TypeExpr> payload_from(const Json& j) {
    std::vector<TypeExpr> out;
    for (const auto& t : j) out.push_back(type_from_json(t));
    return out;
}

struct EditEncoder {
    Json operator()(const edit::AddField& e) const {
        Json j{{"op", "add_field"}, {"path", format_path(e.path)}, {"label", e.label}, {"type", to_json(e.type)}};
        if (e.default_value) j["default"] = to_json(*e.default_value);
        if (e.position) j["position"] = *e.position;
        return j;
    }
    Json operator()(const edit::RemoveField& e) const {
        return Json{{"op", "remove_field"}, {"path", format_path(e.path)}, {"label", e.label}};
    }
    Json operator()(const edit::RenameField& e) const {
        return Json{{"op", "rename_field"}, {"path", format_path(e.path)}, {"from", e.from}, {"to", e.to}};
    }
    Json operator()(const edit::ChangeFieldType& e) const {
        Json j{{"op", "change_field_type"}, {"path", format_path(e.path)}, {"label", e.label}, {"type", to_json(e.type)}};
        if (e.hint) j["hint"] = to_json(*e.hint);
        return j;
    }
    Json operator()(const edit::AddCase& e) const {
        Json j{{"op", "add_case"}, {"path", format_path(e.path)}, {"label", e.label}, {"payload", payload_json(e.payload)}};
        if (e.position) j["position"] = *e.position;
        return j;
    }
    Json operator()(const edit::RemoveCase& e) const {
        return Json{{"op", "remove_case"}, {"path", format_path(e.path)}, {"label", e.label}};
    }
    Json operator()(const edit::RenameCase& e) const {
        return Json{{"op", "rename_case"}, {"path", format_path(e.path)}, {"from", e.from}, {"to", e.to}};
    }
    Json operator()(const edit::ChangeCasePayload& e) const {
        return Json{{"op", "change_case_payload"}, {"path", format_path(e.path)}, {"label", e.label},
                    {"payload", payload_json(e.payload)}};
    }
};

} // namespace

Json to_json(const TypeEdit& e) { return std::visit(EditEncoder{}, e); }

TypeEdit type_edit_from_json(const Json& j) {
    std::string op = require_string(j, "op");
    TypePath path = j.contains("path") ? parse_path(j.at("path").get<std::string>()) : TypePath{};
    auto position = [&]() -> std::optional<std::size_t> {
        if (!j.contains("position")) return std::nullopt;
        return j.at("position").get<std::size_t>();
    };
    if (op == "add_field") {
        std::optional<Value> def;
        if (j.contains("default")) def = value_from_json(j.at("default"));
        return edit::AddField{path, require_string(j, "label"), type_from_json(require(j, "type")), def, position()};
    }
    if (op == "remove_field") return edit::RemoveField{path, require_string(j, "label")};
    if (op == "rename_field") return edit::RenameField{path, require_string(j, "from"), require_string(j, "to")};
    if (op == "change_field_type") {
        std::optional<ValueMapping> hint;
        if (j.contains("hint")) hint = mapping_from_json(j.at("hint"));
        std::string label = j.contains("label") ? j.at("label").get<std::string>() : std::string{};
        return edit::ChangeFieldType{path, label, type_from_json(require(j, "type")), hint};
    }
    if (op == "add_case") {
        std::vector<TypeExpr> payload = j.contains("payload") ? payload_from(j.at("payload")) : std::vector<TypeExpr>{};
        return edit::AddCase{path, require_string(j, "label"), payload, position()};
    }
    if (op == "remove_case") return edit::RemoveCase{path, require_string(j, "label")};
    if (op == "rename_case") return edit::RenameCase{path, require_string(j, "from"), require_string(j, "to")};
    if (op == "change_case_payload")
        return edit::ChangeCasePayload{path, require_string(j, "label"), payload_from(require(j, "payload"))};
    bad("unknown type edit op '" + op + "'");
}

Json to_json(const Ambiguity& a) {
    Json j;
    j["ambiguity"] = a.kind == Ambiguity::Kind::AmbiguousRename ? "ambiguous_rename" : "moved_field";
    j["path"] = format_path(a.path);
    j["removed"] = a.removed;
    j["added"] = a.added;
    return j;
}

std::string dump_line(const Json& j) { return j.dump() + "\n"; }

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << text;
}

Json read_json_file(const std::filesystem::path& path) {
    try {
        return Json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::InvalidFormat, path.string() + ": " + e.what());
    }
}

std::vector<Json> parse_json_lines(const std::string& text) {
    std::vector<Json> out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(Json::parse(line));
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorCode::InvalidFormat, "line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::vector<Json> read_json_lines(const std::filesystem::path& path) {
    return parse_json_lines(read_text_file(path));
}

} // namespace schemakit
