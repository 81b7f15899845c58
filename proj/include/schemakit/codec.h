// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Canonical JSON for types, values and type edits.
//
//   type   {"prim":"int"} | {"option":T} | {"list":T}
//          | {"record":[{"label":l,"type":T}...]}
//          | {"variant":[{"label":l,"payload":[T...]}...]} | {"named":"Alias"}
//   value  {"bool":b} | {"int":n} | {"str":s} | {"datetime":"2024-05-01"}
//          | {"id":n} | {"none":null} | {"some":V} | {"list":[V...]}
//          | {"record":{label:V,...}} | {"variant":{"label":l,"payload":[V...]}}
//
// Keys are emitted in a fixed order; record entries keep their order.
#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "schemakit/schema.h"

namespace schemakit {

using Json = nlohmann::ordered_json;

Json to_json(const TypeExpr& t);
TypeExpr type_from_json(const Json& j);

Json to_json(const TypeDefs& defs);
TypeDefs defs_from_json(const Json& j);

Json to_json(const Value& v);
Value value_from_json(const Json& j);

Json to_json(const ValueMapping& m);
ValueMapping mapping_from_json(const Json& j);

Json to_json(const TypeEdit& e);
TypeEdit type_edit_from_json(const Json& j);

Json to_json(const Ambiguity& a);

/// One compact JSON document per line.
std::string dump_line(const Json& j);

Json read_json_file(const std::filesystem::path& path);
std::vector<Json> read_json_lines(const std::filesystem::path& path);
std::vector<Json> parse_json_lines(const std::string& text);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Field access helpers that raise InvalidFormat with the key name.
const Json& require(const Json& j, const char* key);
std::string require_string(const Json& j, const char* key);

} // namespace schemakit
