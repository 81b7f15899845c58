// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace schemakit {

enum class ErrorCode {
    // schema-core
    UnknownAlias,
    PathNotFound,
    DuplicateLabel,
    // migrate
    NeedsInput,
    MappingIncomplete,
    // entity-evolve
    SpecInvalid,
    DanglingReference,
    UnknownId,
    NotInteractive,
    // query-rewrite
    SyntaxError,
    UnknownTable,
    UnknownColumn,
    AmbiguousColumn,
    CannotRewrite,
    // doc
    SelectorMiss,
    Conflict,
    Unrewritable,
    NotNumeric,
    // lens
    Unsupported,
    NonConforming,
    PolicyRequired,
    Untransportable,
    // sm-runtime
    DuplicateState,
    UnknownTarget,
    InvalidMachine,
    BadDirective,
    Rejected,
    InvalidPatch,
    // plumbing
    InvalidFormat,
    IoError,
    UsageError,
};

std::string_view to_string(ErrorCode code);

/// Every operation failure in the library. `details` carries the
/// machine-readable payload (e.g. the input domain for NeedsInput).
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, nlohmann::ordered_json details = {})
        : std::runtime_error(message), code_(code), details_(std::move(details)) {}

    ErrorCode code() const noexcept { return code_; }
    const nlohmann::ordered_json& details() const noexcept { return details_; }

    /// {"error": <code>, "message": ..., "details": ...}
    nlohmann::ordered_json to_json() const;

private:
    ErrorCode code_;
    nlohmann::ordered_json details_;
};

} // namespace schemakit
