// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
#include "schemakit/error.h"

namespace schemakit {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::UnknownAlias: return "UnknownAlias";
    case ErrorCode::PathNotFound: return "PathNotFound";
    case ErrorCode::DuplicateLabel: return "DuplicateLabel";
    case ErrorCode::NeedsInput: return "NeedsInput";
    case ErrorCode::MappingIncomplete: return "MappingIncomplete";
    case ErrorCode::SpecInvalid: return "SpecInvalid";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::NotInteractive: return "NotInteractive";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownTable: return "UnknownTable";
    case ErrorCode::UnknownColumn: return "UnknownColumn";
    case ErrorCode::AmbiguousColumn: return "AmbiguousColumn";
    case ErrorCode::CannotRewrite: return "CannotRewrite";
    case ErrorCode::SelectorMiss: return "SelectorMiss";
    case ErrorCode::Conflict: return "Conflict";
    case ErrorCode::Unrewritable: return "Unrewritable";
    case ErrorCode::NotNumeric: return "NotNumeric";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::NonConforming: return "NonConforming";
    case ErrorCode::PolicyRequired: return "PolicyRequired";
    case ErrorCode::Untransportable: return "Untransportable";
    case ErrorCode::DuplicateState: return "DuplicateState";
    case ErrorCode::UnknownTarget: return "UnknownTarget";
    case ErrorCode::InvalidMachine: return "InvalidMachine";
    case ErrorCode::BadDirective: return "BadDirective";
    case ErrorCode::Rejected: return "Rejected";
    case ErrorCode::InvalidPatch: return "InvalidPatch";
    case ErrorCode::InvalidFormat: return "InvalidFormat";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::UsageError: return "UsageError";
    }
    return "Unknown";
}

nlohmann::ordered_json Error::to_json() const {
    nlohmann::ordered_json j;
    j["error"] = std::string(to_string(code_));
    j["message"] = what();
    if (!details_.is_null()) j["details"] = details_;
    return j;
}

} // namespace schemakit
