// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
//
// The command-line surface: verb dispatch over the library, questions for
// the points where an operation needs the user, and the live session driver.
#pragma once

#include <deque>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "schemakit/codec.h"
#include "schemakit/sm.h"

namespace schemakit::cli {

enum class Mode { Batch, Interactive };

/// SCHEMAKIT_MODE; batch when unset. Throws UsageError on other values.
Mode mode_from_env();

/// Something only the user can settle. `domain` describes valid answers.
struct Question {
    std::string id;
    std::string operation;
    Json domain;
    std::optional<Json> fallback;  // used when nobody answers
};

Json to_json(const Question& q);

struct Session {
    std::filesystem::path workspace = ".";
    Mode mode = Mode::Batch;
    std::istream* in = nullptr;
    std::ostream* out = nullptr;
    std::ostream* diag = nullptr;  // JSON lines

    /// Recorded answers, consumed before anyone is asked.
    std::deque<Json> answers;
    /// Every question asked, with its answer (null when unanswered).
    std::vector<Json> transcript;

    /// Next recorded answer, else a prompt in interactive mode. nullopt
    /// means the caller must fail (or fall back).
    std::optional<Json> ask(const Question& q);
    void report(const Json& line);
    std::filesystem::path resolve(const std::string& p) const;
};

/// Exit code: 0 ok, 1 operation error, 2 usage. `argv` excludes the
/// program name. Errors go to `diag` as one JSON line.
int run_command(Session& s, const std::vector<std::string>& argv);

// ── live sessions ───────────────────────────────────────────────────────

struct LiveState {
    TypeExpr type;
    Value state;
    std::optional<sm::MachineDef> machine;
    sm::RuntimeState rt;
};

struct LiveResult {
    LiveState live;
    std::vector<Json> trace;
    bool unanswered = false;  // an edit was refused for want of input
};

/// Records, one per line:
///   {"append": path, "value": v}                 list at path grows by v
///   {"set": path, "item": i, "field": f, "value": v}
///   {"type_edits": [..] | file, "hints": [..]}  migrate the live value
///   {"sm": {..}}                                  a state machine session record
/// A type edit that fails leaves the value untouched and is traced.
LiveResult run_live_session(Session& s, LiveState init, const std::vector<Json>& records,
                            const std::filesystem::path& base);

} // namespace schemakit::cli
