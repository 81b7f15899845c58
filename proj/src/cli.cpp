// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
#include "schemakit/cli.h"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>

#include "schemakit/doc.h"
#include "schemakit/entity.h"
#include "schemakit/error.h"
#include "schemakit/lens.h"
#include "schemakit/migrate.h"
#include "schemakit/query.h"
#include "schemakit/schema.h"

namespace schemakit::cli {

Mode mode_from_env() {
    const char* m = std::getenv("SCHEMAKIT_MODE");
    if (!m || std::string_view(m).empty() || std::string_view(m) == "batch") return Mode::Batch;
    if (std::string_view(m) == "interactive") return Mode::Interactive;
    throw Error(ErrorCode::UsageError, "SCHEMAKIT_MODE must be batch or interactive, not '" + std::string(m) + "'");
}

Json to_json(const Question& q) {
    Json j{{"id", q.id}, {"operation", q.operation}, {"domain", q.domain}};
    if (q.fallback) j["default"] = *q.fallback;
    return j;
}

std::optional<Json> Session::ask(const Question& q) {
    Json answer;
    if (!answers.empty()) {
        answer = answers.front();
        answers.pop_front();
        // a transcript line replays as its answer
        if (answer.is_object() && answer.contains("question") && answer.contains("answer")) answer = answer["answer"];
    } else if (mode == Mode::Interactive && in) {
        report(Json{{"prompt", to_json(q)}});
        std::string line;
        if (std::getline(*in, line) && line.find_first_not_of(" \t\r") != std::string::npos) {
            try {
                answer = Json::parse(line);
            } catch (const nlohmann::json::parse_error&) {
                answer = line;
            }
        }
    }
    transcript.push_back(Json{{"question", to_json(q)}, {"answer", answer}});
    if (answer.is_null()) return std::nullopt;
    return answer;
}

void Session::report(const Json& line) {
    if (diag) *diag << dump_line(line);
}

std::filesystem::path Session::resolve(const std::string& p) const {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : workspace / path;
}

namespace {

// ── plumbing ────────────────────────────────────────────────────────────

/// A JSON array file or JSON lines.
std::vector<Json> load_records(const std::filesystem::path& path) {
    std::string text = read_text_file(path);
    auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '[') {
        try {
            return Json::parse(text).get<std::vector<Json>>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::InvalidFormat, path.string() + ": " + e.what());
        }
    }
    return parse_json_lines(text);
}

std::vector<TypeEdit> edits_of(const std::vector<Json>& records) {
    std::vector<TypeEdit> out;
    for (const auto& r : records) out.push_back(type_edit_from_json(r));
    return out;
}

std::string number_text(double x) {
    if (std::isfinite(x) && x == std::floor(x) && std::fabs(x) < 1e15) return std::to_string(static_cast<long long>(x));
    std::ostringstream ss;
    ss << x;
    return ss.str();
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

Value key_value(const Table& t, const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
        j = text;
    }
    return cell_from_json(j, t.columns[t.key_index()].type);
}

const Table& table_of(const Database& db, const std::string& name) {
    auto it = db.tables.find(name);
    if (it == db.tables.end()) throw Error(ErrorCode::UnknownTable, "no table '" + name + "'");
    return it->second;
}

/// Keeps asking while `f` needs a write policy.
template <class F>
auto with_policy(Session& s, std::optional<WritePolicy> policy, F f) {
    try {
        return f(policy);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::PolicyRequired || policy) throw;
        Question q{"lens.policy", "lens", e.details(), std::nullopt};
        auto a = s.ask(q);
        if (!a) throw;
        if (!a->is_string()) throw Error(ErrorCode::UsageError, "a write policy answer is a string");
        return f(write_policy_from_string(a->get<std::string>()));
    }
}

/// Folds the KeyedHints asked for into `hints` until the plan derives.
std::optional<MigrationPlan> derive_asking(Session& s, const TypeExpr& type, const std::vector<TypeEdit>& edits,
                                           std::vector<KeyedHint>& hints) {
    for (std::size_t round = 0;; ++round) {
        try {
            return derive_migration(type, edits, hints);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NeedsInput || round > edits.size()) throw;
            const Json& d = e.details();
            std::string path = d.value("path", ""), label = d.value("label", "");
            Question q{"migrate:" + path + ":" + label, "migrate", d, std::nullopt};
            auto a = s.ask(q);
            if (!a) throw;
            if (!a->is_object()) throw Error(ErrorCode::UsageError, "a migration answer is {\"mapping\": ..} or {\"default\": ..}");
            Json h = *a;
            h["path"] = path;
            h["label"] = label;
            auto more = hints_from_json(Json::array({h}));
            hints.insert(hints.end(), more.begin(), more.end());
        }
    }
}

Value* field_at(Value& v, const TypePath& path) {
    Value* cur = &v;
    for (const auto& step : path) {
        if (step.kind != PathStep::Kind::Field || cur->kind != Value::Kind::Record)
            throw Error(ErrorCode::PathNotFound, "append path must name record fields: " + format_path(path));
        cur = cur->get(step.label);
        if (!cur) throw Error(ErrorCode::PathNotFound, "no field '" + step.label + "' on " + format_path(path));
    }
    return cur;
}

void require_conforms(const Value& v, const TypeExpr& t, const char* what) {
    auto report = conforms(v, t);
    if (report.ok()) return;
    Json vs = Json::array();
    for (const auto& x : report.violations) vs.push_back(Json{{"path", x.path}, {"message", x.message}});
    throw Error(ErrorCode::NonConforming, std::string(what) + " does not conform to the live type",
                Json{{"violations", vs}});
}

} // namespace

// ── live sessions ───────────────────────────────────────────────────────

LiveResult run_live_session(Session& s, LiveState init, const std::vector<Json>& records,
                            const std::filesystem::path& base) {
    using schemakit::to_json;
    LiveResult out{std::move(init), {}, false};
    LiveState& live = out.live;
    require_conforms(live.state, live.type, "initial state");
    Json start{{"op", "start"}};
    if (live.machine) {
        live.rt = sm::start(*live.machine);
        start["machine"] = live.rt.current;
    }
    out.trace.push_back(start);

    for (const auto& r : records) {
        if (r.contains("append")) {
            TypePath path = parse_path(require_string(r, "append"));
            Value next = live.state;
            Value* list = field_at(next, path);
            if (list->kind != Value::Kind::List) throw Error(ErrorCode::NonConforming, format_path(path) + " is not a list");
            list->items.push_back(value_from_json(require(r, "value")));
            std::size_t size = list->items.size();
            require_conforms(next, live.type, "appended value");
            live.state = std::move(next);
            out.trace.push_back(Json{{"op", "append"}, {"path", format_path(path)}, {"size", size}});
        } else if (r.contains("set")) {
            DataEdit e;
            e.kind = DataEdit::Kind::SetField;
            e.item = require(r, "item").get<std::size_t>();
            e.column = require_string(r, "field");
            e.value = value_from_json(require(r, "value"));
            TypePath path = parse_path(require_string(r, "set"));
            Value next = apply_data_edit(path, live.state, e);
            require_conforms(next, live.type, "edited value");
            live.state = std::move(next);
            out.trace.push_back(Json{{"op", "set"}, {"path", format_path(path)}, {"item", e.item}, {"field", e.column}});
        } else if (r.contains("type_edits")) {
            const Json& spec = r.at("type_edits");
            auto edits = edits_of(spec.is_string() ? load_records(base / spec.get<std::string>())
                                                   : spec.get<std::vector<Json>>());
            auto hints = r.contains("hints") ? hints_from_json(r.at("hints")) : std::vector<KeyedHint>{};
            Json t{{"op", "migrate"}, {"edits", edits.size()}};
            try {
                MigrationPlan plan = *derive_asking(s, live.type, edits, hints);
                TypeExpr next_type = apply_type_edits(live.type, edits);
                MigrationOutcome m = migrate(plan, live.state);
                require_conforms(m.value, next_type, "migrated state");
                Json dropped = Json::array();
                for (const auto& d : m.dropped) {
                    dropped.push_back(Json{{"path", d.path}, {"value", to_json(d.value)}});
                    s.report(Json{{"dropped", d.path}, {"value", to_json(d.value)}, {"reason", "field removed"}});
                }
                Json todos = Json::array();
                for (const auto& todo : render_todos(live.type, edits)) todos.push_back(to_json(todo));
                live.type = std::move(next_type);
                live.state = std::move(m.value);
                t["steps"] = plan.steps.size();
                t["dropped"] = dropped;
                if (!todos.empty()) t["todos"] = todos;
            } catch (const Error& e) {
                if (e.code() == ErrorCode::NeedsInput) out.unanswered = true;
                t["rejected"] = e.to_json();
                s.report(e.to_json());
            }
            out.trace.push_back(std::move(t));
        } else if (r.contains("sm")) {
            if (!live.machine) throw Error(ErrorCode::UsageError, "sm records need a machine (--machine)");
            sm::SessionResult held{*live.machine, live.rt, {}};
            sm::run_record(held, r.at("sm"), base);
            live.machine = std::move(held.def);
            live.rt = std::move(held.rt);
            for (auto& entry : held.trace) {
                if (entry.contains("note")) s.report(Json{{"note", entry["note"]}});
                if (entry.contains("notes"))
                    for (const auto& n : entry["notes"]) s.report(Json{{"note", n}});
                if (entry.contains("rejected")) s.report(Json{{"rejected", entry["rejected"]}});
                out.trace.push_back(Json{{"op", "sm"}, {"step", std::move(entry)}});
            }
        } else {
            throw Error(ErrorCode::InvalidFormat, "live record needs append, set, type_edits or sm", Json{{"record", r}});
        }
    }
    return out;
}

// ── verbs ───────────────────────────────────────────────────────────────

namespace {

using schemakit::to_json;

struct Verbs {
    Session& s;
    std::string& out;

    void emit(const Json& j) { out += dump_line(j); }
    Json json_file(const std::string& p) { return read_json_file(s.resolve(p)); }

    // type

    void type_diff(const std::string& a, const std::string& b, const std::vector<std::string>& renames) {
        std::vector<RenameDirective> dirs;
        for (const auto& r : renames) {
            auto at = r.rfind('@');
            std::string names = r.substr(0, at), path = at == std::string::npos ? "" : r.substr(at + 1);
            auto colon = names.find(':');
            if (colon == std::string::npos) throw Error(ErrorCode::UsageError, "rename is from:to[@path], got '" + r + "'");
            dirs.push_back({parse_path(path), names.substr(0, colon), names.substr(colon + 1)});
        }
        DiffResult d = schemakit::type_diff(type_from_json(json_file(a)), type_from_json(json_file(b)), dirs);
        for (const auto& e : d.edits) emit(to_json(e));
        for (const auto& amb : d.ambiguities) s.report(to_json(amb));
    }

    void type_apply(const std::string& type, const std::string& edits) {
        emit(to_json(apply_type_edits(type_from_json(json_file(type)), edits_of(load_records(s.resolve(edits))))));
    }

    // migrate

    void migrate(const std::string& plan_file, const std::string& state_file, const std::string& type_file,
                 const std::string& edits_file, const std::string& hints_file, const std::string& plan_out) {
        MigrationPlan plan;
        if (!plan_file.empty()) {
            plan = plan_from_json(json_file(plan_file));
        } else {
            if (type_file.empty() || edits_file.empty())
                throw Error(ErrorCode::UsageError, "migrate needs --plan, or --type with --edits");
            auto hints = hints_file.empty() ? std::vector<KeyedHint>{} : hints_from_json(json_file(hints_file));
            plan = *derive_asking(s, type_from_json(json_file(type_file)), edits_of(load_records(s.resolve(edits_file))),
                                  hints);
        }
        if (!plan_out.empty()) write_text_file(s.resolve(plan_out), dump_line(schemakit::to_json(plan)));
        MigrationOutcome m = schemakit::migrate(plan, value_from_json(json_file(state_file)));
        for (const auto& d : m.dropped)
            s.report(Json{{"dropped", d.path}, {"value", to_json(d.value)}, {"reason", "field removed"}});
        emit(to_json(m.value));
    }

    // db

    void db_extract(const std::string& db, const std::string& source, const std::string& cols, const std::string& table,
                    const std::string& key, const std::string& fk, const std::string& corr_out) {
        Database d = database_from_json(json_file(db));
        std::string src = source;
        if (src.empty()) {
            if (d.tables.size() != 1) throw Error(ErrorCode::UsageError, "--source is required when the db has several tables");
            src = d.tables.begin()->first;
        }
        auto r = extract_entity(d, {src, split_list(cols), table, key, fk});
        if (!corr_out.empty()) write_text_file(s.resolve(corr_out), dump_line(to_json(r.correspondence)));
        emit(to_json(r.db));
    }

    void db_absorb(const std::string& db, const std::string& corr, const std::string& table, const std::string& fk) {
        Database d = database_from_json(json_file(db));
        if (!corr.empty()) {
            Correspondence c = correspondence_from_json(json_file(corr));
            emit(to_json(absorb_entity(d, c.kind == Correspondence::Kind::Extract ? c : c.inverse())));
        } else {
            if (table.empty() || fk.empty()) throw Error(ErrorCode::UsageError, "absorb needs --correspondence, or --table with --fk");
            emit(to_json(absorb_entity(d, table, fk)));
        }
    }

    void db_merge(const std::string& db, const std::string& table, const std::string& ids,
                  const std::vector<std::string>& sets) {
        Database d = database_from_json(json_file(db));
        const Table& t = table_of(d, table);
        std::vector<Value> keys;
        for (const auto& id : split_list(ids)) keys.push_back(key_value(t, id));
        MergeResolution res;
        for (const auto& kv : sets) {
            auto eq = kv.find('=');
            if (eq == std::string::npos) throw Error(ErrorCode::UsageError, "--set is column=json, got '" + kv + "'");
            std::string col = kv.substr(0, eq);
            auto c = t.column_index(col);
            if (!c) throw Error(ErrorCode::UnknownColumn, table + " has no column '" + col + "'");
            res.fields[col] = cell_from_json(Json::parse(kv.substr(eq + 1)), t.columns[*c].type);
        }
        emit(to_json(merge_entities(d, table, keys, res)));
    }

    void db_split(const std::string& db, const std::string& table, const std::string& id, const std::string& reassign) {
        Database d = database_from_json(json_file(db));
        const Table& t = table_of(d, table);
        Value key = key_value(t, id);
        std::optional<Reassignment> plan;
        if (!reassign.empty()) {
            plan.emplace();
            Json j = json_file(reassign);
            for (const auto& m : require(j, "move")) {
                std::string rt = require_string(m, "table");
                plan->emplace(RowRef{rt, key_value(table_of(d, rt), require(m, "key").dump())}, SplitSide::New);
            }
        } else if (t.find_row(key)) {
            Reassignment asked;
            bool complete = true;
            for (const auto& ref : referencing_rows(d, table, key)) {
                Json about{{"table", ref.table}, {"key", cell_to_json(ref.key)}};
                Question q{"split:" + ref.table + ":" + cell_to_json(ref.key).dump(), "db split",
                           Json{{"row", about}, {"choices", {"old", "new"}}}, std::nullopt};
                auto a = s.ask(q);
                if (!a) {
                    complete = false;
                    break;
                }
                if (*a != "old" && *a != "new") throw Error(ErrorCode::UsageError, "split answers are \"old\" or \"new\"");
                asked[ref] = *a == "new" ? SplitSide::New : SplitSide::Old;
            }
            if (complete) plan = std::move(asked);
        }
        auto r = split_entity(d, table, key, plan);
        s.report(Json{{"clone", cell_to_json(r.clone_key)}});
        emit(to_json(r.db));
    }

    // query

    void query_rewrite(const std::string& q, const std::string& corr) {
        Query parsed = parse_query(read_text_file(s.resolve(q)));
        out += print_query(rewrite_query(parsed, correspondence_from_json(json_file(corr)))) + "\n";
    }

    void query_eval(const std::string& db, const std::string& q) {
        out += to_csv(evaluate_query(database_from_json(json_file(db)), parse_query(read_text_file(s.resolve(q)))));
    }

    // doc

    void doc_apply(const std::string& docf, const std::string& logf) {
        doc::Node d = doc::node_from_json(json_file(docf));
        doc::EditLog log = doc::edit_log_from_json_lines(read_json_lines(s.resolve(logf)));
        for (const auto& e : log.edits) {
            std::vector<std::string> stale;
            d = doc::apply_edit(d, e, &stale);
            for (const auto& id : stale)
                s.report(Json{{"stale_formula", id}, {"edit", doc::to_json(e)}});
        }
        emit(doc::to_json(d));
    }

    void doc_merge(const std::string& basef, const std::vector<std::string>& logs, const std::string& priority) {
        doc::Node base = doc::node_from_json(json_file(basef));
        std::vector<doc::EditLog> ls;
        for (const auto& l : logs) ls.push_back(doc::edit_log_from_json_lines(read_json_lines(s.resolve(l))));
        doc::MergeOptions opts;
        if (!priority.empty()) opts.priority_author = priority;
        doc::MergeResult r = doc::merge_logs(base, ls, opts);
        for (const auto& c : r.conflicts) s.report(Json{{"conflict", doc::to_json(c)}});
        for (const auto& q : r.questions) {
            Question ask{"cell:" + q.cell, "doc merge", doc::to_json(q), Json(q.default_value)};
            auto a = s.ask(ask);
            if (!a) {
                s.report(Json{{"question", doc::to_json(q)}, {"answer", q.default_value}});
                continue;
            }
            doc::DocEdit set;
            set.kind = doc::DocEdit::Kind::SetText;
            set.target = doc::parse_selector("#" + q.cell);
            set.text = a->is_string() ? a->get<std::string>() : a->dump();
            r.doc = doc::apply_edit(r.doc, set);
        }
        emit(doc::to_json(r.doc));
    }

    void doc_eval(const std::string& docf, const std::string& formula) {
        doc::Node d = doc::node_from_json(json_file(docf));
        if (!formula.empty()) {
            out += number_text(doc::evaluate_formula(d, doc::parse_formula(formula))) + "\n";
            return;
        }
        for (const auto& f : doc::collect_formulas(d)) {
            Json j{{"id", f.id}, {"formula", doc::format_formula(f.formula)}};
            try {
                j["value"] = Json::parse(number_text(doc::evaluate_formula(d, f.formula)));
            } catch (const Error& e) {
                j["error"] = e.to_json();
                s.report(j);
            }
            emit(j);
        }
    }

    // lens

    static bool is_db(const Lens& l) { return l.kind == Lens::Kind::ExtractEntity; }

    Lens lens(const std::string& f) { return lens_for_record(json_file(f)); }

    void report_drops(const DropReport& drops) {
        for (const auto& d : drops) s.report(Json{{"drop", to_json(d)}});
    }

    void lens_fwd(const std::string& lf, const std::string& data) {
        Lens l = lens(lf);
        Json j = json_file(data);
        if (is_db(l)) emit(to_json(fwd(l, database_from_json(j))));
        else emit(to_json(fwd(l, value_from_json(j))));
    }

    void lens_bwd(const std::string& lf, const std::string& data) {
        Lens l = lens(lf);
        Json j = json_file(data);
        if (is_db(l)) {
            auto b = bwd(l, database_from_json(j));
            report_drops(b.drops);
            emit(to_json(b.data));
        } else {
            auto b = bwd(l, value_from_json(j));
            report_drops(b.drops);
            emit(to_json(b.data));
        }
    }

    void lens_put(const std::string& lf, const std::string& written, const std::string& current,
                  std::optional<WritePolicy> policy) {
        Lens l = lens(lf);
        if (is_db(l)) throw Error(ErrorCode::UsageError, "put takes a multiplicity lens; use transport for databases");
        Value w = value_from_json(json_file(written)), c = value_from_json(json_file(current));
        emit(to_json(with_policy(s, policy, [&](std::optional<WritePolicy> p) { return put(l, w, c, p); })));
    }

    void lens_transport(const std::string& lf, const std::string& editf, const std::string& dir,
                        const std::string& data, std::optional<WritePolicy> policy) {
        Lens l = lens(lf);
        Direction d = dir == "backward" ? Direction::Backward : Direction::Forward;
        Json nj = json_file(data);
        std::vector<Transported> all;
        for (const auto& ej : load_records(s.resolve(editf))) {
            DataEdit e = data_edit_from_json(ej);
            if (is_db(l)) {
                all.push_back(transport_edit(e, l, d, database_from_json(nj)));
            } else {
                Value side = value_from_json(nj);
                all.push_back(with_policy(s, policy, [&](std::optional<WritePolicy> p) {
                    return transport_edit(e, l, d, side, p);
                }));
            }
        }
        for (const auto& t : all) {
            for (const auto& e : t.edits) emit(to_json(e));
            report_drops(t.drops);
        }
    }

    // sm and live

    void sm_run(const std::string& machine, const std::string& session) {
        auto path = s.resolve(session);
        sm::MachineDef def = sm::parse_machine(read_text_file(s.resolve(machine)));
        auto r = sm::run_session(def, read_json_lines(path), path.parent_path());
        for (const auto& t : r.trace) {
            emit(t);
            if (t.contains("note")) s.report(Json{{"note", t["note"]}});
            if (t.contains("notes"))
                for (const auto& n : t["notes"]) s.report(Json{{"note", n}});
            if (t.contains("rejected")) s.report(Json{{"rejected", t["rejected"]}});
        }
        emit(Json{{"final", sm::to_json(r.rt)}});
    }

    bool live_run(const std::string& type, const std::string& state, const std::string& machine,
                  const std::string& script) {
        LiveState init;
        init.type = type_from_json(json_file(type));
        init.state = value_from_json(json_file(state));
        if (!machine.empty()) init.machine = sm::parse_machine(read_text_file(s.resolve(machine)));
        auto path = s.resolve(script);
        auto r = run_live_session(s, std::move(init), read_json_lines(path), path.parent_path());
        for (const auto& t : r.trace) emit(t);
        Json fin{{"type", to_json(r.live.type)}, {"state", to_json(r.live.state)}};
        if (r.live.machine) fin["machine"] = sm::to_json(r.live.rt);
        emit(Json{{"final", fin}});
        return !r.unanswered;
    }
};

void write_transcript(Session& s, const std::string& path) {
    if (path.empty()) return;
    std::string text;
    for (const auto& t : s.transcript) text += dump_line(t);
    write_text_file(s.resolve(path), text);
}

} // namespace

int run_command(Session& s, const std::vector<std::string>& argv) {
    CLI::App app{"Schema evolution for types, databases, documents and state machines.", "schemakit"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_help_all_flag("--help-all", "Expand all help");

    std::string out_file, answers_file, transcript_file;
    bool interactive = false;
    app.add_option("-o,--out", out_file, "Write primary output to FILE instead of stdout");
    app.add_option("--answers", answers_file, "Answer questions from FILE (JSON lines, or a transcript)");
    app.add_option("--transcript", transcript_file, "Record questions and answers to FILE");
    app.add_flag("--interactive", interactive, "Ask on stdin (same as SCHEMAKIT_MODE=interactive)");

    std::string out;
    Verbs v{s, out};
    std::function<void()> action;
    int status = 0;

    // type
    auto* type = app.add_subcommand("type", "Type diff and edit scripts")->require_subcommand(1);
    std::string t_old, t_new, t_type, t_edits;
    std::vector<std::string> t_renames;
    auto* tdiff = type->add_subcommand("diff", "Edit script from OLD to NEW, as JSON lines");
    tdiff->add_option("old", t_old)->required();
    tdiff->add_option("new", t_new)->required();
    tdiff->add_option("--rename", t_renames, "Asserted rename from:to[@path]");
    tdiff->callback([&] { action = [&] { v.type_diff(t_old, t_new, t_renames); }; });
    auto* tapply = type->add_subcommand("apply", "Apply an edit script to a type");
    tapply->add_option("--type", t_type)->required();
    tapply->add_option("--edits", t_edits)->required();
    tapply->callback([&] { action = [&] { v.type_apply(t_type, t_edits); }; });

    // migrate
    auto* mig = app.add_subcommand("migrate", "Migrate a value by a plan, or by edits with hints");
    std::string m_plan, m_state, m_type, m_edits, m_hints, m_plan_out;
    mig->add_option("--plan", m_plan);
    mig->add_option("--state", m_state)->required();
    mig->add_option("--type", m_type);
    mig->add_option("--edits", m_edits);
    mig->add_option("--hints", m_hints);
    mig->add_option("--plan-out", m_plan_out, "Also write the derived plan");
    mig->callback([&] { action = [&] { v.migrate(m_plan, m_state, m_type, m_edits, m_hints, m_plan_out); }; });

    // db
    auto* db = app.add_subcommand("db", "Entity evolution on a database")->require_subcommand(1);
    std::string d_db, d_source, d_cols, d_new, d_key, d_fk, d_corr, d_corr_out, d_table, d_ids, d_id, d_reassign;
    std::vector<std::string> d_sets;
    auto* dext = db->add_subcommand("extract", "Extract columns into a new keyed table");
    dext->add_option("--db", d_db)->required();
    dext->add_option("--source", d_source, "Source table (default: the only one)");
    dext->add_option("--cols", d_cols)->required();
    dext->add_option("--new", d_new)->required();
    dext->add_option("--key", d_key)->required();
    dext->add_option("--fk", d_fk)->required();
    dext->add_option("--correspondence-out", d_corr_out);
    dext->callback([&] { action = [&] { v.db_extract(d_db, d_source, d_cols, d_new, d_key, d_fk, d_corr_out); }; });
    auto* dabs = db->add_subcommand("absorb", "Join a referenced table back in");
    dabs->add_option("--db", d_db)->required();
    dabs->add_option("--correspondence", d_corr);
    dabs->add_option("--table", d_table);
    dabs->add_option("--fk", d_fk);
    dabs->callback([&] { action = [&] { v.db_absorb(d_db, d_corr, d_table, d_fk); }; });
    auto* dmerge = db->add_subcommand("merge", "Merge rows; the first id survives");
    dmerge->add_option("--db", d_db)->required();
    dmerge->add_option("--table", d_table)->required();
    dmerge->add_option("--ids", d_ids)->required();
    dmerge->add_option("--set", d_sets, "Survivor value column=json");
    dmerge->callback([&] { action = [&] { v.db_merge(d_db, d_table, d_ids, d_sets); }; });
    auto* dsplit = db->add_subcommand("split", "Clone a row and move some references to the clone");
    dsplit->add_option("--db", d_db)->required();
    dsplit->add_option("--table", d_table)->required();
    dsplit->add_option("--id", d_id)->required();
    dsplit->add_option("--reassign", d_reassign, "{\"move\": [{\"table\": .., \"key\": ..}]}");
    dsplit->callback([&] { action = [&] { v.db_split(d_db, d_table, d_id, d_reassign); }; });

    // query
    auto* query = app.add_subcommand("query", "SQL queries")->require_subcommand(1);
    std::string q_query, q_corr, q_db;
    auto* qrw = query->add_subcommand("rewrite", "Rewrite a query across an extract or absorb");
    qrw->add_option("--query", q_query)->required();
    qrw->add_option("--correspondence", q_corr)->required();
    qrw->callback([&] { action = [&] { v.query_rewrite(q_query, q_corr); }; });
    auto* qeval = query->add_subcommand("eval", "Evaluate a query to CSV");
    qeval->add_option("--db", q_db)->required();
    qeval->add_option("--query", q_query)->required();
    qeval->callback([&] { action = [&] { v.query_eval(q_db, q_query); }; });

    // doc
    auto* docs = app.add_subcommand("doc", "Structured documents")->require_subcommand(1);
    std::string o_doc, o_log, o_priority, o_formula;
    std::vector<std::string> o_logs;
    auto* oapply = docs->add_subcommand("apply", "Apply an edit log");
    oapply->add_option("--doc", o_doc)->required();
    oapply->add_option("--log", o_log)->required();
    oapply->callback([&] { action = [&] { v.doc_apply(o_doc, o_log); }; });
    auto* omerge = docs->add_subcommand("merge", "Merge concurrent edit logs");
    omerge->add_option("--base", o_doc)->required();
    omerge->add_option("logs", o_logs)->required();
    omerge->add_option("--priority", o_priority, "Author whose edit wins a conflict");
    omerge->callback([&] { action = [&] { v.doc_merge(o_doc, o_logs, o_priority); }; });
    auto* oeval = docs->add_subcommand("eval", "Evaluate hosted formulas, or one given formula");
    oeval->add_option("--doc", o_doc)->required();
    oeval->add_option("--formula", o_formula);
    oeval->callback([&] { action = [&] { v.doc_eval(o_doc, o_formula); }; });

    // lens
    auto* lens = app.add_subcommand("lens", "Bidirectional transformations")->require_subcommand(1);
    std::string l_lens, l_data, l_written, l_current, l_edit, l_dir = "forward", l_policy;
    auto policy = [&]() -> std::optional<WritePolicy> {
        if (l_policy.empty()) return std::nullopt;
        return write_policy_from_string(l_policy);
    };
    auto lens_opts = [&](CLI::App* c) {
        c->add_option("--lens", l_lens)->required();
        c->add_option("--policy", l_policy, "only-new, replace-head or prepend");
    };
    auto* lfwd = lens->add_subcommand("fwd", "Old-schema data to new");
    lens_opts(lfwd);
    lfwd->add_option("--data", l_data)->required();
    lfwd->callback([&] { action = [&] { v.lens_fwd(l_lens, l_data); }; });
    auto* lbwd = lens->add_subcommand("bwd", "New-schema data to old; losses on the diagnostics stream");
    lens_opts(lbwd);
    lbwd->add_option("--data", l_data)->required();
    lbwd->callback([&] { action = [&] { v.lens_bwd(l_lens, l_data); }; });
    auto* lput = lens->add_subcommand("put", "Write old-schema data into new-schema data");
    lens_opts(lput);
    lput->add_option("--written", l_written)->required();
    lput->add_option("--current", l_current)->required();
    lput->callback([&] { action = [&] { v.lens_put(l_lens, l_written, l_current, policy()); }; });
    auto* ltr = lens->add_subcommand("transport", "Carry data edits across the lens");
    lens_opts(ltr);
    ltr->add_option("--edit", l_edit, "Edits as JSON lines or an array")->required();
    ltr->add_option("--direction", l_dir)->check(CLI::IsMember({"forward", "backward"}));
    ltr->add_option("--data", l_data, "Current new-schema data")->required();
    ltr->callback([&] { action = [&] { v.lens_transport(l_lens, l_edit, l_dir, l_data, policy()); }; });

    // sm
    auto* smc = app.add_subcommand("sm", "State machines")->require_subcommand(1);
    std::string s_machine, s_session;
    auto* srun = smc->add_subcommand("run", "Run a session script; prints the trace and final state");
    srun->add_option("machine", s_machine)->required();
    srun->add_option("session", s_session)->required();
    srun->callback([&] { action = [&] { v.sm_run(s_machine, s_session); }; });

    // live
    auto* live = app.add_subcommand("live", "Live sessions")->require_subcommand(1);
    std::string v_type, v_state, v_machine, v_script;
    auto* lrun = live->add_subcommand("run", "Interleave events, type edits and machine patches");
    lrun->add_option("--type", v_type)->required();
    lrun->add_option("--state", v_state)->required();
    lrun->add_option("--machine", v_machine);
    lrun->add_option("script", v_script)->required();
    lrun->callback([&] { action = [&] { status = v.live_run(v_type, v_state, v_machine, v_script) ? 0 : 1; }; });

    std::vector<std::string> args(argv.rbegin(), argv.rend());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            std::ostringstream help, err;
            app.exit(e, help, err);
            if (s.out) *s.out << help.str();
            return 0;
        }
        s.report(Json{{"error", "UsageError"}, {"message", e.what()}});
        return 2;
    }

    try {
        if (interactive) s.mode = Mode::Interactive;
        if (!answers_file.empty())
            for (auto& a : read_json_lines(s.resolve(answers_file))) s.answers.push_back(std::move(a));
        if (action) action();
        if (!out_file.empty()) write_text_file(s.resolve(out_file), out);
        else if (s.out) *s.out << out;
        write_transcript(s, transcript_file);
        return status;
    } catch (const Error& e) {
        s.report(e.to_json());
        write_transcript(s, transcript_file);
        return e.code() == ErrorCode::UsageError ? 2 : 1;
    } catch (const nlohmann::json::exception& e) {
        s.report(Json{{"error", "InvalidFormat"}, {"message", e.what()}});
        return 1;
    }
}

} // namespace schemakit::cli
