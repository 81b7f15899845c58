// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Scripted patch sessions over the doors machine and generators for the
// state machine properties. Shared by the unit tests and the acceptance
// binary.
#pragma once

#include <functional>

#include "schemakit/error.h"
#include "schemakit/sm.h"
#include "support.h"

namespace schemakit::testing {

inline sm::MachineDef doors() { return sm::parse_machine(data_text("doors.sml")); }

inline Json rt_json(const std::string& current, const char* vars, const char* visited) {
    return Json{{"current", current}, {"vars", Json::parse(vars)}, {"visited", Json::parse(visited)}, {"pending", Json::array()}};
}

inline Json patch_record(const char* changes, Json current = "reject", const std::string& pending = "reject") {
    return Json{{"patch", {{"changes", Json::parse(changes)}, {"currentStateStrategy", std::move(current)},
                           {"pendingEventStrategy", pending}}}};
}

inline Json ev(const std::string& e) { return Json{{"event", e}}; }
inline Json enqueue(const std::string& e) { return Json{{"enqueue", e}}; }

struct ScriptedSession {
    std::string row;  // change / what
    std::vector<Json> records;
    Json expected;           // final run-time state
    std::size_t rejected;    // patches refused by a strategy
    std::string note;        // substring some patch note must contain, if any
};

inline std::size_t rejected_patches(const sm::SessionResult& r) {
    return static_cast<std::size_t>(std::count_if(r.trace.begin(), r.trace.end(), [](const Json& t) {
        return t.contains("rejected");
    }));
}

inline bool has_note(const sm::SessionResult& r, const std::string& text) {
    for (const auto& t : r.trace)
        if (t.contains("notes"))
            for (const auto& n : t.at("notes"))
                if (n.get<std::string>().find(text) != std::string::npos) return true;
    return false;
}

/// Empty when the session ends as scripted.
inline std::string check_session(const ScriptedSession& s) {
    sm::SessionResult r = sm::run_session(doors(), s.records, data_path(""));
    if (sm::to_json(r.rt) != s.expected)
        return "final state " + sm::to_json(r.rt).dump() + ", expected " + s.expected.dump();
    if (rejected_patches(r) != s.rejected) return "rejected " + std::to_string(rejected_patches(r)) + " patches";
    if (!s.note.empty() && !has_note(r, s.note)) return "missing note '" + s.note + "'";
    if (!sm::runtime_problems(r.def, r.rt).empty()) return "invalid final state";
    return "";
}

/// One or more sessions per row of the change table.
inline std::vector<ScriptedSession> change_table_sessions() {
    const char* remove_opened = R"([{"op": "remove_state", "name": "opened"}])";
    const char* remove_open = R"([{"op": "remove_transition", "state": "closed", "event": "open"}])";
    return {
        {"add/rename state",
         {ev("open"),
          patch_record(R"([{"op": "add_state", "state": {"name": "locked", "on": [{"event": "unlock", "target": "closed"}]}},
                          {"op": "add_transition", "state": "closed", "event": "lock", "target": "locked"},
                          {"op": "rename_state", "from": "opened", "to": "ajar"}])"),
          ev("close"), ev("lock")},
         rt_json("locked", R"({"isClosed": true})", R"({"ajar": 1, "closed": 2, "locked": 1})"),
         0,
         ""},
        {"remove state (current, explicit target)",
         {patch_record(R"([{"op": "remove_state", "name": "closed"}])", Json{{"explicit", "opened"}})},
         rt_json("opened", R"({"isClosed": true})", "{}"),
         0,
         "now in 'opened'"},
        {"remove state (current, go to initial)",
         {ev("open"), patch_record(remove_opened, "reject"), patch_record(remove_opened, "gotoInitial")},
         rt_json("closed", R"({"isClosed": false})", R"({"closed": 1})"),
         1,
         "now in 'closed'"},
        {"add variable",
         {patch_record(R"([{"op": "add_var", "var": {"name": "count", "type": "int", "init": 0}}])"), ev("open")},
         rt_json("opened", R"({"count": 0, "isClosed": false})", R"({"closed": 1, "opened": 1})"),
         0,
         ""},
        {"remove variable",
         {patch_record(R"([{"op": "set_entry", "state": "closed", "entry": []},
                          {"op": "set_entry", "state": "opened", "entry": []},
                          {"op": "remove_var", "name": "isClosed"}])"),
          ev("open")},
         rt_json("opened", "{}", R"({"closed": 1, "opened": 1})"),
         0,
         "removed variable 'isClosed' holding true"},
        {"rename variable",
         {ev("open"), patch_record(R"([{"op": "rename_var", "from": "isClosed", "to": "closedFlag"}])"), ev("close"),
          ev("open")},
         rt_json("opened", R"({"closedFlag": false})", R"({"closed": 2, "opened": 2})"),
         0,
         ""},
        {"change variable type",
         {ev("open"), ev("close"),
          patch_record(R"([{"op": "change_var_type", "name": "isClosed", "type": "int", "init": 1},
                          {"op": "set_entry", "state": "closed", "entry": ["isClosed := 1"]},
                          {"op": "set_entry", "state": "opened", "entry": ["isClosed := 0"]}])")},
         rt_json("closed", R"({"isClosed": 1})", R"({"closed": 2, "opened": 1})"),
         0,
         ""},
        {"add transition",
         {patch_record(R"([{"op": "add_transition", "state": "opened", "event": "slam", "target": "closed"}])"),
          ev("open"), ev("slam")},
         rt_json("closed", R"({"isClosed": true})", R"({"closed": 2, "opened": 1})"),
         0,
         ""},
        {"remove transition (pending events)",
         {enqueue("open"), patch_record(remove_open, "reject", "reject"), patch_record(remove_open, "reject", "drop"),
          Json{{"drain", true}}},
         rt_json("closed", R"({"isClosed": true})", R"({"closed": 1})"),
         1,
         "dropped 1 pending 'open' event"},
        {"change transition event (pending events)",
         {enqueue("open"), enqueue("open"),
          patch_record(R"([{"op": "change_transition_event", "state": "closed", "from": "open", "to": "push"}])",
                       "reject", "drop"),
          ev("push")},
         rt_json("opened", R"({"isClosed": false})", R"({"closed": 1, "opened": 1})"),
         0,
         "dropped 2 pending 'open' events"},
        {"add/remove statement",
         {ev("open"), patch_record(R"([{"op": "set_entry", "state": "closed", "entry": []}])"), ev("close"),
          patch_record(R"([{"op": "set_entry", "state": "opened", "entry": ["isClosed := true"]}])")},
         rt_json("closed", R"({"isClosed": false})", R"({"closed": 2, "opened": 1})"),
         0,
         ""},
    };
}

// ── generators ──────────────────────────────────────────────────────────

inline Value sm_literal(Gen& g, sm::VarType t) {
    switch (t) {
    case Prim::Bool: return Value::boolean(g.chance(0.5));
    case Prim::Int: return Value::integer(g.range(-3, 9));
    default: return Value::str(g.pick(std::vector<std::string>{"", "a", "x y", "q\"r", "back\\slash"}));
    }
}

inline sm::Stmt sm_stmt(Gen& g, const sm::MachineDef& def) {
    const sm::VarDecl& v = g.pick(def.vars);
    sm::Stmt s;
    s.target = v.name;
    std::vector<std::string> bools;
    for (const auto& o : def.vars)
        if (o.type == Prim::Bool) bools.push_back(o.name);
    if (v.type == Prim::Bool && g.chance(0.4))
        s.negated = g.pick(bools);
    else
        s.literal = sm_literal(g, v.type);
    return s;
}

inline std::vector<sm::Stmt> sm_entry(Gen& g, const sm::MachineDef& def) {
    std::vector<sm::Stmt> out;
    if (def.vars.empty()) return out;
    int n = g.range(0, 3);
    for (int i = 0; i < n; ++i) out.push_back(sm_stmt(g, def));
    return out;
}

inline std::vector<std::string> sm_events() { return {"e0", "e1", "e2", "e3"}; }

inline std::vector<sm::Transition> sm_transitions(Gen& g, const std::vector<std::string>& targets) {
    std::vector<sm::Transition> out;
    for (const auto& e : sm_events())
        if (g.chance(0.45)) out.push_back({e, g.pick(targets)});
    return out;
}

inline sm::MachineDef sm_machine(Gen& g) {
    static const std::vector<Prim> types{Prim::Bool, Prim::Bool, Prim::Int, Prim::String};
    sm::MachineDef def;
    def.name = "M";
    int nv = g.range(0, 3), ns = g.range(1, 4);
    for (int i = 0; i < nv; ++i) {
        Prim t = g.pick(types);
        def.vars.push_back({"v" + std::to_string(i), t, sm_literal(g, t)});
    }
    std::vector<std::string> names;
    for (int i = 0; i < ns; ++i) names.push_back("s" + std::to_string(i));
    for (const auto& n : names) def.states.push_back({n, sm_entry(g, def), sm_transitions(g, names)});
    def.initial = g.pick(names);
    return def;
}

inline std::vector<std::string> state_names(const sm::MachineDef& def) {
    std::vector<std::string> out;
    for (const auto& s : def.states) out.push_back(s.name);
    return out;
}

struct Mutated {
    sm::MachineDef def;
    std::vector<sm::RenameDirective> directives;
};

/// A valid machine a few edits away from `def`. Renames are sometimes
/// directed and sometimes left for the diff to see as remove + add.
inline Mutated sm_mutate(Gen& g, const sm::MachineDef& def) {
    static int fresh = 0;
    for (;;) {
        Mutated m{def, {}};
        sm::MachineDef& d = m.def;
        int edits = g.range(1, 3);
        for (int k = 0; k < edits; ++k) {
            switch (g.range(0, 9)) {
            case 0: {
                std::string n = "n" + std::to_string(fresh++);
                d.states.push_back({n, sm_entry(g, d), sm_transitions(g, state_names(d))});
                break;
            }
            case 1: {
                if (d.states.size() < 2) break;
                std::string gone = g.pick(state_names(d));
                std::erase_if(d.states, [&](const sm::State& s) { return s.name == gone; });
                for (auto& s : d.states)
                    std::erase_if(s.transitions, [&](const sm::Transition& t) { return t.target == gone; });
                if (d.initial == gone) d.initial = d.states.front().name;
                break;
            }
            case 2: {
                std::string from = g.pick(state_names(d)), to = "r" + std::to_string(fresh++);
                for (auto& s : d.states) {
                    if (s.name == from) s.name = to;
                    for (auto& t : s.transitions)
                        if (t.target == from) t.target = to;
                }
                if (d.initial == from) d.initial = to;
                if (g.chance(0.6) && def.state(from)) m.directives.push_back({sm::RenameDirective::Kind::State, from, to});
                break;
            }
            case 3: {
                if (d.vars.empty()) break;
                sm::VarDecl& v = d.vars[static_cast<std::size_t>(g.range(0, static_cast<int>(d.vars.size()) - 1))];
                std::string from = v.name, to = "w" + std::to_string(fresh++);
                v.name = to;
                for (auto& s : d.states)
                    for (auto& st : s.entry) {
                        if (st.target == from) st.target = to;
                        if (st.negated == from) st.negated = to;
                    }
                if (g.chance(0.6) && def.var(from)) m.directives.push_back({sm::RenameDirective::Kind::Var, from, to});
                break;
            }
            case 4: {
                Prim t = g.pick(std::vector<Prim>{Prim::Bool, Prim::Int, Prim::String});
                d.vars.push_back({"w" + std::to_string(fresh++), t, sm_literal(g, t)});
                break;
            }
            case 5: {
                if (d.vars.empty()) break;
                sm::VarDecl& v = d.vars[static_cast<std::size_t>(g.range(0, static_cast<int>(d.vars.size()) - 1))];
                v.type = g.pick(std::vector<Prim>{Prim::Bool, Prim::Int, Prim::String});
                v.init = sm_literal(g, v.type);
                for (auto& s : d.states) std::erase_if(s.entry, [&](const sm::Stmt& st) {
                    return st.target == v.name || st.negated == v.name;
                });
                break;
            }
            case 6: {
                if (d.vars.empty()) break;
                std::string gone = g.pick(d.vars).name;
                std::erase_if(d.vars, [&](const sm::VarDecl& v) { return v.name == gone; });
                for (auto& s : d.states) std::erase_if(s.entry, [&](const sm::Stmt& st) {
                    return st.target == gone || st.negated == gone;
                });
                break;
            }
            case 7: {
                sm::State& s = *d.state(g.pick(state_names(d)));
                s.transitions = sm_transitions(g, state_names(d));
                break;
            }
            case 8: {
                sm::State& s = *d.state(g.pick(state_names(d)));
                if (s.transitions.empty()) break;
                std::string to = "x" + std::to_string(fresh++);
                s.transitions[0].event = to;
                break;
            }
            default: {
                if (g.chance(0.5))
                    d.state(g.pick(state_names(d)))->entry = sm_entry(g, d);
                else
                    d.initial = g.pick(state_names(d));
            }
            }
        }
        std::erase_if(m.directives, [&](const sm::RenameDirective& r) {
            bool var = r.kind == sm::RenameDirective::Kind::Var;
            return var ? !d.var(r.to) || def.var(r.to) : !d.state(r.to) || def.state(r.to);
        });
        try {
            sm::validate_machine(d);
            return m;
        } catch (const Error&) {
        }
    }
}

inline sm::Patch sm_patch(Gen& g, const sm::MachineDef& def, const sm::MachineDef& target,
                          const std::vector<sm::RenameDirective>& directives) {
    sm::Patch p = sm::diff_machines(def, target, directives);
    int k = g.range(0, 2);
    if (k == 1) p.current = {sm::CurrentStateStrategy::Kind::GotoInitial, ""};
    if (k == 2) p.current = {sm::CurrentStateStrategy::Kind::Explicit, g.pick(state_names(target))};
    p.pending = g.chance(0.5) ? sm::PendingEventStrategy::Drop : sm::PendingEventStrategy::Reject;
    return p;
}

inline std::vector<std::string> sm_script(Gen& g, int n) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back(g.pick(sm_events()));
    return out;
}

// ── property cases ──────────────────────────────────────────────────────

/// Random events, queued events and patches. Every intermediate run-time
/// state must be valid; a fresh stretch also checks visited conservation.
inline std::string validity_case(Gen& g) {
    sm::MachineDef def = sm_machine(g);
    sm::RuntimeState rt = sm::start(def);
    int fired = 0;
    bool patched = false;
    auto sum = [](const sm::RuntimeState& r) {
        int n = 0;
        for (const auto& [k, v] : r.visited) n += v;
        return n;
    };
    for (int op = 0; op < 12; ++op) {
        int k = g.range(0, 9);
        if (k < 5) {
            auto s = sm::step(def, rt, g.pick(sm_events()));
            fired += s.fired;
            rt = std::move(s.rt);
        } else if (k < 7) {
            rt.pending.push_back(g.pick(sm_events()));
        } else if (k == 7) {
            auto steps = sm::drain(def, rt);
            for (const auto& s : steps) fired += s.fired;
            if (!steps.empty()) rt = steps.back().rt;
        } else {
            Mutated m = sm_mutate(g, def);
            sm::Patch p = sm_patch(g, def, m.def, m.directives);
            try {
                auto done = sm::patch(def, rt, p);
                if (!sm::equivalent(done.def, m.def)) return "patched definition differs from target";
                def = std::move(done.def);
                rt = std::move(done.rt);
                patched = true;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::Rejected) return std::string("patch failed: ") + e.what();
            }
        }
        if (auto problems = sm::runtime_problems(def, rt); !problems.empty()) return problems.front();
        if (!patched && sum(rt) != 1 + fired) return "visited counts do not add up";
    }
    return "";
}

/// Mid-session rename against the renamed machine run from scratch.
inline std::string rename_neutrality_case(Gen& g) {
    sm::MachineDef def = sm_machine(g);
    if (def.vars.empty()) def.vars.push_back({"v9", Prim::Int, Value::integer(4)});
    const std::string from = g.pick(def.vars).name, to = "renamed";
    auto script = sm_script(g, g.range(0, 12));
    std::size_t cut = static_cast<std::size_t>(g.range(0, static_cast<int>(script.size())));

    sm::Patch p;
    p.changes.push_back(sm::change::RenameVar{from, to});
    sm::MachineDef renamed = sm::apply_changes(def, p.changes);

    sm::MachineDef live_def = def;
    sm::RuntimeState live = sm::start(def);
    for (std::size_t i = 0; i < script.size(); ++i) {
        if (i == cut) {
            auto done = sm::patch(live_def, live, p);
            live_def = done.def;
            live = done.rt;
        }
        live = sm::step(live_def, live, script[i]).rt;
    }
    if (cut == script.size()) live = sm::patch(live_def, live, p).rt;

    sm::RuntimeState fresh = sm::start(renamed);
    for (const auto& e : script) fresh = sm::step(renamed, fresh, e).rt;
    if (!(live == fresh)) return "live " + sm::to_json(live).dump() + " vs fresh " + sm::to_json(fresh).dump();
    return "";
}

/// Adding an unreachable state and a transition on a new event mid-session
/// equals adding them before the session.
inline std::string simple_patch_case(Gen& g) {
    sm::MachineDef def = sm_machine(g);
    sm::Patch p;
    p.changes.push_back(sm::change::AddState{{"extra", sm_entry(g, def), {{"e0", def.initial}}}});
    p.changes.push_back(sm::change::AddTransition{g.pick(state_names(def)), {"fresh", "extra"}});
    auto script = sm_script(g, g.range(0, 10));
    std::size_t cut = static_cast<std::size_t>(g.range(0, static_cast<int>(script.size())));
    std::vector<std::string> after = script;
    for (std::size_t i = cut; i < after.size(); ++i)
        if (g.chance(0.3)) after[i] = "fresh";

    auto early = sm::patch(def, sm::start(def), p);
    sm::RuntimeState a = early.rt;
    for (const auto& e : after) a = sm::step(early.def, a, e).rt;

    sm::MachineDef d = def;
    sm::RuntimeState b = sm::start(def);
    for (std::size_t i = 0; i < after.size(); ++i) {
        if (i == cut) {
            auto done = sm::patch(d, b, p);
            d = done.def;
            b = done.rt;
        }
        b = sm::step(d, b, after[i]).rt;
    }
    if (cut == after.size()) b = sm::patch(d, b, p).rt;
    if (!(a == b)) return "early " + sm::to_json(a).dump() + " vs mid-session " + sm::to_json(b).dump();
    return "";
}

/// diff then replay reproduces the target definition.
inline std::string diff_replay_case(Gen& g) {
    sm::MachineDef def = sm_machine(g);
    Mutated m = sm_mutate(g, def);
    sm::Patch p = sm::diff_machines(def, m.def, m.directives);
    sm::MachineDef replayed = sm::apply_changes(def, p.changes);
    if (!sm::equivalent(replayed, m.def)) return "replay differs:\n" + sm::print_machine(replayed) + "vs\n" + sm::print_machine(m.def);
    return "";
}

} // namespace schemakit::testing
