// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
#include "schemakit/sm.h"

#include <algorithm>
#include <cctype>
#include <set>

#include "schemakit/error.h"

namespace schemakit::sm {

const Transition* State::on(std::string_view event) const {
    for (const auto& t : transitions)
        if (t.event == event) return &t;
    return nullptr;
}

const State* MachineDef::state(std::string_view n) const {
    for (const auto& s : states)
        if (s.name == n) return &s;
    return nullptr;
}

State* MachineDef::state(std::string_view n) { return const_cast<State*>(std::as_const(*this).state(n)); }

const VarDecl* MachineDef::var(std::string_view n) const {
    for (const auto& v : vars)
        if (v.name == n) return &v;
    return nullptr;
}

std::string_view type_name(VarType t) {
    switch (t) {
    case Prim::Bool: return "bool";
    case Prim::Int: return "int";
    case Prim::String: return "string";
    default: return "?";
    }
}

namespace {

bool fits(const Value& v, VarType t) {
    switch (t) {
    case Prim::Bool: return v.kind == Value::Kind::Bool;
    case Prim::Int: return v.kind == Value::Kind::Int;
    case Prim::String: return v.kind == Value::Kind::Str;
    default: return false;
    }
}

std::string literal_text(const Value& v) {
    switch (v.kind) {
    case Value::Kind::Bool: return v.b ? "true" : "false";
    case Value::Kind::Int: return std::to_string(v.i);
    case Value::Kind::Str: {
        std::string out = "\"";
        for (char c : v.s) {
            if (c == '"' || c == '\\') out += '\\';
            if (c == '\n') {
                out += "\\n";
                continue;
            }
            out += c;
        }
        return out + "\"";
    }
    default: return describe(v);
    }
}

Json literal_json(const Value& v) {
    switch (v.kind) {
    case Value::Kind::Bool: return v.b;
    case Value::Kind::Int: return v.i;
    case Value::Kind::Str: return v.s;
    default: return nullptr;
    }
}

Value literal_from_json(const Json& j) {
    if (j.is_boolean()) return Value::boolean(j.get<bool>());
    if (j.is_number_integer()) return Value::integer(j.get<std::int64_t>());
    if (j.is_string()) return Value::str(j.get<std::string>());
    throw Error(ErrorCode::InvalidFormat, "variable values are booleans, integers or strings", Json{{"value", j}});
}

VarType type_from_name(std::string_view n) {
    if (n == "bool") return Prim::Bool;
    if (n == "int") return Prim::Int;
    if (n == "string") return Prim::String;
    throw Error(ErrorCode::InvalidFormat, "unknown variable type '" + std::string(n) + "'");
}

[[noreturn]] void invalid(const std::string& msg, Json details = Json::object()) {
    throw Error(ErrorCode::InvalidMachine, msg, std::move(details));
}

} // namespace

void validate_machine(const MachineDef& def) {
    std::set<std::string> names;
    for (const auto& s : def.states)
        if (!names.insert(s.name).second)
            throw Error(ErrorCode::DuplicateState, "state '" + s.name + "' is defined twice", Json{{"state", s.name}});
    std::set<std::string> vars;
    for (const auto& v : def.vars) {
        if (!vars.insert(v.name).second) invalid("variable '" + v.name + "' is declared twice", Json{{"var", v.name}});
        if (!fits(v.init, v.type))
            invalid("initializer of '" + v.name + "' is not a " + std::string(type_name(v.type)), Json{{"var", v.name}});
    }
    if (!names.count(def.initial))
        throw Error(ErrorCode::UnknownTarget, "initial state '" + def.initial + "' does not exist",
                    Json{{"state", def.initial}});
    for (const auto& s : def.states) {
        std::set<std::string> events;
        for (const auto& t : s.transitions) {
            if (!events.insert(t.event).second)
                invalid("state '" + s.name + "' has two transitions on '" + t.event + "'",
                        Json{{"state", s.name}, {"event", t.event}});
            if (!names.count(t.target))
                throw Error(ErrorCode::UnknownTarget, "transition '" + t.event + "' of '" + s.name +
                                                          "' targets unknown state '" + t.target + "'",
                            Json{{"state", s.name}, {"event", t.event}, {"target", t.target}});
        }
        for (const auto& st : s.entry) {
            const VarDecl* v = def.var(st.target);
            if (!v) invalid("'" + format_stmt(st) + "' assigns an undeclared variable", Json{{"state", s.name}});
            if (st.negated) {
                const VarDecl* o = def.var(*st.negated);
                if (!o || o->type != Prim::Bool || v->type != Prim::Bool)
                    invalid("'" + format_stmt(st) + "' needs two declared bool variables", Json{{"state", s.name}});
            } else if (!fits(st.literal, v->type)) {
                invalid("'" + format_stmt(st) + "' assigns a value of the wrong type", Json{{"state", s.name}});
            }
        }
    }
}

bool equivalent(const MachineDef& a, const MachineDef& b) {
    auto canonical = [](MachineDef d) {
        std::sort(d.vars.begin(), d.vars.end(), [](const auto& x, const auto& y) { return x.name < y.name; });
        std::sort(d.states.begin(), d.states.end(), [](const auto& x, const auto& y) { return x.name < y.name; });
        for (auto& s : d.states)
            std::sort(s.transitions.begin(), s.transitions.end(),
                      [](const auto& x, const auto& y) { return x.event < y.event; });
        return d;
    };
    return canonical(a) == canonical(b);
}

// ── syntax ──────────────────────────────────────────────────────────────

namespace {

const std::set<std::string, std::less<>> kReserved{"machine", "var", "init", "state", "entry",
                                                   "on",      "not", "true", "false"};

struct Tok {
    enum class Kind { Ident, Int, Str, Sym, End };
    Kind kind = Kind::End;
    std::string text;
    int line = 1;
    int col = 1;
};

[[noreturn]] void syntax_error(const std::string& msg, const Tok& at) {
    throw Error(ErrorCode::SyntaxError, msg + " at line " + std::to_string(at.line) + ", column " + std::to_string(at.col),
                Json{{"line", at.line}, {"column", at.col}, {"found", at.kind == Tok::Kind::End ? "end of input" : at.text}});
}

std::vector<Tok> lex(std::string_view s) {
    std::vector<Tok> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k, ++i) {
            if (s[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    while (i < s.size()) {
        char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
            continue;
        }
        if (s.substr(i, 2) == "//") {
            while (i < s.size() && s[i] != '\n') advance(1);
            continue;
        }
        Tok t;
        t.line = line;
        t.col = col;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
            t.kind = Tok::Kind::Ident;
            t.text = std::string(s.substr(i, j - i));
            advance(j - i);
        } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                   (c == '-' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
            std::size_t j = i + 1;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            t.kind = Tok::Kind::Int;
            t.text = std::string(s.substr(i, j - i));
            advance(j - i);
        } else if (c == '"') {
            std::size_t j = i + 1;
            std::string text;
            while (j < s.size() && s[j] != '"') {
                if (s[j] == '\\' && j + 1 < s.size()) {
                    ++j;
                    text += s[j] == 'n' ? '\n' : s[j];
                } else {
                    text += s[j];
                }
                ++j;
            }
            if (j >= s.size()) syntax_error("unterminated string", t);
            t.kind = Tok::Kind::Str;
            t.text = std::move(text);
            advance(j + 1 - i);
        } else if (s.substr(i, 2) == ":=" || s.substr(i, 2) == "->") {
            t.kind = Tok::Kind::Sym;
            t.text = std::string(s.substr(i, 2));
            advance(2);
        } else if (std::string_view("{}:=;").find(c) != std::string_view::npos) {
            t.kind = Tok::Kind::Sym;
            t.text = std::string(1, c);
            advance(1);
        } else {
            t.text = std::string(1, c);
            syntax_error(std::string("unexpected character '") + c + "'", t);
        }
        out.push_back(std::move(t));
    }
    Tok end;
    end.line = line;
    end.col = col;
    out.push_back(end);
    return out;
}

class Parser {
public:
    explicit Parser(std::string_view text) : toks_(lex(text)) {}

    MachineDef machine() {
        MachineDef def;
        keyword("machine");
        def.name = name();
        bool has_init = false;
        while (peek().kind != Tok::Kind::End) {
            const Tok& t = peek();
            if (is_keyword("var")) {
                next();
                VarDecl v;
                v.name = name();
                symbol(":");
                const Tok& ty = next();
                if (ty.kind != Tok::Kind::Ident || (ty.text != "bool" && ty.text != "int" && ty.text != "string"))
                    syntax_error("expected bool, int or string", ty);
                v.type = type_from_name(ty.text);
                symbol("=");
                v.init = literal();
                def.vars.push_back(std::move(v));
            } else if (is_keyword("init")) {
                if (has_init) syntax_error("second init", t);
                next();
                def.initial = name();
                has_init = true;
            } else if (is_keyword("state")) {
                next();
                def.states.push_back(state());
            } else {
                syntax_error("expected var, init or state", t);
            }
        }
        if (!has_init) syntax_error("missing init", peek());
        return def;
    }

    Stmt stmt() {
        Stmt s;
        s.target = name();
        symbol(":=");
        if (is_keyword("not")) {
            next();
            s.negated = name();
        } else {
            s.literal = literal();
        }
        if (is_symbol(";")) next();
        return s;
    }

    void end() {
        if (peek().kind != Tok::Kind::End) syntax_error("unexpected trailing input", peek());
    }

private:
    State state() {
        State s;
        s.name = name();
        symbol("{");
        bool has_entry = false;
        while (!is_symbol("}")) {
            if (is_keyword("entry")) {
                if (has_entry) syntax_error("second entry block", peek());
                has_entry = true;
                next();
                symbol("{");
                while (!is_symbol("}")) {
                    if (peek().kind == Tok::Kind::End) syntax_error("unterminated entry block", peek());
                    s.entry.push_back(stmt());
                }
                next();
            } else if (is_keyword("on")) {
                next();
                Transition t;
                t.event = name();
                symbol("->");
                t.target = name();
                s.transitions.push_back(std::move(t));
            } else {
                syntax_error("expected entry, on or '}'", peek());
            }
        }
        next();
        return s;
    }

    Value literal() {
        const Tok& t = next();
        if (t.kind == Tok::Kind::Int) {
            try {
                return Value::integer(std::stoll(t.text));
            } catch (const std::out_of_range&) {
                syntax_error("integer out of range", t);
            }
        }
        if (t.kind == Tok::Kind::Str) return Value::str(t.text);
        if (t.kind == Tok::Kind::Ident && (t.text == "true" || t.text == "false")) return Value::boolean(t.text == "true");
        syntax_error("expected a literal", t);
    }

    std::string name() {
        const Tok& t = next();
        if (t.kind != Tok::Kind::Ident) syntax_error("expected a name", t);
        if (kReserved.count(t.text)) syntax_error("'" + t.text + "' is reserved", t);
        return t.text;
    }

    void keyword(std::string_view k) {
        if (!is_keyword(k)) syntax_error("expected '" + std::string(k) + "'", peek());
        next();
    }

    void symbol(std::string_view s) {
        if (!is_symbol(s)) syntax_error("expected '" + std::string(s) + "'", peek());
        next();
    }

    bool is_keyword(std::string_view k) const { return peek().kind == Tok::Kind::Ident && peek().text == k; }
    bool is_symbol(std::string_view s) const { return peek().kind == Tok::Kind::Sym && peek().text == s; }
    const Tok& peek() const { return toks_[pos_]; }
    const Tok& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

    std::vector<Tok> toks_;
    std::size_t pos_ = 0;
};

} // namespace

MachineDef parse_machine(std::string_view text) {
    MachineDef def = Parser(text).machine();
    validate_machine(def);
    return def;
}

Stmt parse_stmt(std::string_view text) {
    Parser p(text);
    Stmt s = p.stmt();
    p.end();
    return s;
}

std::string format_stmt(const Stmt& s) {
    return s.target + " := " + (s.negated ? "not " + *s.negated : literal_text(s.literal));
}

std::string print_machine(const MachineDef& def) {
    std::string out = "machine " + def.name + "\n";
    for (const auto& v : def.vars)
        out += "var " + v.name + ": " + std::string(type_name(v.type)) + " = " + literal_text(v.init) + "\n";
    out += "init " + def.initial + "\n";
    for (const auto& s : def.states) {
        out += "\nstate " + s.name + " {\n";
        if (!s.entry.empty()) {
            out += "  entry {";
            for (std::size_t i = 0; i < s.entry.size(); ++i) out += (i ? "; " : " ") + format_stmt(s.entry[i]);
            out += " }\n";
        }
        for (const auto& t : s.transitions) out += "  on " + t.event + " -> " + t.target + "\n";
        out += "}\n";
    }
    return out;
}

// ── interpreter ─────────────────────────────────────────────────────────

namespace {

void run_entry(const State& s, RuntimeState& rt) {
    for (const auto& st : s.entry)
        rt.vars[st.target] = st.negated ? Value::boolean(!rt.vars.at(*st.negated).b) : st.literal;
}

} // namespace

std::vector<std::string> runtime_problems(const MachineDef& def, const RuntimeState& rt) {
    std::vector<std::string> out;
    if (!def.state(rt.current)) out.push_back("current state '" + rt.current + "' does not exist");
    for (const auto& v : def.vars) {
        auto it = rt.vars.find(v.name);
        if (it == rt.vars.end())
            out.push_back("variable '" + v.name + "' has no value");
        else if (!fits(it->second, v.type))
            out.push_back("variable '" + v.name + "' holds " + describe(it->second));
    }
    for (const auto& [name, value] : rt.vars)
        if (!def.var(name)) out.push_back("value for undeclared variable '" + name + "'");
    for (const auto& [name, n] : rt.visited)
        if (!def.state(name) || n < 0) out.push_back("visited count for '" + name + "'");
    return out;
}

RuntimeState start(const MachineDef& def) {
    RuntimeState rt;
    for (const auto& v : def.vars) rt.vars[v.name] = v.init;
    rt.current = def.initial;
    rt.visited[def.initial] = 1;
    run_entry(*def.state(def.initial), rt);
    return rt;
}

Stepped step(const MachineDef& def, RuntimeState rt, const std::string& event) {
    Stepped out;
    const Transition* t = def.state(rt.current)->on(event);
    if (!t) {
        out.note = "dropped event '" + event + "' in state '" + rt.current + "'";
        out.rt = std::move(rt);
        return out;
    }
    rt.current = t->target;
    ++rt.visited[t->target];
    run_entry(*def.state(t->target), rt);
    out.rt = std::move(rt);
    out.fired = true;
    return out;
}

std::vector<Stepped> drain(const MachineDef& def, RuntimeState rt) {
    std::vector<Stepped> out;
    while (!rt.pending.empty()) {
        std::string e = rt.pending.front();
        rt.pending.pop_front();
        out.push_back(step(def, std::move(rt), e));
        rt = out.back().rt;
    }
    return out;
}

// ── patching ────────────────────────────────────────────────────────────

namespace {

[[noreturn]] void bad_patch(const std::string& msg, Json details = Json::object()) {
    throw Error(ErrorCode::InvalidPatch, msg, std::move(details));
}

std::optional<Value> convert(const Value& v, VarType to) {
    if (fits(v, to)) return v;
    if (v.kind == Value::Kind::Bool && to == Prim::Int) return Value::integer(v.b ? 1 : 0);
    if (v.kind == Value::Kind::Int && to == Prim::String) return Value::str(std::to_string(v.i));
    return std::nullopt;
}

void rename_in_stmts(MachineDef& def, const std::string& from, const std::string& to) {
    for (auto& s : def.states)
        for (auto& st : s.entry) {
            if (st.target == from) st.target = to;
            if (st.negated && *st.negated == from) st.negated = to;
        }
}

State& state_of(MachineDef& def, const std::string& name) {
    State* s = def.state(name);
    if (!s) bad_patch("no state '" + name + "'", Json{{"state", name}});
    return *s;
}

std::vector<VarDecl>::iterator var_of(MachineDef& def, const std::string& name) {
    auto it = std::find_if(def.vars.begin(), def.vars.end(), [&](const VarDecl& v) { return v.name == name; });
    if (it == def.vars.end()) bad_patch("no variable '" + name + "'", Json{{"var", name}});
    return it;
}

/// Applies change records to a definition and, when present, a run-time
/// state. Strategy decisions are taken in finish().
struct Applier {
    explicit Applier(MachineDef d, RuntimeState* r = nullptr) : def(std::move(d)), rt(r) {}

    MachineDef def;
    RuntimeState* rt = nullptr;
    std::vector<std::string> notes;
    std::optional<std::string> removed_current;
    std::vector<std::string> stale;

    void remove_transition(State& s, const std::string& event) {
        auto it = std::find_if(s.transitions.begin(), s.transitions.end(),
                               [&](const Transition& t) { return t.event == event; });
        if (it == s.transitions.end()) bad_patch("state '" + s.name + "' has no transition on '" + event + "'");
        s.transitions.erase(it);
        stale.push_back(event);
    }

    void operator()(const change::AddState& c) {
        if (def.state(c.state.name)) bad_patch("state '" + c.state.name + "' already exists");
        def.states.push_back(c.state);
    }
    void operator()(const change::RenameState& c) {
        state_of(def, c.from);
        if (def.state(c.to)) bad_patch("state '" + c.to + "' already exists");
        for (auto& s : def.states) {
            if (s.name == c.from) s.name = c.to;
            for (auto& t : s.transitions)
                if (t.target == c.from) t.target = c.to;
        }
        if (def.initial == c.from) def.initial = c.to;
        if (!rt) return;
        if (rt->current == c.from) rt->current = c.to;
        if (removed_current == c.from) removed_current = c.to;
        if (auto n = rt->visited.extract(c.from)) {
            n.key() = c.to;
            rt->visited.insert(std::move(n));
        }
    }
    void operator()(const change::RemoveState& c) {
        state_of(def, c.name);
        std::erase_if(def.states, [&](const State& s) { return s.name == c.name; });
        for (auto& s : def.states)
            for (const auto& t : std::vector<Transition>(s.transitions))
                if (t.target == c.name) {
                    remove_transition(s, t.event);
                    notes.push_back("removed transition '" + t.event + "' of '" + s.name + "' into removed state '" +
                                    c.name + "'");
                }
        if (def.initial == c.name) def.initial.clear();
        if (!rt) return;
        if (rt->current == c.name) removed_current = c.name;
        if (auto it = rt->visited.find(c.name); it != rt->visited.end()) {
            notes.push_back("discarded visited count " + std::to_string(it->second) + " of removed state '" + c.name + "'");
            rt->visited.erase(it);
        }
    }
    void operator()(const change::AddVar& c) {
        if (def.var(c.var.name)) bad_patch("variable '" + c.var.name + "' already exists");
        if (!fits(c.var.init, c.var.type)) bad_patch("initializer of '" + c.var.name + "' has the wrong type");
        def.vars.push_back(c.var);
        if (rt) rt->vars[c.var.name] = c.var.init;
    }
    void operator()(const change::RemoveVar& c) {
        def.vars.erase(var_of(def, c.name));
        if (!rt) return;
        notes.push_back("removed variable '" + c.name + "' holding " + literal_text(rt->vars[c.name]));
        rt->vars.erase(c.name);
    }
    void operator()(const change::RenameVar& c) {
        auto it = var_of(def, c.from);
        if (def.var(c.to)) bad_patch("variable '" + c.to + "' already exists");
        it->name = c.to;
        rename_in_stmts(def, c.from, c.to);
        if (!rt) return;
        auto n = rt->vars.extract(c.from);
        n.key() = c.to;
        rt->vars.insert(std::move(n));
    }
    void operator()(const change::ChangeVarType& c) {
        auto it = var_of(def, c.name);
        if (!fits(c.init, c.type)) bad_patch("initializer of '" + c.name + "' has the wrong type");
        if (c.value && !fits(*c.value, c.type)) bad_patch("value for '" + c.name + "' has the wrong type");
        it->type = c.type;
        it->init = c.init;
        if (!rt) return;
        Value& live = rt->vars[c.name];
        if (c.value) {
            live = *c.value;
        } else if (auto v = convert(live, c.type)) {
            live = *v;
        } else {
            notes.push_back("could not convert '" + c.name + "' = " + literal_text(live) + " to " +
                            std::string(type_name(c.type)) + "; reset to " + literal_text(c.init));
            live = c.init;
        }
    }
    void operator()(const change::AddTransition& c) {
        State& s = state_of(def, c.state);
        if (s.on(c.transition.event)) bad_patch("state '" + c.state + "' already has a transition on '" + c.transition.event + "'");
        s.transitions.push_back(c.transition);
    }
    void operator()(const change::RemoveTransition& c) { remove_transition(state_of(def, c.state), c.event); }
    void operator()(const change::ChangeTransitionEvent& c) {
        State& s = state_of(def, c.state);
        if (!s.on(c.from)) bad_patch("state '" + c.state + "' has no transition on '" + c.from + "'");
        if (s.on(c.to)) bad_patch("state '" + c.state + "' already has a transition on '" + c.to + "'");
        for (auto& t : s.transitions)
            if (t.event == c.from) t.event = c.to;
        stale.push_back(c.from);
    }
    void operator()(const change::SetEntryStatements& c) { state_of(def, c.state).entry = c.entry; }
    void operator()(const change::SetInitial& c) { def.initial = c.state; }

    void finish(const CurrentStateStrategy& current, PendingEventStrategy pending) {
        if (def.initial.empty()) {
            if (current.kind != CurrentStateStrategy::Kind::Explicit)
                bad_patch("the initial state is removed and no new initial state is given");
            def.initial = current.target;
        }
        try {
            validate_machine(def);
        } catch (const Error& e) {
            bad_patch("patched machine is invalid: " + std::string(e.what()), Json{{"cause", e.to_json()}});
        }
        if (!rt) return;
        if (removed_current) {
            switch (current.kind) {
            case CurrentStateStrategy::Kind::Reject:
                throw Error(ErrorCode::Rejected, "the patch removes the current state '" + *removed_current + "'",
                            Json{{"reason", "current-state-removed"}, {"state", *removed_current}});
            case CurrentStateStrategy::Kind::GotoInitial: rt->current = def.initial; break;
            case CurrentStateStrategy::Kind::Explicit:
                if (!def.state(current.target)) bad_patch("explicit target '" + current.target + "' does not exist");
                rt->current = current.target;
                break;
            }
            notes.push_back("current state '" + *removed_current + "' removed; now in '" + rt->current + "'");
        }
        std::set<std::string> live_events;
        for (const auto& s : def.states)
            for (const auto& t : s.transitions) live_events.insert(t.event);
        for (const auto& e : std::set<std::string>(stale.begin(), stale.end())) {
            if (live_events.count(e)) continue;
            auto n = std::count(rt->pending.begin(), rt->pending.end(), e);
            if (n == 0) continue;
            if (pending == PendingEventStrategy::Reject)
                throw Error(ErrorCode::Rejected, std::to_string(n) + " pending '" + e + "' events would go stale",
                            Json{{"reason", "pending-events"}, {"event", e}, {"count", n}});
            std::erase(rt->pending, e);
            notes.push_back("dropped " + std::to_string(n) + " pending '" + e + "' event" + (n == 1 ? "" : "s"));
        }
        auto problems = runtime_problems(def, *rt);
        if (!problems.empty()) bad_patch("run-time state is invalid after the patch", Json{{"problems", problems}});
    }
};

} // namespace

MachineDef apply_changes(const MachineDef& def, const std::vector<Change>& changes) {
    Applier a{def};
    for (const auto& c : changes) std::visit(a, c);
    a.finish({}, PendingEventStrategy::Reject);
    return a.def;
}

Patched patch(const MachineDef& def, const RuntimeState& rt, const Patch& p) {
    Patched out;
    out.rt = rt;
    Applier a{def, &out.rt};
    for (const auto& c : p.changes) std::visit(a, c);
    a.finish(p.current, p.pending);
    out.def = std::move(a.def);
    out.notes = std::move(a.notes);
    return out;
}

// ── diff ────────────────────────────────────────────────────────────────

Patch diff_machines(const MachineDef& old_def, const MachineDef& new_def, const std::vector<RenameDirective>& directives) {
    Patch p;
    MachineDef work = old_def;
    std::set<std::pair<int, std::string>> froms, tos;
    for (const auto& d : directives) {
        bool var = d.kind == RenameDirective::Kind::Var;
        int k = var ? 0 : 1;
        bool ok = var ? work.var(d.from) && new_def.var(d.to) && !work.var(d.to)
                      : work.state(d.from) && new_def.state(d.to) && !work.state(d.to);
        if (!ok || d.from == d.to || !froms.insert({k, d.from}).second || !tos.insert({k, d.to}).second)
            throw Error(ErrorCode::BadDirective, "cannot rename " + std::string(var ? "variable" : "state") + " '" +
                                                     d.from + "' to '" + d.to + "'",
                        Json{{"kind", var ? "var" : "state"}, {"from", d.from}, {"to", d.to}});
        Change c = var ? Change{change::RenameVar{d.from, d.to}} : Change{change::RenameState{d.from, d.to}};
        Applier a{work};
        std::visit(a, c);
        work = std::move(a.def);
        p.changes.push_back(std::move(c));
    }

    std::vector<Change> trans_out, removals, var_changes, adds, trans_in, entries;
    for (const auto& s : work.states) {
        const State* n = new_def.state(s.name);
        if (!n) {
            removals.push_back(change::RemoveState{s.name});
            continue;
        }
        std::vector<Transition> gone, fresh;
        for (const auto& t : s.transitions)
            if (const Transition* m = n->on(t.event); !m || m->target != t.target) gone.push_back(t);
        for (const auto& t : n->transitions)
            if (const Transition* m = s.on(t.event); !m || m->target != t.target) fresh.push_back(t);
        for (const auto& g : gone) {
            auto f = std::find_if(fresh.begin(), fresh.end(), [&](const Transition& x) {
                return x.target == g.target && !s.on(x.event) && !n->on(g.event);
            });
            if (f != fresh.end()) {
                trans_out.push_back(change::ChangeTransitionEvent{s.name, g.event, f->event});
                fresh.erase(f);
            } else {
                trans_out.push_back(change::RemoveTransition{s.name, g.event});
            }
        }
        for (const auto& f : fresh) trans_in.push_back(change::AddTransition{s.name, f});
        if (s.entry != n->entry) entries.push_back(change::SetEntryStatements{s.name, n->entry});
    }
    for (const auto& s : new_def.states)
        if (!work.state(s.name)) adds.push_back(change::AddState{s});
    for (const auto& v : work.vars) {
        const VarDecl* n = new_def.var(v.name);
        if (!n)
            removals.push_back(change::RemoveVar{v.name});
        else if (!(v == *n))
            var_changes.push_back(change::ChangeVarType{v.name, n->type, n->init, std::nullopt});
    }
    std::vector<Change> var_adds;
    for (const auto& v : new_def.vars)
        if (!work.var(v.name)) var_adds.push_back(change::AddVar{v});

    for (const auto& r : removals)
        if (auto rv = std::get_if<change::RemoveVar>(&r)) {
            for (const auto& a : var_adds) {
                const auto& av = std::get<change::AddVar>(a).var;
                if (av.type == work.var(rv->name)->type) p.ambiguities.push_back({"var", rv->name, av.name});
            }
        } else {
            const auto& rs = std::get<change::RemoveState>(r);
            for (const auto& a : adds) p.ambiguities.push_back({"state", rs.name, std::get<change::AddState>(a).state.name});
        }

    for (auto* group : {&trans_out, &removals, &var_changes, &var_adds, &adds, &trans_in, &entries})
        p.changes.insert(p.changes.end(), group->begin(), group->end());
    if (work.initial != new_def.initial) p.changes.push_back(change::SetInitial{new_def.initial});
    return p;
}

// ── JSON ────────────────────────────────────────────────────────────────

namespace {

Json state_json(const State& s) {
    Json entry = Json::array(), on = Json::array();
    for (const auto& st : s.entry) entry.push_back(format_stmt(st));
    for (const auto& t : s.transitions) on.push_back({{"event", t.event}, {"target", t.target}});
    return Json{{"name", s.name}, {"entry", entry}, {"on", on}};
}

std::vector<Stmt> stmts_from_json(const Json& j) {
    std::vector<Stmt> out;
    for (const auto& s : j) out.push_back(parse_stmt(s.get<std::string>()));
    return out;
}

State state_from_json(const Json& j) {
    State s;
    s.name = require_string(j, "name");
    if (j.contains("entry")) s.entry = stmts_from_json(j.at("entry"));
    if (j.contains("on"))
        for (const auto& t : j.at("on")) s.transitions.push_back({require_string(t, "event"), require_string(t, "target")});
    return s;
}

struct ChangeJson {
    Json operator()(const change::AddState& c) const { return {{"op", "add_state"}, {"state", state_json(c.state)}}; }
    Json operator()(const change::RenameState& c) const { return {{"op", "rename_state"}, {"from", c.from}, {"to", c.to}}; }
    Json operator()(const change::RemoveState& c) const { return {{"op", "remove_state"}, {"name", c.name}}; }
    Json operator()(const change::AddVar& c) const {
        return {{"op", "add_var"},
                {"var", {{"name", c.var.name}, {"type", type_name(c.var.type)}, {"init", literal_json(c.var.init)}}}};
    }
    Json operator()(const change::RemoveVar& c) const { return {{"op", "remove_var"}, {"name", c.name}}; }
    Json operator()(const change::RenameVar& c) const { return {{"op", "rename_var"}, {"from", c.from}, {"to", c.to}}; }
    Json operator()(const change::ChangeVarType& c) const {
        Json j{{"op", "change_var_type"}, {"name", c.name}, {"type", type_name(c.type)}, {"init", literal_json(c.init)}};
        if (c.value) j["value"] = literal_json(*c.value);
        return j;
    }
    Json operator()(const change::AddTransition& c) const {
        return {{"op", "add_transition"}, {"state", c.state}, {"event", c.transition.event}, {"target", c.transition.target}};
    }
    Json operator()(const change::RemoveTransition& c) const {
        return {{"op", "remove_transition"}, {"state", c.state}, {"event", c.event}};
    }
    Json operator()(const change::ChangeTransitionEvent& c) const {
        return {{"op", "change_transition_event"}, {"state", c.state}, {"from", c.from}, {"to", c.to}};
    }
    Json operator()(const change::SetEntryStatements& c) const {
        Json entry = Json::array();
        for (const auto& st : c.entry) entry.push_back(format_stmt(st));
        return {{"op", "set_entry"}, {"state", c.state}, {"entry", entry}};
    }
    Json operator()(const change::SetInitial& c) const { return {{"op", "set_initial"}, {"state", c.state}}; }
};

} // namespace

Json to_json(const Change& c) { return std::visit(ChangeJson{}, c); }

Change change_from_json(const Json& j) {
    std::string op = require_string(j, "op");
    auto str = [&](const char* k) { return require_string(j, k); };
    if (op == "add_state") return change::AddState{state_from_json(require(j, "state"))};
    if (op == "rename_state") return change::RenameState{str("from"), str("to")};
    if (op == "remove_state") return change::RemoveState{str("name")};
    if (op == "add_var") {
        const Json& v = require(j, "var");
        return change::AddVar{{require_string(v, "name"), type_from_name(require_string(v, "type")),
                               literal_from_json(require(v, "init"))}};
    }
    if (op == "remove_var") return change::RemoveVar{str("name")};
    if (op == "rename_var") return change::RenameVar{str("from"), str("to")};
    if (op == "change_var_type") {
        change::ChangeVarType c{str("name"), type_from_name(str("type")), literal_from_json(require(j, "init")),
                                std::nullopt};
        if (j.contains("value")) c.value = literal_from_json(j.at("value"));
        return c;
    }
    if (op == "add_transition") return change::AddTransition{str("state"), {str("event"), str("target")}};
    if (op == "remove_transition") return change::RemoveTransition{str("state"), str("event")};
    if (op == "change_transition_event") return change::ChangeTransitionEvent{str("state"), str("from"), str("to")};
    if (op == "set_entry") return change::SetEntryStatements{str("state"), stmts_from_json(require(j, "entry"))};
    if (op == "set_initial") return change::SetInitial{str("state")};
    throw Error(ErrorCode::InvalidFormat, "unknown patch record '" + op + "'");
}

Json to_json(const CurrentStateStrategy& s) {
    switch (s.kind) {
    case CurrentStateStrategy::Kind::Reject: return "reject";
    case CurrentStateStrategy::Kind::GotoInitial: return "gotoInitial";
    case CurrentStateStrategy::Kind::Explicit: return Json{{"explicit", s.target}};
    }
    return nullptr;
}

CurrentStateStrategy current_strategy_from_json(const Json& j) {
    if (j == "reject") return {};
    if (j == "gotoInitial") return {CurrentStateStrategy::Kind::GotoInitial, ""};
    if (j.is_object() && j.contains("explicit"))
        return {CurrentStateStrategy::Kind::Explicit, j.at("explicit").get<std::string>()};
    throw Error(ErrorCode::InvalidFormat, "currentStateStrategy is \"reject\", \"gotoInitial\" or {\"explicit\": state}",
                Json{{"value", j}});
}

std::string_view to_string(PendingEventStrategy s) { return s == PendingEventStrategy::Drop ? "drop" : "reject"; }

PendingEventStrategy pending_strategy_from_string(std::string_view s) {
    if (s == "drop") return PendingEventStrategy::Drop;
    if (s == "reject") return PendingEventStrategy::Reject;
    throw Error(ErrorCode::InvalidFormat, "pendingEventStrategy is \"drop\" or \"reject\"");
}

Json to_json(const Patch& p) {
    Json changes = Json::array(), amb = Json::array();
    for (const auto& c : p.changes) changes.push_back(to_json(c));
    for (const auto& a : p.ambiguities) amb.push_back({{"kind", a.kind}, {"removed", a.removed}, {"added", a.added}});
    Json j{{"changes", changes},
           {"currentStateStrategy", to_json(p.current)},
           {"pendingEventStrategy", to_string(p.pending)}};
    if (!amb.empty()) j["ambiguities"] = amb;
    return j;
}

Patch patch_from_json(const Json& j) {
    Patch p;
    for (const auto& c : require(j, "changes")) p.changes.push_back(change_from_json(c));
    if (j.contains("currentStateStrategy")) p.current = current_strategy_from_json(j.at("currentStateStrategy"));
    if (j.contains("pendingEventStrategy"))
        p.pending = pending_strategy_from_string(j.at("pendingEventStrategy").get<std::string>());
    if (j.contains("ambiguities"))
        for (const auto& a : j.at("ambiguities"))
            p.ambiguities.push_back({require_string(a, "kind"), require_string(a, "removed"), require_string(a, "added")});
    return p;
}

Json to_json(const RuntimeState& rt) {
    Json vars = Json::object(), visited = Json::object();
    for (const auto& [k, v] : rt.vars) vars[k] = literal_json(v);
    for (const auto& [k, n] : rt.visited) visited[k] = n;
    return Json{{"current", rt.current},
                {"vars", vars},
                {"visited", visited},
                {"pending", std::vector<std::string>(rt.pending.begin(), rt.pending.end())}};
}

RuntimeState runtime_from_json(const Json& j) {
    RuntimeState rt;
    rt.current = require_string(j, "current");
    for (const auto& [k, v] : require(j, "vars").items()) rt.vars[k] = literal_from_json(v);
    for (const auto& [k, n] : require(j, "visited").items()) rt.visited[k] = n.get<int>();
    if (j.contains("pending"))
        for (const auto& e : j.at("pending")) rt.pending.push_back(e.get<std::string>());
    return rt;
}

// ── sessions ────────────────────────────────────────────────────────────

namespace {

Json step_trace(const std::string& from, const std::string& event, const Stepped& s, bool queued) {
    Json j{{"op", "event"}, {"event", event}, {"from", from}, {"to", s.rt.current}, {"fired", s.fired}};
    if (queued) j["queued"] = true;
    if (!s.note.empty()) j["note"] = s.note;
    return j;
}

Patch load_patch(const MachineDef& def, const Json& record, const std::filesystem::path& base) {
    if (record.at("patch").is_object()) return patch_from_json(record.at("patch"));
    std::filesystem::path file = base / record.at("patch").get<std::string>();
    if (file.extension() != ".sml") return patch_from_json(read_json_file(file));
    std::vector<RenameDirective> directives;
    if (record.contains("renames"))
        for (const auto& d : record.at("renames")) {
            std::string kind = require_string(d, "kind");
            if (kind != "var" && kind != "state") throw Error(ErrorCode::BadDirective, "rename kind is var or state");
            directives.push_back({kind == "var" ? RenameDirective::Kind::Var : RenameDirective::Kind::State,
                                  require_string(d, "from"), require_string(d, "to")});
        }
    return diff_machines(def, parse_machine(read_text_file(file)), directives);
}

} // namespace

void run_record(SessionResult& out, const Json& r, const std::filesystem::path& base) {
    if (r.contains("event")) {
        std::string e = r.at("event").get<std::string>(), from = out.rt.current;
        Stepped s = step(out.def, out.rt, e);
        out.trace.push_back(step_trace(from, e, s, false));
        out.rt = std::move(s.rt);
    } else if (r.contains("enqueue")) {
        out.rt.pending.push_back(r.at("enqueue").get<std::string>());
        out.trace.push_back({{"op", "enqueue"}, {"event", out.rt.pending.back()}, {"pending", out.rt.pending.size()}});
    } else if (r.contains("drain")) {
        RuntimeState rt = out.rt;
        for (const auto& s : drain(out.def, out.rt)) {
            std::string e = rt.pending.front(), from = rt.current;
            out.trace.push_back(step_trace(from, e, s, true));
            rt = s.rt;
        }
        out.rt = std::move(rt);
    } else if (r.contains("patch")) {
        Patch p = load_patch(out.def, r, base);
        if (r.contains("currentStateStrategy")) p.current = current_strategy_from_json(r.at("currentStateStrategy"));
        if (r.contains("pendingEventStrategy"))
            p.pending = pending_strategy_from_string(r.at("pendingEventStrategy").get<std::string>());
        Json t{{"op", "patch"}, {"changes", p.changes.size()}};
        if (r.at("patch").is_string()) t["file"] = r.at("patch");
        try {
            Patched done = patch(out.def, out.rt, p);
            out.def = std::move(done.def);
            out.rt = std::move(done.rt);
            t["state"] = out.rt.current;
            t["notes"] = done.notes;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Rejected) throw;
            t["rejected"] = e.what();
        }
        out.trace.push_back(std::move(t));
    } else {
        throw Error(ErrorCode::InvalidFormat, "session record needs event, enqueue, drain or patch",
                    Json{{"record", r}});
    }
}

SessionResult run_session(const MachineDef& def, const std::vector<Json>& records, const std::filesystem::path& base) {
    SessionResult out{def, start(def), {}};
    out.trace.push_back({{"op", "start"}, {"state", out.rt.current}});
    for (const auto& r : records) run_record(out, r, base);
    return out;
}

} // namespace schemakit::sm
