// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "schemakit/doc.h"
#include "schemakit/error.h"
#include "support.h"

namespace schemakit::doc {
namespace {

using testing::data_json;
using testing::data_lines;
using testing::Gen;

Node base() { return node_from_json(data_json("speakers_base.json")); }
EditLog log_of(const std::string& who) { return edit_log_from_json_lines(data_lines("speakers_" + who + ".jsonl")); }

DocEdit edit(const Json& j) { return doc_edit_from_json(j); }

Node fold(Node doc, const EditLog& log) {
    for (const auto& e : log.edits) doc = apply_edit(doc, e);
    return doc;
}

std::vector<std::string> texts(const Node& root, const std::string& path) {
    std::vector<std::string> out;
    for (const auto& nid : match_path(root, parse_node_path(path))) out.push_back(text_content(*find_node(root, nid)));
    return out;
}

// Cell texts of every row under `path`.
std::vector<std::vector<std::string>> grid(const Node& root, const std::string& path) {
    std::vector<std::vector<std::string>> out;
    for (const auto& nid : match_path(root, parse_node_path(path))) {
        std::vector<std::string> row;
        for (const auto& c : find_node(root, nid)->children) row.push_back(text_content(c));
        out.push_back(row);
    }
    return out;
}

double eval_text(const Node& root, const std::string& text) { return evaluate_formula(root, parse_formula(text)); }

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::UsageError;
}

TEST(DocLoad, AssignsPreorderIds) {
    Node d = base();
    EXPECT_EQ(d.nid, "n0");
    EXPECT_EQ(find_node(d, "n5")->tag, "ul");
    EXPECT_EQ(text_content(*find_node(d, "n10")), "Betty Jean Jennings, betty@rand.com");
    EXPECT_EQ(node_from_json(to_json(d)), d);
    EXPECT_EQ(doc_hash(d), doc_hash(base()));
    EXPECT_EQ(code_of([] { node_from_json(Json::parse(R"({"tag":"a","nid":"x","children":[{"text":"t","nid":"x"}]})")); }),
              ErrorCode::InvalidFormat);
}

TEST(DocPath, ParseFormatAndMatch) {
    for (const char* p : {"/ul[id='speakers']/li", "/dl/dd[1]", "/table[id='a b']/tbody/tr[0]"})
        EXPECT_EQ(format_node_path(parse_node_path(p)), p);
    Node d = base();
    EXPECT_EQ(match_path(d, parse_node_path("/ul[id='speakers']/li")), (std::vector<std::string>{"n6", "n8", "n10"}));
    EXPECT_EQ(match_path(d, parse_node_path("/li[1]")), std::vector<std::string>{"n8"});
    EXPECT_TRUE(match_path(d, parse_node_path("/ul[id='other']/li")).empty());
    EXPECT_EQ(code_of([] { parse_node_path("ul/li"); }), ErrorCode::SyntaxError);
    EXPECT_EQ(code_of([] { parse_node_path("/ul[x]"); }), ErrorCode::SyntaxError);
    EXPECT_EQ(select(d, parse_selector("#n9")), std::vector<std::string>{"n9"});
}

TEST(DocPath, IndexCountsSameTagSiblings) {
    Node d = fold(base(), log_of("tijs"));
    EXPECT_EQ(texts(d, "/dl/dd[0]"), std::vector<std::string>{"$1200"});
    EXPECT_EQ(texts(d, "/dl/dd[1]"), std::vector<std::string>{"=COUNT(/ul[id='speakers']/li)"});
}

TEST(ApplyEdit, SplitEachItem) {
    Node d = apply_edit(base(), edit({{"author", "t"}, {"seq", 1}, {"op", "split_text"},
                                      {"selector", "/ul[id='speakers']/li"}, {"separator", ", "}, {"tag", "span"}}));
    auto rows = grid(d, "/ul[id='speakers']/li");
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"Adele Goldberg", "adele@xerox.com"}));
    EXPECT_EQ(rows[2], (std::vector<std::string>{"Betty Jean Jennings", "betty@rand.com"}));
    EXPECT_EQ(find_node(d, "n6")->children[0].nid, "t.1:n6.0");
}

TEST(ApplyEdit, InsertThenReorder) {
    EditLog j = log_of("jonathan");
    Node inserted = apply_edit(base(), j.edits[0]);
    EXPECT_EQ(texts(inserted, "/ul[id='speakers']/li").size(), 4u);
    Node sorted = apply_edit(inserted, j.edits[1]);
    EXPECT_EQ(texts(sorted, "/ul[id='speakers']/li"),
              (std::vector<std::string>{"Ada Lovelace, ada@rsoc.ac.uk", "Adele Goldberg, adele@xerox.com",
                                        "Betty Jean Jennings, betty@rand.com", "Margaret Hamilton, hamilton@mit.com"}));
    // a permutation: same ids, nothing created or lost
    auto ids = match_path(inserted, parse_node_path("/li"));
    auto after = match_path(sorted, parse_node_path("/li"));
    std::sort(ids.begin(), ids.end());
    std::sort(after.begin(), after.end());
    EXPECT_EQ(ids, after);
}

TEST(ApplyEdit, ChangeTagKeepsIdsAndMisses) {
    EditLog t = log_of("tomas");
    Node d = apply_edit(base(), t.edits[0]);
    EXPECT_EQ(find_node(d, "n5")->tag, "table");
    EXPECT_EQ(find_node(d, "n8")->tag, "tr");
    EXPECT_EQ(code_of([&] { apply_edit(d, t.edits[0]); }), ErrorCode::SelectorMiss);
}

TEST(ApplyEdit, Deterministic) {
    Node a = fold(base(), log_of("tomas"));
    Node b = fold(base(), log_of("tomas"));
    EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(Formula, ParsePrintEvaluate) {
    for (const char* f : {"COUNT(/ul[id='speakers']/li)", "/dl/dd[0] * /dl/dd[1]", "(1 + 2) * 3", "2.5 + /a * 4"})
        EXPECT_EQ(format_formula(parse_formula(f)), f);
    EXPECT_EQ(parse_formula("=count( /a/b )"), parse_formula("COUNT(/a/b)"));
    EXPECT_EQ(code_of([] { parse_formula("SUM(/a)"); }), ErrorCode::SyntaxError);
    Node d = fold(base(), log_of("tijs"));
    EXPECT_EQ(eval_text(d, "COUNT(/ul[id='speakers']/li)"), 3);
    EXPECT_EQ(eval_text(d, "/dl/dd[0] * /dl/dd[1]"), 3600);
    EXPECT_EQ(eval_text(d, "COUNT(/ol/li)"), 0);
    EXPECT_EQ(code_of([&] { eval_text(d, "/dl/dt[0]"); }), ErrorCode::NotNumeric);
    EXPECT_EQ(code_of([&] { eval_text(d, "/dl/dd[9]"); }), ErrorCode::SelectorMiss);
    Node loop = node_from_json(Json::parse(R"({"tag":"dl","children":[{"tag":"dd","children":[{"text":"=/dl/dd[0] + 1"}]}]})"));
    EXPECT_EQ(code_of([&] { eval_text(loop, "/dl/dd[0]"); }), ErrorCode::NotNumeric);
}

TEST(Formula, PrintParseRoundTripGenerated) {
    Gen g(17);
    for (int i = 0; i < 500; ++i) {
        Formula f = testing::any_formula(g, 3);
        ASSERT_EQ(parse_formula(format_formula(f)), f) << format_formula(f);
    }
    EXPECT_EQ(format_formula(parse_formula("1 + (2 + 3)")), "1 + (2 + 3)");
    EXPECT_EQ(format_formula(parse_formula("2 * (3 * 4) * 5")), "2 * (3 * 4) * 5");
}

TEST(Formula, FollowsListToTableRefactor) {
    EditLog t = log_of("tomas");
    Formula f = parse_formula("COUNT(/ul[id='speakers']/li)");
    Node d = base();
    for (const auto& e : t.edits) {
        f = rewrite_formula(f, e, d);
        d = apply_edit(d, e);
    }
    EXPECT_EQ(format_formula(f), "COUNT(/table[id='speakers']/tbody/tr)");
    EXPECT_EQ(evaluate_formula(d, f), 3);
    Formula dd = parse_formula("/dl/dd[0]");
    EXPECT_EQ(rewrite_formula(dd, t.edits[0], base()), dd);
    EditLog j = log_of("jonathan");
    EXPECT_EQ(rewrite_formula(parse_formula("COUNT(/ul/li)"), j.edits[0], base()), parse_formula("COUNT(/ul/li)"));
}

TEST(Formula, HostedFormulasCoEvolve) {
    Node d = fold(fold(base(), log_of("tijs")), log_of("tomas"));
    EXPECT_EQ(texts(d, "/dl/dd[1]"), std::vector<std::string>{"=COUNT(/table[id='speakers']/tbody/tr)"});
    EXPECT_EQ(eval_text(d, "/dl/dd[2]"), 3600);
}

TEST(Formula, UnrewritableIsFlagged) {
    // wrapping one of three items splits the selection across two parents
    Node d = fold(base(), log_of("tijs"));
    DocEdit wrap = edit({{"author", "w"}, {"seq", 1}, {"op", "wrap"}, {"selector", "/li[0]"}, {"tag", "div"}});
    std::vector<std::string> stale;
    Node after = apply_edit(d, wrap, &stale);
    Formula f = parse_formula("COUNT(/ul[id='speakers']/li)");
    EXPECT_EQ(code_of([&] { rewrite_formula(f, wrap, d); }), ErrorCode::Unrewritable);
    ASSERT_EQ(stale.size(), 1u);
    EXPECT_EQ(text_content(*find_node(after, stale[0])), "=COUNT(/ul[id='speakers']/li)");
}

TEST(Formula, CoherenceUnderSchemaEditsGenerated) {
    Gen g(55);
    int checked = 0, unrewritable = 0;
    for (int i = 0; i < 5000 && checked < 600; ++i) {
        Node d = g.document();
        DocEdit e = edit(g.doc_edit(1));
        if (!e.is_schema()) continue;
        e.author = "g";
        Node after;
        try {
            after = apply_edit(d, e);
        } catch (const Error& err) {
            ASSERT_EQ(err.code(), ErrorCode::SelectorMiss);
            continue;
        }
        std::string p = g.list_path(true);
        for (const std::string& text : {"COUNT(" + p + ")", "COUNT(" + p + ") * /dl/dd[0] + 1", std::string("/dl/dd[2]")}) {
            Formula f = parse_formula(text);
            try {
                Formula r = rewrite_formula(f, e, d);
                EXPECT_EQ(evaluate_formula(d, f), evaluate_formula(after, r)) << text << " " << to_json(e).dump();
                ++checked;
            } catch (const Error& err) {
                ASSERT_EQ(err.code(), ErrorCode::Unrewritable);
                ++unrewritable;
            }
        }
    }
    EXPECT_GE(checked, 600);
    EXPECT_LT(unrewritable, checked / 10);
}

TEST(Invalidate, Examples) {
    Node d = fold(base(), log_of("tijs"));
    auto formulas = collect_formulas(d);
    ASSERT_EQ(formulas.size(), 2u);
    std::set<std::string> both{formulas[0].id, formulas[1].id};
    EXPECT_EQ(invalidate(d, formulas, log_of("jonathan").edits[0]), both);
    EXPECT_EQ(invalidate(d, formulas, log_of("tomas").edits[0]), both);
    DocEdit heading = edit({{"author", "x"}, {"seq", 1}, {"op", "set_text"}, {"selector", "/h1"}, {"text", "PX 2024"}});
    EXPECT_TRUE(invalidate(d, formulas, heading).empty());
    DocEdit price = edit({{"author", "x"}, {"seq", 1}, {"op", "set_text"}, {"selector", "/dl/dd[0]"}, {"text", "$900"}});
    EXPECT_EQ(invalidate(d, formulas, price), std::set<std::string>{formulas[1].id});
}

TEST(Merge, ListEditsMeetTableRefactor) {
    Node b = base();
    MergeResult r = merge_logs(b, {log_of("jonathan"), log_of("tomas")});
    EXPECT_EQ(grid(r.doc, "/table[id='speakers']/thead/tr"), (std::vector<std::vector<std::string>>{{"Name", "Email", "Who"}}));
    EXPECT_EQ(grid(r.doc, "/table[id='speakers']/tbody/tr"),
              (std::vector<std::vector<std::string>>{{"Ada Lovelace", "ada@rsoc.ac.uk", ""},
                                                     {"Adele Goldberg", "adele@xerox.com", "TP"},
                                                     {"Betty Jean Jennings", "betty@rand.com", "JE"},
                                                     {"Margaret Hamilton", "hamilton@mit.com", "JE"}}));
    EXPECT_TRUE(r.conflicts.empty());
    ASSERT_EQ(r.questions.size(), 1u);
    EXPECT_EQ(r.questions[0].row, "jonathan.1:0");
    EXPECT_EQ(r.questions[0].column, "Who");
    EXPECT_EQ(r.questions[0].asked_of, "tomas");
    MergeResult swapped = merge_logs(b, {log_of("tomas"), log_of("jonathan")});
    EXPECT_EQ(to_json(swapped.doc).dump(), to_json(r.doc).dump());
    EXPECT_EQ(swapped.questions, r.questions);
}

TEST(Merge, ThreeWayWithBudget) {
    MergeResult r = merge_logs(base(), {log_of("tijs"), log_of("tomas"), log_of("jonathan")});
    EXPECT_EQ(texts(r.doc, "/dl/dd[1]"), std::vector<std::string>{"=COUNT(/table[id='speakers']/tbody/tr)"});
    EXPECT_EQ(eval_text(r.doc, "/dl/dd[1]"), 4);
    EXPECT_EQ(eval_text(r.doc, "/dl/dd[2]"), 4800);
    EXPECT_EQ(r.questions.size(), 1u);
}

TEST(Merge, EmptyLogIsFold) {
    EditLog none{"zed", std::nullopt, {}};
    for (const char* who : {"jonathan", "tomas", "tijs"}) {
        EditLog log = log_of(who);
        MergeResult r = merge_logs(base(), {log, none});
        EXPECT_EQ(r.doc, fold(base(), log)) << who;
        EXPECT_TRUE(r.conflicts.empty());
        EXPECT_TRUE(r.questions.empty());
    }
}

TEST(Merge, RejectsBadLogs) {
    EditLog t = log_of("tomas");
    EditLog wrong_base = t;
    wrong_base.base = "0000000000000000";
    EXPECT_EQ(code_of([&] { merge_logs(base(), {wrong_base}); }), ErrorCode::InvalidFormat);
    EditLog out_of_order = t;
    std::swap(out_of_order.edits[0], out_of_order.edits[1]);
    EXPECT_EQ(code_of([&] { merge_logs(base(), {out_of_order}); }), ErrorCode::InvalidFormat);
    EditLog good_base = t;
    good_base.base = doc_hash(base());
    EXPECT_NO_THROW(merge_logs(base(), {good_base}));
}

TEST(Merge, IncompatibleTagsConflict) {
    auto tag_log = [](const std::string& who, const std::string& tag) {
        return edit_log_from_json_lines({{{"author", who}},
                                         {{"seq", 1}, {"op", "change_tag"}, {"selector", "/ul"}, {"tag", tag}}});
    };
    EditLog a = tag_log("ann", "ol"), b = tag_log("bo", "table");
    MergeResult r = merge_logs(base(), {a, b});
    ASSERT_EQ(r.conflicts.size(), 1u);
    EXPECT_EQ(r.conflicts[0].reason, "incompatible");
    EXPECT_EQ(r.conflicts[0].nodes, std::vector<std::string>{"n5"});
    EXPECT_FALSE(r.conflicts[0].winner);
    EXPECT_EQ(find_node(r.doc, "n5")->tag, "ul");
    MergeResult prio = merge_logs(base(), {b, a}, MergeOptions{"bo"});
    EXPECT_EQ(prio.conflicts[0].winner, "bo");
    EXPECT_EQ(find_node(prio.doc, "n5")->tag, "table");
}

TEST(Merge, DuplicateWrapAppliesOnce) {
    auto wrap_log = [](const std::string& who) {
        return edit_log_from_json_lines({{{"author", who}},
                                         {{"seq", 1}, {"op", "wrap"}, {"selector", "/ul/li"}, {"tag", "group"}},
                                         {{"seq", 2}, {"op", "set_text"}, {"selector", "#" + who + ".1:n5"}, {"text", "x"}}});
    };
    MergeResult r = merge_logs(base(), {wrap_log("bo"), wrap_log("ann")});
    EXPECT_EQ(match_path(r.doc, parse_node_path("/group")).size(), 1u);
    EXPECT_TRUE(r.conflicts.empty());
}

TEST(Merge, InsertTransportedThroughOtherSchemaEdits) {
    // bob edits after a schema change of his own, so his insert meets
    // alice's table refactor in phase two
    EditLog alice = edit_log_from_json_lines(
        {{{"author", "alice"}},
         {{"seq", 1}, {"op", "change_tag"}, {"selector", "/ul"}, {"tag", "table"}, {"child_map", {{"li", "tr"}}}},
         {{"seq", 2}, {"op", "wrap"}, {"selector", "/table/tr"}, {"tag", "tbody"}},
         {{"seq", 3}, {"op", "split_text"}, {"selector", "/table/tbody/tr"}, {"separator", ", "}, {"tag", "td"}},
         {{"seq", 4}, {"op", "add_column"}, {"selector", "/table"}, {"header", "Who"}, {"default", "?"}}});
    EditLog bob = edit_log_from_json_lines(
        {{{"author", "bob"}},
         {{"seq", 1}, {"op", "change_tag"}, {"selector", "/h1"}, {"tag", "header"}},
         {{"seq", 2}, {"op", "insert_item"}, {"selector", "/ul"}, {"position", 1},
          {"subtree", {{"tag", "li"}, {"children", {{{"text", "Ada Lovelace, ada@rsoc.ac.uk"}}}}}}},
         {{"seq", 3}, {"op", "reorder"}, {"selector", "/ul"}},
         {{"seq", 4}, {"op", "set_text"}, {"selector", "/ul/li[0]"}, {"text", "Ada King, ada@rsoc.ac.uk"}}});
    MergeResult r = merge_logs(base(), {bob, alice});
    EXPECT_EQ(match_path(r.doc, parse_node_path("/header")).size(), 1u);
    EXPECT_EQ(grid(r.doc, "/table/tbody/tr"),
              (std::vector<std::vector<std::string>>{{"Ada King", "ada@rsoc.ac.uk", "?"},
                                                     {"Adele Goldberg", "adele@xerox.com", "?"},
                                                     {"Betty Jean Jennings", "betty@rand.com", "?"},
                                                     {"Margaret Hamilton", "hamilton@mit.com", "?"}}));
    EXPECT_TRUE(r.conflicts.empty());
    ASSERT_EQ(r.questions.size(), 1u);
    EXPECT_EQ(r.questions[0].row, "bob.2:0");
    EXPECT_EQ(r.questions[0].default_value, "?");
}

TEST(Merge, CommutesGenerated) {
    Gen g(2024);
    int conflicted = 0;
    for (int i = 0; i < 300; ++i) {
        Node d = g.document();
        EditLog a = g.edit_log("ann"), b = g.edit_log("bo");
        MergeResult ab = merge_logs(d, {a, b});
        MergeResult ba = merge_logs(d, {b, a});
        ASSERT_EQ(to_json(ab.doc).dump(), to_json(ba.doc).dump());
        ASSERT_EQ(ab.conflicts, ba.conflicts);
        ASSERT_EQ(ab.questions, ba.questions);
        conflicted += !ab.conflicts.empty();
    }
    EXPECT_GT(conflicted, 0);
}

TEST(DocEditJson, RoundTrip) {
    for (const char* who : {"jonathan", "tomas", "tijs"})
        for (const auto& e : log_of(who).edits) EXPECT_EQ(doc_edit_from_json(to_json(e)), e);
    EXPECT_EQ(code_of([] { doc_edit_from_json(Json{{"op", "explode"}, {"selector", "/a"}}); }), ErrorCode::InvalidFormat);
}

} // namespace
} // namespace schemakit::doc
