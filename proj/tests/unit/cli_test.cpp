// Copyright 2026 The schemakit Authors
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "schemakit/cli.h"
#include "schemakit/database.h"
#include "schemakit/error.h"
#include "support.h"

namespace schemakit::cli {
namespace {

using testing::data_json;
using testing::data_lines;
using testing::data_path;

struct Outcome {
    int code = 0;
    std::string out;
    std::string diag;

    std::vector<Json> out_lines() const { return parse_json_lines(out); }
    std::vector<Json> diag_lines() const { return parse_json_lines(diag); }
};

Outcome run(const std::vector<std::string>& argv, const std::string& input = "", Mode mode = Mode::Batch) {
    std::istringstream in(input);
    std::ostringstream out, diag;
    Session s;
    s.workspace = SCHEMAKIT_TESTDATA;
    s.mode = mode;
    s.in = &in;
    s.out = &out;
    s.diag = &diag;
    Outcome r;
    r.code = run_command(s, argv);
    r.out = out.str();
    r.diag = diag.str();
    return r;
}

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "schemakit_cli_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

const char* kCompletedAnswer =
    R"({"mapping": {"cases": [{"from": {"bool": false}, "to": {"none": null}}, {"from": {"bool": true}, "to": {"some": {"datetime": "2024-05-01"}}}]}})";

Json final_of(const Outcome& r) { return r.out_lines().back().at("final"); }

TEST(Cli, ExtractWritesCustomersTable) {
    auto out = scratch("orders_extracted.json");
    Outcome r = run({"db", "extract", "--db", "orders_flat.json", "--cols", "customer_name,customer_address", "--new", "Customers",
                 "--key", "cid", "--fk", "cid", "-o", out.string()});
    ASSERT_EQ(r.code, 0) << r.diag;
    EXPECT_TRUE(r.out.empty());
    Json db = read_json_file(out);
    Json customers = Json::parse(
        R"([[1, "Wile E Coyote", "123 Desert Station"], [2, "Daffy Duck", "White Rock Lake"]])");
    EXPECT_EQ(db["tables"]["Customers"]["rows"], customers);
    Json fks = Json::array();
    for (const auto& row : db["tables"]["Orders"]["rows"]) fks.push_back(row.back());
    EXPECT_EQ(fks, Json::parse("[1, 2, 1]"));
}

TEST(Cli, QueryEvalOnEmptyDb) {
    Json db = data_json("orders_flat.json");
    db["tables"]["Orders"]["rows"] = Json::array();
    auto path = scratch("empty.json");
    write_text_file(path, db.dump());
    Outcome r = run({"query", "eval", "--db", path.string(), "--query", "pending_orders.sql"});
    EXPECT_EQ(r.code, 0) << r.diag;
    EXPECT_EQ(r.out, "oid,item,quantity,customer_name,customer_address\r\n");
}

TEST(Cli, QueryRewrite) {
    auto corr = scratch("orders_corr.json");
    ASSERT_EQ(run({"db", "extract", "--db", "orders_flat.json", "--cols", "customer_name,customer_address", "--new",
                   "Customers", "--key", "cid", "--fk", "cid", "--correspondence-out", corr.string()})
                  .code,
              0);
    Outcome r = run({"query", "rewrite", "--query", "pending_orders.sql", "--correspondence", corr.string()});
    ASSERT_EQ(r.code, 0) << r.diag;
    EXPECT_NE(r.out.find("JOIN Customers ON Orders.cid = Customers.cid"), std::string::npos) << r.out;
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"frobnicate"}).code, 2);
    EXPECT_EQ(run({"db", "extract", "--db", "orders_flat.json"}).code, 2);
    EXPECT_EQ(run({"lens", "put", "--lens", "todo_assignee_lens.json", "--written", "todo_state.json", "--current",
                   "todo_state.json", "--policy", "sideways"})
                  .code,
              2);
    Outcome missing = run({"query", "eval", "--db", "nowhere.json", "--query", "pending_orders.sql"});
    EXPECT_EQ(missing.code, 1);
    ASSERT_EQ(missing.diag_lines().size(), 1u);
    EXPECT_EQ(missing.diag_lines()[0]["error"], "IoError");
    EXPECT_TRUE(missing.out.empty());
    Outcome help = run({"--help"});
    EXPECT_EQ(help.code, 0);
    EXPECT_NE(help.out.find("live"), std::string::npos);
}

TEST(Cli, ModeFromEnvironment) {
    ::unsetenv("SCHEMAKIT_MODE");
    EXPECT_EQ(mode_from_env(), Mode::Batch);
    ::setenv("SCHEMAKIT_MODE", "interactive", 1);
    EXPECT_EQ(mode_from_env(), Mode::Interactive);
    ::setenv("SCHEMAKIT_MODE", "chatty", 1);
    EXPECT_THROW(mode_from_env(), Error);
    ::unsetenv("SCHEMAKIT_MODE");
}

TEST(Cli, SmRunPrintsTraceAndFinalState) {
    Outcome r = run({"sm", "run", "doors.sml", "doors_session.jsonl"});
    ASSERT_EQ(r.code, 0) << r.diag;
    EXPECT_EQ(final_of(r), Json::parse(R"({"current": "locked", "vars": {"closedFlag": true, "slams": 0},
        "visited": {"closed": 3, "locked": 1, "opened": 2}, "pending": []})"));
    EXPECT_EQ(r.out_lines().front()["op"], "start");
    // the ignored 'open' in 'locked' is reported
    ASSERT_EQ(r.diag_lines().size(), 1u);
    EXPECT_TRUE(r.diag_lines()[0].contains("note"));
}

// ── questions ───────────────────────────────────────────────────────────

TEST(Cli, PolicyQuestion) {
    auto written = scratch("written.json"), current = scratch("current.json");
    write_text_file(written, R"({"record":{"items":{"list":[{"record":{"title":{"str":"x"},"assignee":{"some":{"str":"C"}}}}]}}})");
    write_text_file(current, R"({"record":{"items":{"list":[{"record":{"title":{"str":"x"},"assignees":{"list":[{"str":"A"},{"str":"B"}]}}}]}}})");
    std::vector<std::string> argv{"lens", "put", "--lens", "todo_assignee_lens.json", "--written", written.string(),
                                  "--current", current.string()};
    Outcome batch = run(argv);
    EXPECT_EQ(batch.code, 1);
    EXPECT_EQ(batch.diag_lines().at(0)["error"], "PolicyRequired");

    Json expect = Json::parse(R"({"record":{"items":{"list":[{"record":{"title":{"str":"x"},
        "assignees":{"list":[{"str":"C"},{"str":"A"},{"str":"B"}]}}}]}}})");
    Outcome asked = run(argv, "prepend\n", Mode::Interactive);
    ASSERT_EQ(asked.code, 0) << asked.diag;
    EXPECT_EQ(asked.out_lines().at(0), expect);
    auto flagged = argv;
    flagged.insert(flagged.end(), {"--policy", "prepend"});
    EXPECT_EQ(run(flagged).out, asked.out);
}

TEST(Cli, SplitQuestions) {
    auto two = scratch("split_in.json");
    ASSERT_EQ(run({"db", "extract", "--db", "orders_flat.json", "--cols", "customer_name,customer_address", "--new",
                   "Customers", "--key", "cid", "--fk", "cid", "-o", two.string()})
                  .code,
              0);
    std::vector<std::string> argv{"db", "split", "--db", two.string(), "--table", "Customers", "--id", "1"};
    Outcome batch = run(argv);
    EXPECT_EQ(batch.code, 1);
    EXPECT_EQ(batch.diag_lines().at(0)["error"], "NotInteractive");

    Outcome asked = run(argv, "\"old\"\n\"new\"\n", Mode::Interactive);
    ASSERT_EQ(asked.code, 0) << asked.diag;
    Json db = asked.out_lines().at(0);
    // orders 1 and 3 referenced customer 1; order 3 moves to the clone
    EXPECT_EQ(db["tables"]["Customers"]["rows"].size(), 3u);
    EXPECT_EQ(db["tables"]["Orders"]["rows"][0].back(), 1);
    EXPECT_EQ(db["tables"]["Orders"]["rows"][2].back(), 3);

    auto reassign = scratch("reassign.json");
    write_text_file(reassign, R"({"move": [{"table": "Orders", "key": 3}]})");
    auto flagged = argv;
    flagged.insert(flagged.end(), {"--reassign", reassign.string()});
    EXPECT_EQ(run(flagged).out, asked.out);
}

TEST(Cli, DocMergeAndEval) {
    auto merged = scratch("merged.json");
    Outcome r = run({"doc", "merge", "--base", "speakers_base.json", "speakers_jonathan.jsonl", "speakers_tomas.jsonl",
                 "speakers_tijs.jsonl", "-o", merged.string()});
    ASSERT_EQ(r.code, 0) << r.diag;
    ASSERT_EQ(r.diag_lines().size(), 1u);
    EXPECT_EQ(r.diag_lines()[0]["question"]["column"], "Who");
    Outcome e = run({"doc", "eval", "--doc", merged.string()});
    ASSERT_EQ(e.code, 0) << e.diag;
    auto lines = e.out_lines();
    ASSERT_EQ(lines.size(), 2u);
    EXPECT_EQ(lines[0]["value"], 4);
    EXPECT_EQ(lines[1]["value"], 4800);
    EXPECT_EQ(run({"doc", "eval", "--doc", merged.string(), "--formula", "COUNT(/table[id='speakers']/tbody/tr)"}).out,
              "4\n");

    Outcome answered = run({"doc", "merge", "--base", "speakers_base.json", "speakers_jonathan.jsonl", "speakers_tomas.jsonl"},
                       "\"TP\"\n", Mode::Interactive);
    ASSERT_EQ(answered.code, 0);
    EXPECT_NE(answered.out.find("\"TP\""), std::string::npos);
}

TEST(Cli, LensDropsGoToDiagnostics) {
    auto data = scratch("assignees.json");
    write_text_file(data, R"({"record":{"items":{"list":[{"record":{"title":{"str":"x"},"assignees":{"list":[{"str":"A"},{"str":"B"}]}}}]}}})");
    Outcome r = run({"lens", "bwd", "--lens", "todo_assignee_lens.json", "--data", data.string()});
    ASSERT_EQ(r.code, 0) << r.diag;
    ASSERT_EQ(r.diag_lines().size(), 1u);
    EXPECT_EQ(r.diag_lines()[0]["drop"]["value"], Json::parse(R"([{"str":"B"}])"));
}

TEST(Cli, TypeDiffFeedsMigrate) {
    Outcome d = run({"type", "diff", "todo_state_type.json", "todo_state_type_v2.json"});
    ASSERT_EQ(d.code, 0) << d.diag;
    auto edits = scratch("edits.jsonl");
    write_text_file(edits, d.out);
    Outcome applied = run({"type", "apply", "--type", "todo_state_type.json", "--edits", edits.string()});
    EXPECT_EQ(applied.out_lines().at(0), data_json("todo_state_type_v2.json"));
    std::vector<std::string> argv{"migrate", "--type", "todo_state_type.json", "--edits", edits.string(), "--state",
                                  "todo_state.json"};
    EXPECT_EQ(run(argv).code, 1);
    argv.insert(argv.end(), {"--hints", "todo_hints.json"});
    Outcome m = run(argv);
    ASSERT_EQ(m.code, 0) << m.diag;
    Json items = m.out_lines().at(0)["record"]["items"]["list"];
    EXPECT_EQ(items[0]["record"]["completed"], Json::parse(R"({"some": {"datetime": "2024-05-01"}})"));
    EXPECT_EQ(items[1]["record"]["completed"], Json::parse(R"({"none": null})"));
}

// ── live sessions ───────────────────────────────────────────────────────

TEST(Cli, LiveTodoSession) {
    Outcome r = run({"live", "run", "--type", "todo_state_type.json", "--state", "todo_empty.json", "--machine", "doors.sml",
                 "todo_live.jsonl"});
    ASSERT_EQ(r.code, 0) << r.diag;
    int starts = 0;
    for (const auto& t : r.out_lines()) starts += t.value("op", "") == "start";
    EXPECT_EQ(starts, 1);

    Json fin = final_of(r);
    EXPECT_EQ(fin["type"], data_json("todo_state_type_v2.json"));
    Json items = fin["state"]["record"]["items"]["list"];
    ASSERT_EQ(items.size(), 3u);
    EXPECT_EQ(items[0]["record"]["title"], Json::parse(R"({"str": "Check Twitter"})"));
    EXPECT_EQ(items[0]["record"]["completed"], Json::parse(R"({"some": {"datetime": "2024-05-01"}})"));
    EXPECT_EQ(items[1]["record"]["completed"], Json::parse(R"({"none": null})"));

    // the machine part equals running its records alone
    std::vector<Json> sm_records;
    for (const auto& rec : data_lines("todo_live.jsonl"))
        if (rec.contains("sm")) sm_records.push_back(rec["sm"]);
    auto alone = sm::run_session(sm::parse_machine(testing::data_text("doors.sml")), sm_records, SCHEMAKIT_TESTDATA);
    EXPECT_EQ(fin["machine"], sm::to_json(alone.rt));
}

TEST(Cli, LiveEmptyScriptKeepsInitialState) {
    auto empty = scratch("empty.jsonl");
    write_text_file(empty, "");
    Outcome r = run({"live", "run", "--type", "todo_state_type.json", "--state", "todo_state.json", empty.string()});
    ASSERT_EQ(r.code, 0) << r.diag;
    EXPECT_EQ(final_of(r)["state"], data_json("todo_state.json"));
    EXPECT_EQ(r.out_lines().size(), 2u);
}

TEST(Cli, LiveUnansweredEditLeavesStateUntouched) {
    std::vector<std::string> argv{"live", "run", "--type", "todo_state_type.json", "--state", "todo_state.json",
                                  "todo_live_unhinted.jsonl"};
    Outcome batch = run(argv);
    EXPECT_EQ(batch.code, 1);
    EXPECT_EQ(batch.diag_lines().at(0)["error"], "NeedsInput");
    Json fin = final_of(batch);
    EXPECT_EQ(fin["type"], data_json("todo_state_type.json"));
    Json expect = data_json("todo_state.json");
    expect["record"]["items"]["list"][1]["record"]["title"]["str"] = "Write the paper, again";
    EXPECT_EQ(fin["state"], expect);

    Outcome asked = run(argv, std::string(kCompletedAnswer) + "\n", Mode::Interactive);
    ASSERT_EQ(asked.code, 0) << asked.diag;
    EXPECT_EQ(final_of(asked)["type"], data_json("todo_state_type_v2.json"));
}

TEST(Cli, ReplayIsByteIdentical) {
    std::vector<std::string> argv{"live", "run", "--type", "todo_state_type.json", "--state", "todo_empty.json",
                                  "--machine", "doors.sml", "todo_live.jsonl"};
    Outcome a = run(argv), b = run(argv);
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(a.diag, b.diag);

    auto transcript = scratch("transcript.jsonl");
    std::vector<std::string> asked_argv{"--transcript", transcript.string(), "live", "run", "--type",
                                        "todo_state_type.json", "--state", "todo_state.json",
                                        "todo_live_unhinted.jsonl"};
    Outcome asked = run(asked_argv, std::string(kCompletedAnswer) + "\n", Mode::Interactive);
    ASSERT_EQ(asked.code, 0) << asked.diag;
    std::vector<std::string> replay_argv{"--answers", transcript.string(), "live", "run", "--type",
                                         "todo_state_type.json", "--state", "todo_state.json",
                                         "todo_live_unhinted.jsonl"};
    Outcome first = run(replay_argv), second = run(replay_argv);
    EXPECT_EQ(first.code, 0) << first.diag;
    EXPECT_EQ(first.out, asked.out);
    EXPECT_EQ(first.out, second.out);
}

} // namespace
} // namespace schemakit::cli
