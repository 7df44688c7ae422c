#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "cli.hpp"
#include "pmlab/error.hpp"

namespace fs = std::filesystem;
using namespace pmlab;

namespace {

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("pmlab_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string str(const std::string& child = "") const { return (path_ / child).string(); }

private:
    fs::path path_;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "pmlab");
    std::vector<char*> argv;
    for (std::string& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

cli::ExperimentPlan tiny_plan(const std::string& out) {
    cli::ExperimentPlan plan = cli::parse_plan(R"({"cells": [1, 4], "sessions_per_p_star": 1, "n_rounds": 4})");
    plan.out_dir = out;
    plan.parallel = 2;
    return plan;
}

class FailingTransport final : public ChatTransport {
public:
    std::string complete(const std::vector<ChatMessage>&, const std::string&) override {
        throw Error(ErrorCode::TransportError, "unreachable");
    }
};

}  // namespace

TEST(Plan, DefaultsAndOverrides) {
    const cli::ExperimentPlan d = cli::default_plan();
    ASSERT_EQ(d.cells.size(), 4u);
    EXPECT_EQ(d.cells[0].sessions_per_p_star, 20);
    const cli::ExperimentPlan p = cli::parse_plan(
        R"({"master_seed": 9, "cells": [2], "n_agents": 6, "n_high": 2, "hurdle": "expected_return", "endowment": 500})");
    EXPECT_EQ(p.master_seed, 9u);
    ASSERT_EQ(p.cells.size(), 1u);
    EXPECT_EQ(p.cells[0].config.n_agents, 6);
    EXPECT_EQ(p.cells[0].config.endowment, 500 * kCentsPerDollar);
    EXPECT_EQ(p.cells[0].config.knobs.hurdle, HurdleMode::ExpectedReturn);
    EXPECT_DOUBLE_EQ(p.cells[0].config.horizon.risk_free, 0.08);
}

TEST(Plan, ScalesLongCellsWhenHorizonChanges) {
    const cli::ExperimentPlan p = cli::parse_plan(R"({"cells": [2], "long_horizon_days": 365})");
    EXPECT_NEAR(p.cells[0].config.horizon.risk_free, 0.04, 1e-12);
}

TEST(Plan, Rejections) {
    auto code = [](const std::string& text) {
        try {
            cli::parse_plan(text);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::IoError;
    };
    EXPECT_EQ(code(R"({"sessions": 3})"), ErrorCode::InvalidConfig);
    EXPECT_EQ(code(R"({"n_agents": "ten"})"), ErrorCode::InvalidConfig);
    EXPECT_EQ(code(R"({"p_stars": [0.0]})"), ErrorCode::InvalidConfig);
    EXPECT_EQ(code(R"({"cells": [7]})"), ErrorCode::InvalidConfig);
    EXPECT_EQ(code(R"({"backend": "human"})"), ErrorCode::InvalidConfig);
    EXPECT_EQ(code("[1, 2]"), ErrorCode::InvalidConfig);
}

TEST(Run, WritesLogsAndManifestDeterministically) {
    TempDir a, b;
    const cli::RunSummary s = cli::run_plan(tiny_plan(a.str()));
    EXPECT_EQ(s.ok, 4);
    cli::run_plan(tiny_plan(b.str()));

    int logs = 0;
    for (const auto& e : fs::directory_iterator(a.str())) {
        if (e.path().extension() == ".jsonl") {
            ++logs;
            EXPECT_EQ(slurp(e.path().string()), slurp(b.str(e.path().filename().string())));
        }
    }
    EXPECT_EQ(logs, 4);
    EXPECT_EQ(slurp(a.str("manifest.json")).size(), slurp(b.str("manifest.json")).size());

    const auto manifest = nlohmann::json::parse(slurp(a.str("manifest.json")));
    EXPECT_EQ(manifest["schema"], "pmlab.manifest/1");
    ASSERT_EQ(manifest["sessions"].size(), 4u);
    EXPECT_EQ(manifest["sessions"][0]["status"], "ok");
    EXPECT_FALSE(fs::exists(a.str("manifest.json.tmp")));
}

TEST(Run, SessionIndicesFollowPlanOrder) {
    const auto jobs = cli::plan_jobs(tiny_plan("x"));
    ASSERT_EQ(jobs.size(), 4u);
    EXPECT_EQ(jobs[0].file, "cell1_p0.05_s000.jsonl");
    EXPECT_EQ(jobs[3].file, "cell4_p0.95_s000.jsonl");
    for (std::size_t i = 0; i < jobs.size(); ++i) EXPECT_EQ(jobs[i].session_index, i);
}

TEST(Run, UnreachableChatEndpointFlagsDegradedSessions) {
    TempDir dir;
    cli::ExperimentPlan plan = tiny_plan(dir.str());
    plan.backend = "chat";
    plan.max_attempts = 1;
    const cli::RunSummary s = cli::run_plan(plan, [] { return std::make_shared<FailingTransport>(); });
    EXPECT_EQ(s.degraded, 4);
    EXPECT_EQ(s.failed, 0);
    const auto manifest = nlohmann::json::parse(slurp(dir.str("manifest.json")));
    for (const auto& entry : manifest["sessions"]) EXPECT_EQ(entry["status"], "degraded");
}

TEST(Command, RunAnalyzeTranscript) {
    TempDir dir;
    std::ofstream(dir.str("plan.json")) << R"({"cells": [1, 2, 3, 4], "sessions_per_p_star": 2, "n_rounds": 5})";
    const CliResult run = run_cli({"run", "--plan", dir.str("plan.json"), "--seed", "3", "--out", dir.str("runs")});
    ASSERT_EQ(run.code, 0) << run.err;

    for (const std::string measure : {"last", "midpoint"}) {
        const CliResult an = run_cli({"analyze", "--logs", dir.str("runs"), "--price-measure", measure});
        ASSERT_EQ(an.code, 0) << an.err;
        EXPECT_NE(an.out.find("Price measure: " + measure), std::string::npos);
        for (const char* f : {"metrics.csv", "cell_means.csv", "regressions.csv", "mwu.csv", "summary.txt"}) {
            const std::string path = dir.str("runs/analysis-" + measure + "/" + f);
            EXPECT_FALSE(slurp(path).empty()) << path;
        }
    }

    const CliResult tr = run_cli({"transcript", "--log", dir.str("runs/cell1_p0.05_s000.jsonl"), "--agent", "2"});
    EXPECT_EQ(tr.code, 0) << tr.err;
    EXPECT_NE(tr.out.find("agent 2"), std::string::npos);
}

TEST(Command, AnalyzeEmptyDirectoryFails) {
    TempDir dir;
    const CliResult r = run_cli({"analyze", "--logs", dir.str()});
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("no session logs"), std::string::npos);
}

TEST(Command, TheoryRows) {
    const CliResult zero = run_cli({"theory", "--horizons", "0"});
    ASSERT_EQ(zero.code, 0) << zero.err;
    EXPECT_NE(zero.out.find("0,0.05445544554,0.05233262498"), std::string::npos) << zero.out;

    const CliResult low = run_cli({"theory", "--horizons", "2"});
    const CliResult high = run_cli({"theory", "--pstar", "0.95", "--horizons", "2"});
    EXPECT_NE(low.out.find("0.113487043"), std::string::npos) << low.out;
    EXPECT_NE(high.out.find("0.886512957"), std::string::npos) << high.out;

    EXPECT_NE(run_cli({"theory", "--horizons", "abc"}).code, 0);
}

TEST(Command, UsageErrors) {
    EXPECT_NE(run_cli({}).code, 0);
    EXPECT_NE(run_cli({"run", "--backend", "oracle"}).code, 0);
    EXPECT_NE(run_cli({"transcript", "--log", "/nonexistent"}).code, 0);
}
