#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pmlab/analysis.hpp"
#include "pmlab/chat.hpp"
#include "pmlab/session.hpp"

namespace pmlab::cli {

struct PlanCell {
    TreatmentConfig config;  // p_star is filled in per session
    int sessions_per_p_star = 20;
    std::vector<double> p_stars{0.05, 0.95};
};

struct ExperimentPlan {
    std::vector<PlanCell> cells;
    std::uint64_t master_seed = 1;
    std::string backend = "scripted";  // scripted | chat
    std::string out_dir = "runs";
    int parallel = 0;  // 0 = hardware concurrency
    EndpointConfig endpoint;
    int max_attempts = 3;
};

/// Flat plan document; every key optional, unknown keys rejected. Throws Error(InvalidConfig).
ExperimentPlan parse_plan(const std::string& json_text);
ExperimentPlan default_plan();
std::string plan_to_json(const ExperimentPlan& plan);

struct SessionJob {
    int cell = 0;
    double p_star = 0.0;
    int index = 0;  // within (cell, p_star)
    std::uint64_t session_index = 0;
    std::string file;
};
std::vector<SessionJob> plan_jobs(const ExperimentPlan& plan);

/// Writes `content` to `path` through a temporary file and a rename.
void write_atomic(const std::string& path, const std::string& content);

struct RunSummary {
    int ok = 0;
    int degraded = 0;
    int failed = 0;
};
/// Runs every session and writes logs plus manifest.json into plan.out_dir.
/// `transport_factory` overrides the HTTP transport for the chat backend.
RunSummary run_plan(const ExperimentPlan& plan,
                    std::function<std::shared_ptr<ChatTransport>()> transport_factory = nullptr);

/// Reads every *.jsonl log in `dir`, sorted by file name. Throws on an empty
/// directory (EmptyLog) or mixed schemas (MixedSchemaVersions).
std::vector<SessionLog> load_logs(const std::string& dir);

/// Writes metrics.csv, cell_means.csv, regressions.csv, mwu.csv and
/// summary.txt into `out_dir`; returns the summary text.
std::string analyze_logs(const std::vector<SessionLog>& logs, PriceMeasure measure, const std::string& out_dir);

/// Entry point shared by the executable and tests; returns the process exit code.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace pmlab::cli
