#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "pmlab/theory.hpp"

#ifndef PMLAB_VERSION
#define PMLAB_VERSION "0.0.0"
#endif

namespace pmlab::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Plan file

namespace {

struct Defaults {
    std::vector<int> cells{1, 2, 3, 4};
    int short_days = 4;
    int long_days = 730;
    HorizonReturns long_returns{0.08, 0.20, 0.2263};
};

template <class T>
T typed(const json& doc, const char* key, T fallback) {
    auto it = doc.find(key);
    if (it == doc.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::InvalidConfig, std::string("plan key '") + key + "' has the wrong type");
    }
}

}  // namespace

ExperimentPlan default_plan() {
    ExperimentPlan plan;
    for (int cell = 1; cell <= 4; ++cell) plan.cells.push_back({TreatmentConfig::standard_cell(cell, 0.05), 20, {0.05, 0.95}});
    return plan;
}

ExperimentPlan parse_plan(const std::string& json_text) {
    const json doc = json::parse(json_text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorCode::InvalidConfig, "plan is not a JSON object");

    static const std::vector<std::string> known = {
        "master_seed", "backend", "out", "parallel", "cells", "sessions_per_p_star", "p_stars", "n_agents", "n_high",
        "n_rounds", "n_draws", "endowment", "high_alpha", "medium_alpha", "short_horizon_days", "long_horizon_days",
        "annual_risk_free", "annual_mu", "annual_sigma", "long_risk_free", "long_mu", "long_sigma",
        "improvement_ticks", "fallback_reference", "passive_depth_ticks", "hurdle", "endpoint_base_url",
        "endpoint_model", "endpoint_credential_env", "endpoint_timeout_seconds", "max_attempts"};
    for (const auto& [key, value] : doc.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw Error(ErrorCode::InvalidConfig, "unknown plan key '" + key + "'");
        }
    }

    const Defaults d;
    ExperimentPlan plan;
    plan.master_seed = typed<std::uint64_t>(doc, "master_seed", plan.master_seed);
    plan.backend = typed<std::string>(doc, "backend", plan.backend);
    plan.out_dir = typed<std::string>(doc, "out", plan.out_dir);
    plan.parallel = typed<int>(doc, "parallel", plan.parallel);
    plan.endpoint.base_url = typed<std::string>(doc, "endpoint_base_url", plan.endpoint.base_url);
    plan.endpoint.model = typed<std::string>(doc, "endpoint_model", plan.endpoint.model);
    plan.endpoint.credential_env = typed<std::string>(doc, "endpoint_credential_env", plan.endpoint.credential_env);
    plan.endpoint.timeout_seconds = typed<int>(doc, "endpoint_timeout_seconds", plan.endpoint.timeout_seconds);
    plan.max_attempts = typed<int>(doc, "max_attempts", plan.max_attempts);

    const auto cells = typed<std::vector<int>>(doc, "cells", d.cells);
    const int sessions = typed<int>(doc, "sessions_per_p_star", 20);
    const auto p_stars = typed<std::vector<double>>(doc, "p_stars", {0.05, 0.95});
    const int short_days = typed<int>(doc, "short_horizon_days", d.short_days);
    const int long_days = typed<int>(doc, "long_horizon_days", d.long_days);
    const HorizonReturns long_returns{typed<double>(doc, "long_risk_free", d.long_returns.risk_free),
                                      typed<double>(doc, "long_mu", d.long_returns.risky_mean),
                                      typed<double>(doc, "long_sigma", d.long_returns.risky_sd)};

    const bool explicit_long = doc.contains("long_risk_free") || doc.contains("long_mu") || doc.contains("long_sigma");
    for (int cell : cells) {
        TreatmentConfig c = TreatmentConfig::standard_cell(cell, 0.05);
        c.annual = {typed<double>(doc, "annual_risk_free", c.annual.risk_free),
                    typed<double>(doc, "annual_mu", c.annual.expected_return),
                    typed<double>(doc, "annual_sigma", c.annual.volatility)};
        c.horizon_days = c.long_horizon() ? long_days : short_days;
        const bool fixed_long = c.long_horizon() && (long_days == d.long_days || explicit_long);
        c.horizon = fixed_long ? long_returns
                               : scale_horizon_params(c.annual.risk_free, c.annual.expected_return,
                                                      c.annual.volatility, c.horizon_days);
        c.n_agents = typed<int>(doc, "n_agents", c.n_agents);
        c.n_high = typed<int>(doc, "n_high", c.n_high);
        c.n_rounds = typed<int>(doc, "n_rounds", c.n_rounds);
        c.n_draws = typed<int>(doc, "n_draws", c.n_draws);
        c.endowment = static_cast<Cents>(
            std::llround(typed<double>(doc, "endowment", static_cast<double>(c.endowment) / kCentsPerDollar) *
                         kCentsPerDollar));
        c.high_alpha = typed<double>(doc, "high_alpha", c.high_alpha);
        c.medium_alpha = typed<double>(doc, "medium_alpha", c.medium_alpha);
        c.knobs.improvement_ticks = typed<int>(doc, "improvement_ticks", c.knobs.improvement_ticks);
        c.knobs.fallback_reference = typed<double>(doc, "fallback_reference", c.knobs.fallback_reference);
        c.knobs.passive_depth_ticks = typed<int>(doc, "passive_depth_ticks", c.knobs.passive_depth_ticks);
        const std::string hurdle = typed<std::string>(doc, "hurdle", "certainty_equivalent");
        if (hurdle == "certainty_equivalent") {
            c.knobs.hurdle = HurdleMode::CertaintyEquivalent;
        } else if (hurdle == "expected_return") {
            c.knobs.hurdle = HurdleMode::ExpectedReturn;
        } else {
            throw Error(ErrorCode::InvalidConfig, "hurdle must be certainty_equivalent or expected_return");
        }
        plan.cells.push_back({c, sessions, p_stars});
    }

    if (plan.backend != "scripted" && plan.backend != "chat") {
        throw Error(ErrorCode::InvalidConfig, "backend must be scripted or chat");
    }
    if (plan.cells.empty()) throw Error(ErrorCode::InvalidConfig, "plan has no cells");
    if (sessions <= 0) throw Error(ErrorCode::InvalidConfig, "sessions_per_p_star must be positive");
    if (p_stars.empty()) throw Error(ErrorCode::InvalidConfig, "p_stars is empty");
    for (double p : p_stars) {
        if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::InvalidConfig, "p_star values must lie in (0, 1)");
    }
    if (plan.max_attempts < 1) throw Error(ErrorCode::InvalidConfig, "max_attempts must be at least 1");
    for (const PlanCell& pc : plan.cells) pc.config.validate();
    return plan;
}

std::string plan_to_json(const ExperimentPlan& plan) {
    json cells = json::array();
    for (const PlanCell& pc : plan.cells) {
        const TreatmentConfig& c = pc.config;
        cells.push_back({{"cell", c.cell},
                         {"horizon_days", c.horizon_days},
                         {"interest_enabled", c.interest_enabled},
                         {"horizon_risk_free", c.horizon.risk_free},
                         {"horizon_mu", c.horizon.risky_mean},
                         {"horizon_sigma", c.horizon.risky_sd},
                         {"sessions_per_p_star", pc.sessions_per_p_star},
                         {"p_stars", pc.p_stars}});
    }
    return json{{"master_seed", plan.master_seed},
                {"backend", plan.backend},
                {"out", plan.out_dir},
                {"cells", cells},
                {"endpoint_base_url", plan.backend == "chat" ? plan.endpoint.base_url : ""},
                {"endpoint_model", plan.backend == "chat" ? plan.endpoint.model : ""}}
        .dump(2);
}

// ---------------------------------------------------------------------------
// run

std::vector<SessionJob> plan_jobs(const ExperimentPlan& plan) {
    std::vector<SessionJob> jobs;
    std::uint64_t session_index = 0;
    for (const PlanCell& pc : plan.cells) {
        for (double p : pc.p_stars) {
            for (int i = 0; i < pc.sessions_per_p_star; ++i) {
                std::ostringstream name;
                name << "cell" << pc.config.cell << "_p" << std::fixed << std::setprecision(2) << p << "_s"
                     << std::setw(3) << std::setfill('0') << i << ".jsonl";
                jobs.push_back({pc.config.cell, p, i, session_index++, name.str()});
            }
        }
    }
    return jobs;
}

void write_atomic(const std::string& path, const std::string& content) {
    const fs::path target(path);
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot rename " + tmp.string() + ": " + ec.message());
}

RunSummary run_plan(const ExperimentPlan& plan, std::function<std::shared_ptr<ChatTransport>()> transport_factory) {
    std::error_code ec;
    fs::create_directories(plan.out_dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + plan.out_dir + ": " + ec.message());

    TraderFactory backend = scripted_backend();
    if (plan.backend == "chat") {
        if (!transport_factory) {
            const EndpointConfig endpoint = plan.endpoint;
            transport_factory = [endpoint] { return std::make_shared<HttpChatTransport>(endpoint); };
        }
        backend = chat_backend(transport_factory, plan.max_attempts);
    }

    const std::vector<SessionJob> jobs = plan_jobs(plan);
    std::vector<const TreatmentConfig*> cell_config;
    for (const SessionJob& job : jobs) {
        for (const PlanCell& pc : plan.cells) {
            if (pc.config.cell == job.cell) cell_config.push_back(&pc.config);
        }
    }

    struct Outcome {
        std::string status;
        std::string error;
        std::uint64_t key = 0;
    };
    std::vector<Outcome> outcomes(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            const SessionJob& job = jobs[i];
            Outcome& o = outcomes[i];
            o.key = derive_key(plan.master_seed, job.session_index);
            try {
                TreatmentConfig config = *cell_config[i];
                config.p_star = job.p_star;
                const SessionLog log = run_session(config, backend, plan.master_seed, job.session_index);
                write_atomic((fs::path(plan.out_dir) / job.file).string(), session_log_to_string(log));
                bool degraded = false;
                for (const DecisionRecord& d : log.decisions) degraded = degraded || d.degraded;
                for (const AllocationRecord& a : log.allocations) degraded = degraded || a.degraded;
                o.status = degraded ? "degraded" : "ok";
            } catch (const std::exception& e) {
                o.status = "failed";
                o.error = e.what();
            }
        }
    };
    unsigned threads = plan.parallel > 0 ? static_cast<unsigned>(plan.parallel) : std::thread::hardware_concurrency();
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(jobs.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();

    RunSummary summary;
    json sessions = json::array();
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const SessionJob& job = jobs[i];
        const Outcome& o = outcomes[i];
        if (o.status == "ok") ++summary.ok;
        if (o.status == "degraded") ++summary.degraded;
        if (o.status == "failed") ++summary.failed;
        sessions.push_back({{"file", job.file},
                            {"cell", job.cell},
                            {"p_star", job.p_star},
                            {"index", job.index},
                            {"session_index", job.session_index},
                            {"session_key", o.key},
                            {"status", o.status},
                            {"error", o.error}});
    }
    const json manifest = {{"schema", "pmlab.manifest/1"},
                           {"code_version", PMLAB_VERSION},
                           {"log_schema", kSessionSchema},
                           {"plan", json::parse(plan_to_json(plan))},
                           {"sessions", sessions},
                           {"summary", {{"ok", summary.ok}, {"degraded", summary.degraded}, {"failed", summary.failed}}}};
    write_atomic((fs::path(plan.out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
    return summary;
}

// ---------------------------------------------------------------------------
// analyze

std::vector<SessionLog> load_logs(const std::string& dir) {
    if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, dir + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error(ErrorCode::EmptyLog, "no session logs (*.jsonl) in " + dir);
    std::vector<SessionLog> logs;
    for (const fs::path& f : files) {
        try {
            logs.push_back(read_session_log_file(f.string()));
        } catch (const Error& e) {
            throw Error(e.code(), f.filename().string() + ": " + e.what());
        }
        if (logs.back().header.schema != logs.front().header.schema) {
            throw Error(ErrorCode::MixedSchemaVersions, "logs mix schema versions " + logs.front().header.schema +
                                                            " and " + logs.back().header.schema);
        }
    }
    return logs;
}

std::string analyze_logs(const std::vector<SessionLog>& logs, PriceMeasure measure, const std::string& out_dir) {
    std::vector<SessionMetrics> metrics;
    metrics.reserve(logs.size());
    for (const SessionLog& log : logs) metrics.push_back(compute_metrics(log, measure));
    const SummaryTable table = summary_table(metrics, measure);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_dir + ": " + ec.message());
    auto emit = [&](const char* name, auto&& writer) {
        std::ostringstream s;
        writer(s);
        write_atomic((fs::path(out_dir) / name).string(), s.str());
        return s.str();
    };
    emit("metrics.csv", [&](std::ostream& s) { write_metrics_csv(s, metrics, measure); });
    emit("cell_means.csv", [&](std::ostream& s) { write_cell_means_csv(s, table); });
    emit("regressions.csv", [&](std::ostream& s) { write_regressions_csv(s, table); });
    emit("mwu.csv", [&](std::ostream& s) { write_mwu_csv(s, table); });
    return emit("summary.txt", [&](std::ostream& s) { write_summary_text(s, table); });
}

// ---------------------------------------------------------------------------
// command line

namespace {

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream s(text);
    std::string item;
    while (std::getline(s, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidConfig, "not a number: '" + item + "'");
        }
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"pmlab: binary prediction market laboratory"};
    app.require_subcommand(1);
    app.set_version_flag("--version", PMLAB_VERSION);

    std::string plan_file, backend, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> parallel;
    CLI::App* run = app.add_subcommand("run", "Run a batch of market sessions");
    run->add_option("--plan", plan_file, "Plan file (flat JSON)")->check(CLI::ExistingFile);
    run->add_option("--seed", seed, "Master seed");
    run->add_option("--backend", backend, "Agent backend")->check(CLI::IsMember({"scripted", "chat"}));
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--parallel", parallel, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);

    double pstar = 0.05;
    std::string horizons = "2";
    int grid = 2000;
    CLI::App* theory = app.add_subcommand("theory", "Solve the equilibrium model");
    theory->add_option("--pstar", pstar, "True probability")->check(CLI::Range(0.0, 1.0));
    theory->add_option("--horizons", horizons, "Comma-separated horizons in years");
    theory->add_option("--grid", grid, "Risk-aversion grid size")->check(CLI::Range(1, 1000000));

    std::string logs_dir, measure_text = "last", analysis_out;
    CLI::App* analyze = app.add_subcommand("analyze", "Metrics, regressions and rank tests over session logs");
    analyze->add_option("--logs", logs_dir, "Directory of session logs")->required();
    analyze->add_option("--price-measure", measure_text, "last | midpoint")->check(CLI::IsMember({"last", "midpoint"}));
    analyze->add_option("--out", analysis_out, "Output directory (default: <logs>/analysis-<measure>)");

    std::string log_file;
    AgentId agent = 0;
    CLI::App* transcript = app.add_subcommand("transcript", "Render one agent's transcript from a log");
    transcript->add_option("--log", log_file, "Session log")->required()->check(CLI::ExistingFile);
    transcript->add_option("--agent", agent, "Agent id")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*run) {
            ExperimentPlan plan = plan_file.empty() ? default_plan() : parse_plan(read_file(plan_file));
            if (seed) plan.master_seed = *seed;
            if (!backend.empty()) plan.backend = backend;
            if (!out_dir.empty()) plan.out_dir = out_dir;
            if (parallel) plan.parallel = *parallel;
            const RunSummary s = run_plan(plan);
            out << "sessions: " << s.ok << " ok, " << s.degraded << " degraded, " << s.failed << " failed\n"
                << "logs and manifest written to " << plan.out_dir << "\n";
            return s.failed > 0 ? 1 : 0;
        }
        if (*theory) {
            TheoryParams params;
            params.p_star = pstar;
            params.alpha_grid_size = grid;
            const std::vector<double> years = parse_list(horizons);
            if (years.empty()) throw Error(ErrorCode::InvalidConfig, "--horizons is empty");
            write_sweep_csv(out, bias_sweep(params, years));
            return 0;
        }
        if (*analyze) {
            const PriceMeasure measure = measure_text == "midpoint" ? PriceMeasure::Midpoint : PriceMeasure::LastTrade;
            const std::string target =
                analysis_out.empty() ? (fs::path(logs_dir) / ("analysis-" + measure_text)).string() : analysis_out;
            out << analyze_logs(load_logs(logs_dir), measure, target);
            return 0;
        }
        if (*transcript) {
            out << render_transcript(read_session_log_file(log_file), agent);
            return 0;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace pmlab::cli
