#pragma once

// One market session end to end: signals, trading rounds with shuffled batch
// arrival, post-trade allocation, position interest and resolution.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pmlab/agents.hpp"
#include "pmlab/chat.hpp"
#include "pmlab/error.hpp"
#include "pmlab/orderbook.hpp"
#include "pmlab/protocol.hpp"
#include "pmlab/rng.hpp"

namespace pmlab {

inline constexpr const char* kSessionSchema = "pmlab.session/1";
inline constexpr const char* kInterestPolicy = "flat cash credit at resolution; not invested in outside options";

/// Horizon returns from annual rates: r_f compounds, sigma scales with the
/// square root of time, mu scales linearly below one year and compounds from
/// one year on.
HorizonReturns scale_horizon_params(double risk_free, double mu, double sigma, int horizon_days);

struct TreatmentConfig {
    int cell = 0;  // 1..4 for the standard cells, 0 for custom
    int horizon_days = 4;
    bool interest_enabled = false;
    MarketParams annual;
    HorizonReturns horizon;  // operative returns over the horizon
    int n_agents = 10;
    int n_high = 5;  // the first n_high agents get the High persona
    int n_rounds = 10;
    int n_draws = 200;
    Cents endowment = 10'000 * kCentsPerDollar;
    double p_star = 0.05;
    double high_alpha = Persona::kDefaultHighAlpha;
    double medium_alpha = Persona::kDefaultMediumAlpha;
    ScriptedKnobs knobs;

    double years() const noexcept { return horizon_days / 365.0; }
    bool long_horizon() const noexcept { return horizon_days >= 365; }

    /// Standard cells: 1 short/no interest, 2 long/no interest, 3 short/interest,
    /// 4 long/interest. Short cells use scaled returns; long cells use 8%, 20%, 22.63%.
    static TreatmentConfig standard_cell(int cell, double p_star);
    /// Throws Error(InvalidConfig).
    void validate() const;
};

// ---------------------------------------------------------------------------
// Log records

struct AgentSetup {
    AgentId id = 0;
    Persona persona;
    Signal signal;
};

struct PositionSnapshot {
    AgentId agent = 0;
    Cents cash_available = 0;
    Cents cash_reserved = 0;
    Quantity yes = 0;
    Quantity no = 0;
    Quantity yes_reserved = 0;
    Quantity no_reserved = 0;
};

struct SessionHeader {
    std::string schema = kSessionSchema;
    TreatmentConfig config;
    std::uint64_t master_seed = 0;
    std::uint64_t session_index = 0;
    std::uint64_t session_key = 0;
    std::string backend = "scripted";
    std::string interest_policy = kInterestPolicy;
    std::vector<AgentSetup> agents;
};

struct RoundStartRecord {
    int round = 0;
    std::vector<Level> bids;
    std::vector<Level> asks;
    Quotes quotes;
    std::optional<Price> last_price;
    std::vector<PositionSnapshot> positions;
    std::vector<Order> resting;
};

struct DecisionRecord {
    int round = 0;
    AgentId agent = 0;
    int position = 0;  // index in the round's shuffled application order
    TradeDecision decision;
    std::vector<ChatAttempt> attempts;  // chat backend only
    bool degraded = false;
};

struct RejectRecord {
    int round = 0;
    AgentId agent = 0;
    OrderInstruction order;
    ErrorCode code = ErrorCode::InvalidPrice;
    std::string message;
};

struct RoundRecord {
    int round = 0;
    std::vector<AgentId> order;  // shuffled application order
    std::optional<Price> last_price;  // carried forward when the round had no trade
    Quotes quotes;
    std::vector<double> beliefs;  // probability_estimate per agent id
    std::vector<PositionSnapshot> positions;
    std::size_t fills = 0;
};

/// Prompt text sent to a chat agent; round 0 is the system prompt, round -1 the post-trade prompt.
struct ExchangeRecord {
    int round = 0;
    AgentId agent = 0;
    std::string prompt;
};

struct AllocationRecord {
    AgentId agent = 0;
    double risky_allocation_pct = 0.0;
    double cash = 0.0;  // dollars available to invest
    std::vector<ChatAttempt> attempts;
    bool degraded = false;
};

struct RealizationRecord {
    double risky_return = 0.0;
    double risk_free_return = 0.0;
    std::optional<Price> last_price;
    double interest_mark = 0.5;  // YES price used for interest
    bool interest_fallback = false;
    std::vector<double> interest_credit;  // dollars per agent
};

struct AgentOutcome {
    AgentId agent = 0;
    double outside_wealth = 0.0;
    double contract_payout = 0.0;
    double interest = 0.0;
    double final_wealth = 0.0;
    double expected_wealth = 0.0;  // contract payout replaced by its expectation under p*
};

struct ResolutionRecord {
    bool outcome = false;
    std::vector<AgentOutcome> agents;
};

struct SessionLog {
    SessionHeader header;
    std::vector<ExchangeRecord> exchanges;
    std::vector<RoundStartRecord> round_starts;
    std::vector<DecisionRecord> decisions;  // in application order
    std::vector<Trade> fills;
    std::vector<RejectRecord> rejects;
    std::vector<RoundRecord> rounds;
    std::vector<AllocationRecord> allocations;
    RealizationRecord realization;
    ResolutionRecord resolution;
    std::vector<std::string> warnings;
};

/// Line-delimited JSON, one record per line, starting with the header.
void write_session_log(std::ostream& out, const SessionLog& log);
std::string session_log_to_string(const SessionLog& log);
/// Throws Error(MalformedLog) or Error(MixedSchemaVersions).
SessionLog read_session_log(std::istream& in);
SessionLog read_session_log_file(const std::string& path);

// ---------------------------------------------------------------------------
// Traders

struct RoundView {
    int round = 0;
    AgentSnapshot self;      // holdings with resting orders withdrawn
    MarketSnapshot market;   // quotes excluding own orders, last trade
    RoundPromptContext prompt;
};

struct PostTradeView {
    PostTradePromptContext prompt;
};

template <class Decision>
struct TraderReply {
    Decision decision;
    std::vector<ChatAttempt> attempts;
    bool degraded = false;
};

class Trader {
public:
    virtual ~Trader() = default;
    virtual TraderReply<TradeDecision> decide(const RoundView& view) = 0;
    virtual TraderReply<AllocationDecision> allocate(const PostTradeView& view) = 0;
    /// Remote traders have their round decisions requested concurrently.
    virtual bool remote() const noexcept { return false; }
    /// Prompt text sent so far and not yet logged.
    virtual std::vector<ExchangeRecord> take_exchanges() { return {}; }
};

struct TraderSetup {
    AgentSetup agent;
    const TreatmentConfig* config = nullptr;
    SystemPromptContext system;
};

using TraderFactory = std::function<std::unique_ptr<Trader>(const TraderSetup&)>;

class ScriptedTrader final : public Trader {
public:
    ScriptedTrader(const AgentSetup& agent, const TreatmentConfig& config);
    TraderReply<TradeDecision> decide(const RoundView& view) override;
    TraderReply<AllocationDecision> allocate(const PostTradeView& view) override;

private:
    double alpha_;
    OpportunityCost quote_cost_;
    OpportunityCost allocation_cost_;
    ScriptedKnobs knobs_;
};

class ChatTrader final : public Trader {
public:
    ChatTrader(const TraderSetup& setup, std::shared_ptr<ChatTransport> transport, int max_attempts = 3);
    TraderReply<TradeDecision> decide(const RoundView& view) override;
    TraderReply<AllocationDecision> allocate(const PostTradeView& view) override;
    bool remote() const noexcept override { return true; }
    std::vector<ExchangeRecord> take_exchanges() override;

private:
    AgentId id_;
    ChatAgent agent_;
    std::vector<ExchangeRecord> pending_;
    std::optional<double> last_estimate_;
};

TraderFactory scripted_backend();
/// Each trader gets its own transport from `make_transport`.
TraderFactory chat_backend(std::function<std::shared_ptr<ChatTransport>()> make_transport, int max_attempts = 3);

// ---------------------------------------------------------------------------
// Phases

std::vector<Signal> generate_signals(RandomStream& rng, double p_star, int n_agents, int n_draws);

/// Interest per agent in dollars. Without a last price the mark falls back to
/// 0.50 and `fallback` is set.
struct InterestResult {
    std::vector<double> credit;
    double mark = 0.5;
    bool fallback = false;
};
InterestResult accrue_interest(const Book& book, int n_agents, std::optional<Price> last_price,
                               double rate, bool interest_enabled);

/// Outside wealth after the horizon for one agent.
double grow_outside_cash(double cash, double risky_pct, double risk_free_return, double risky_return);

/// Risky return realisation: Normal(mu, sigma) truncated below at -1.
double draw_risky_return(RandomStream& rng, double mu, double sigma);

SessionLog run_session(const TreatmentConfig& config, const TraderFactory& backend, std::uint64_t master_seed,
                       std::uint64_t session_index);
inline SessionLog run_session(const TreatmentConfig& config, std::uint64_t master_seed,
                              std::uint64_t session_index = 0) {
    return run_session(config, scripted_backend(), master_seed, session_index);
}

/// Re-applies the logged decisions, in logged order, to a fresh book and
/// returns the resulting fills.
std::vector<Trade> replay_fills(const SessionLog& log);

/// Fill and rejection notices for one agent's orders in `round`, as shown in the next round's prompt.
std::vector<std::string> round_updates(const std::vector<Trade>& fills, const std::vector<RejectRecord>& rejects,
                                       AgentId agent, int round);

/// Human-readable transcript of one agent. Throws Error(UnknownAgent).
std::string render_transcript(const SessionLog& log, AgentId agent);

/// The prompt contexts the session hands to agents, rebuilt from log records.
SystemPromptContext system_context(const TreatmentConfig& config, const Persona& persona);
RoundPromptContext round_context(const TreatmentConfig& config, const RoundStartRecord& start, AgentId agent,
                                 Signal signal, std::vector<std::string> updates);

}  // namespace pmlab
