#pragma once

// Trader decision-making: posterior beliefs, opportunity-cost parameters,
// opportunity-cost-adjusted log-odds demand, and the scripted agent policy
// built on top of them.

#include <optional>
#include <string_view>
#include <vector>

#include "pmlab/orderbook.hpp"

namespace pmlab {

enum class RiskLabel { High, Medium };
std::string_view to_string(RiskLabel label);

struct Persona {
    RiskLabel label = RiskLabel::Medium;
    double alpha = 4.2;  // risk-aversion coefficient, > 0

    static constexpr double kDefaultHighAlpha = 2.0;
    static constexpr double kDefaultMediumAlpha = 4.2;
    static Persona high(double alpha = kDefaultHighAlpha) { return {RiskLabel::High, alpha}; }
    static Persona medium(double alpha = kDefaultMediumAlpha) { return {RiskLabel::Medium, alpha}; }
};

struct Signal {
    int successes = 0;
    int draws = 0;
};

/// Outside-option parameters as annual rates.
struct MarketParams {
    double risk_free = 0.04;
    double expected_return = 0.10;
    double volatility = 0.16;
};

struct OpportunityCost {
    double omega = 0.0;           // risky share of outside wealth, clamped to [0, 1]
    double outside_return = 0.0;  // annual rate earned by the outside portfolio
    double theta = 0.0;           // cumulative return over the horizon
    double psi = 0.0;             // theta / (1 + theta), in [0, 1)
};

/// Posterior mean under a uniform prior: (1 + k) / (2 + n).
double posterior_belief(Signal signal);

/// Mean-variance risky share, the resulting outside return, and the
/// continuously compounded hurdle over `years`. Throws NonpositiveVolatility.
OpportunityCost opportunity_cost(double alpha, const MarketParams& market, double years);

/// Opportunity-cost-adjusted log-odds demand in contracts (positive = long YES,
/// negative = long NO). Zero inside the no-trade region.
double trader_demand(double price, double belief, double wealth, double alpha, double psi);

// ---------------------------------------------------------------------------
// Decisions

enum class ReplaceDecision { Add, Cancel, Replace };
std::string_view to_string(ReplaceDecision d);

struct OrderInstruction {
    Contract contract = Contract::Yes;
    Side side = Side::Buy;
    Quantity quantity = 0;
    Price limit{50};

    friend bool operator==(const OrderInstruction&, const OrderInstruction&) = default;
};

struct TradeDecision {
    double probability_estimate = 0.5;
    std::vector<OrderInstruction> orders;
    ReplaceDecision replace_decision = ReplaceDecision::Cancel;

    friend bool operator==(const TradeDecision&, const TradeDecision&) = default;
    /// Zero orders, cancel everything.
    static TradeDecision no_op(double estimate = 0.5) { return {estimate, {}, ReplaceDecision::Cancel}; }
};

struct AllocationDecision {
    double risky_allocation_pct = 0.0;
    friend bool operator==(const AllocationDecision&, const AllocationDecision&) = default;
};

// ---------------------------------------------------------------------------
// Scripted agents

/// How a scripted agent prices the outside option it gives up.
enum class HurdleMode {
    /// Expected return of the mean-variance outside portfolio.
    ExpectedReturn,
    /// Certainty-equivalent return of that portfolio, r_f + w(mu - r_f) - alpha w^2 sigma^2 / 2.
    CertaintyEquivalent,
};

struct ScriptedKnobs {
    int improvement_ticks = 1;         // step beyond the best competing quote
    double fallback_reference = 0.50;  // reference price before the first trade
    int passive_depth_ticks = 3;       // opening distance for the side the reference price does not favour
    HurdleMode hurdle = HurdleMode::CertaintyEquivalent;
};

/// Opportunity cost a scripted agent applies to its quotes. With position
/// interest the contracts themselves earn the risk-free rate, so only the
/// excess of the outside hurdle over r_f remains.
OpportunityCost scripted_opportunity_cost(double alpha, const MarketParams& market, double years,
                                          bool interest_enabled, HurdleMode mode);

/// What the agent owns once its resting orders are withdrawn.
struct AgentSnapshot {
    Signal signal;
    Cents cash = 0;
    Quantity yes = 0;
    Quantity no = 0;
};

struct MarketSnapshot {
    Quotes others;  // best quotes excluding the agent's own orders
    std::optional<Price> last_trade;
};

/// Reservation bounds in YES-frame ticks: buy YES at or below `long_ticks`,
/// buy NO (sell YES-frame) at or above `short_ticks`. Absent when no tick satisfies the bound.
struct ReservationTicks {
    std::optional<int> long_ticks;
    std::optional<int> short_ticks;
};
ReservationTicks reservation_ticks(double belief, double psi);

TradeDecision scripted_trade_decision(const AgentSnapshot& agent, const MarketSnapshot& market,
                                      const OpportunityCost& oc, double alpha, const ScriptedKnobs& knobs);

AllocationDecision scripted_allocation(const OpportunityCost& oc);

}  // namespace pmlab
