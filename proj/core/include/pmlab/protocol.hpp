#pragma once

// Text protocol spoken with chat-endpoint agents: the three prompt kinds
// (system, trading round, post-trade allocation), the structured decision
// documents agents answer with, and the response-format directive that asks
// the endpoint for exactly those documents.

#include <optional>
#include <string>
#include <vector>

#include "pmlab/agents.hpp"
#include "pmlab/orderbook.hpp"

namespace pmlab {

enum class PromptKind { System, Round, PostTrade };

/// Outside-option returns as fractions over the event horizon.
struct HorizonReturns {
    double risk_free = 0.0;
    double risky_mean = 0.0;
    double risky_sd = 0.0;
};

struct SystemPromptContext {
    std::optional<int> participants;
    std::optional<int> rounds;
    std::optional<int> draws;
    std::optional<double> endowment;  // dollars
    std::optional<std::string> horizon_phrase;
    std::optional<bool> interest_enabled;
    std::optional<RiskLabel> risk;
    std::optional<HorizonReturns> returns;
};

struct OutstandingOrder {
    OrderId id = 0;
    Contract contract = Contract::Yes;
    Side side = Side::Buy;
    Quantity open = 0;
    Quantity original = 0;
    Price limit{50};
};

struct RoundPromptContext {
    std::optional<int> round;
    std::optional<int> total_rounds;
    std::optional<Signal> signal;
    std::vector<std::string> updates;  // previous-round fills and rejections, one line each
    Quotes quotes;
    std::vector<Level> asks;  // YES-frame, best first
    std::vector<Level> bids;
    std::optional<Cents> cash_total;
    std::optional<Cents> cash_available;
    Quantity yes = 0;
    Quantity yes_available = 0;
    Quantity no = 0;
    Quantity no_available = 0;
    std::optional<double> mark_price;  // YES price used to value holdings
    std::optional<HorizonReturns> returns;
    std::optional<bool> interest_enabled;
    std::vector<OutstandingOrder> outstanding;
};

struct PostTradePromptContext {
    std::optional<HorizonReturns> returns;
    std::optional<Cents> cash;
    Quantity yes = 0;
    Quantity no = 0;
    std::optional<double> mark_price;
    std::optional<bool> interest_enabled;
};

/// Each renderer throws Error(MissingContextField) naming the first absent field.
std::string render_system_prompt(const SystemPromptContext& ctx);
std::string render_round_prompt(const RoundPromptContext& ctx);
std::string render_post_trade_prompt(const PostTradePromptContext& ctx);

/// "4 days", "1 year", "2 years".
std::string horizon_phrase(int horizon_days);
/// Percent with at most two decimals and trailing zeros trimmed: 0.08 -> "8", 0.2263 -> "22.63".
std::string format_percent(double fraction);

/// Parse an agent's structured reply. Unknown fields are ignored. Throws
/// Error with MalformedDocument, MissingField or OutOfRangeValue.
TradeDecision parse_trade_response(const std::string& text);
AllocationDecision parse_allocation_response(const std::string& text);

/// Serialise a decision into the same document shape agents reply with.
std::string render_trade_response(const TradeDecision& decision);
std::string render_allocation_response(const AllocationDecision& decision);

/// JSON response_format directive for the chat-completions request.
std::string trade_response_format();
std::string allocation_response_format();

}  // namespace pmlab
