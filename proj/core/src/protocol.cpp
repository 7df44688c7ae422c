#include "pmlab/protocol.hpp"

#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <sstream>

#include "pmlab/error.hpp"

namespace pmlab {

using json = nlohmann::json;

namespace {

template <class T>
const T& require(const std::optional<T>& value, const char* field) {
    if (!value) throw Error(ErrorCode::MissingContextField, field);
    return *value;
}

std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string money(double dollars) { return "$" + fixed2(dollars); }

std::string money_grouped(double dollars) {
    std::string digits = fixed2(dollars);
    const auto dot = digits.find('.');
    std::string whole = digits.substr(0, dot);
    std::string grouped;
    int count = 0;
    for (auto it = whole.rbegin(); it != whole.rend(); ++it) {
        if (count > 0 && count % 3 == 0 && *it != '-') grouped.insert(grouped.begin(), ',');
        grouped.insert(grouped.begin(), *it);
        ++count;
    }
    return "$" + grouped + digits.substr(dot);
}

std::string price_text(const std::optional<Price>& p) { return p ? money(p->dollars()) : "None"; }

std::string cents_text(Cents c) { return money(static_cast<double>(c) / kCentsPerDollar); }

std::string risk_profile(RiskLabel label) {
    if (label == RiskLabel::Medium) {
        return "You have MEDIUM risk tolerance. You balance risk and return considerations, seeking reasonable "
               "returns while avoiding excessive risk. You make decisions that balance potential gains with "
               "downside protection.";
    }
    return "You have HIGH risk tolerance. You are comfortable accepting substantial risk in pursuit of higher "
           "returns, and you are willing to take large positions when you believe the expected payoff justifies "
           "it.";
}

}  // namespace

std::string horizon_phrase(int horizon_days) {
    if (horizon_days > 0 && horizon_days % 365 == 0) {
        const int years = horizon_days / 365;
        return std::to_string(years) + (years == 1 ? " year" : " years");
    }
    return std::to_string(horizon_days) + (horizon_days == 1 ? " day" : " days");
}

std::string format_percent(double fraction) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", fraction * 100.0);
    std::string s = buf;
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    if (s == "-0") s = "0";
    return s;
}

std::string render_system_prompt(const SystemPromptContext& ctx) {
    const int participants = require(ctx.participants, "participants");
    const int rounds = require(ctx.rounds, "rounds");
    const int draws = require(ctx.draws, "draws");
    const double endowment = require(ctx.endowment, "endowment");
    const std::string& horizon = require(ctx.horizon_phrase, "horizon_phrase");
    const bool interest = require(ctx.interest_enabled, "interest_enabled");
    const RiskLabel risk = require(ctx.risk, "risk");
    const HorizonReturns& r = require(ctx.returns, "returns");
    const std::string rf = format_percent(r.risk_free);

    std::ostringstream out;
    out << "# Prediction Market Experiment\n\n"
        << "You are participating in an economic experiment about prediction markets.\n\n"
        << "## The Experiment Structure\n\n"
        << "There are " << participants << " participants (including you). The experiment consists of **" << rounds
        << " trading rounds**.\n\n"
        << "At the end of trading, a binary event will either occur or not occur. The event will resolve in "
        << horizon
        << ". The event has a true probability of occurring that is fixed and lies in the interval [0.0, 1.0]. "
           "This true probability is unknown to all participants.\n\n"
        << "All participants start with " << money_grouped(endowment) << " in cash and no initial positions.\n\n"
        << "**Private Signals**\n"
        << "At the start of the experiment, you (and the other participants) observe **" << draws
        << " independent draws** from a Bernoulli distribution with the TRUE event probability.\n"
        << "You will see how many of these draws were \"successes\".\n\n"
        << "**Contracts**\n"
        << "You trade two types of contracts:\n"
        << "- **YES contracts**: Pay $1.00 if the event occurs, $0.00 if it does not\n"
        << "- **NO contracts**: Pay $1.00 if the event does NOT occur, $0.00 if it does\n\n"
        << "Contract prices range from $0.00 to $1.00.\n\n"
        << "**Outside Options**\n"
        << "After trading concludes (but before the event resolves), you will have the option to invest any cash "
           "you have remaining in two assets:\n"
        << "- **Risk-free asset**: Earns " << rf << "% (guaranteed)\n"
        << "- **Risky asset**: Expected " << format_percent(r.risky_mean)
        << "% return, with a standard deviation of " << format_percent(r.risky_sd) << "%\n\n";
    if (interest) {
        out << "**Position Interest**\n"
            << "After trading concludes, you earn **" << rf
            << "% interest** on the market value of your prediction market contracts.\n"
            << "- Interest = (YES contracts × YES price at end of last round + NO contracts × NO price at end of "
               "last round) × "
            << rf << "%\n"
            << "- This interest is paid in cash after trading concludes.\n\n";
    }
    out << "**Experiment Flow**\n"
        << "The experiment follows this sequence:\n"
        << "1. **You receive " << draws << " private signals** about the true event probability at the start\n"
        << "2. **" << rounds
        << " Trading Rounds**: You can place orders to buy and sell prediction market contracts\n"
        << "3. **Post-Trading Investment Decision**: After trading ends, you allocate your remaining cash between "
           "the risk-free asset and the risky asset\n"
        << "4. **Market Resolution**: Returns on outside investments "
        << (interest ? "and position interest are" : "are")
        << " paid out. The event resolves and contracts pay out.\n\n"
        << "**Trading**\n"
        << "Each round, you may place limit orders to buy or sell YES and NO contracts:\n"
        << "- Orders execute immediately if matched, otherwise wait in the order book\n"
        << "- You can only sell contracts you own\n"
        << "- Orders persist until filled or cancelled\n"
        << "- Open buy orders reduce your cash available for trading. You may need to replace or cancel some "
           "orders to make room for new ones.\n"
        << "- Similarly, open sell orders reduce your contracts available to sell. You may need to replace or "
           "cancel some orders to make room for new ones.\n"
        << "- Order submission is shuffled each round before matching so no one has a fixed priority\n\n"
        << "## Your Goal\n\n"
        << "Your objective is to **maximize your final wealth**.\n\n"
        << "## Your Risk Profile\n\n"
        << risk_profile(risk) << "\n\n"
        << "## Response Formats\n\n"
        << "There are two types of decisions you will make:\n\n"
        << "**Trade Decisions (during trading rounds)**\n\n"
        << "Each trading round, provide:\n\n"
        << "**Required Fields:**\n"
        << "- **probability_estimate** (float 0-1): Your estimate of the event probability\n"
        << "- **orders** (list): Orders you want to place\n"
        << "- **replace_decision** (string): How to handle existing orders\n"
        << "- \"Add\": Keep existing orders, add new ones (requires AVAILABLE resources)\n"
        << "- \"Cancel\": Cancel ALL existing orders\n"
        << "- \"Replace\": Your orders list becomes complete set of active orders\n\n"
        << "**Order Format:**\n"
        << "- **contract_type**: \"YES\" or \"NO\"\n"
        << "- **decision**: \"Buy\" or \"Sell\"\n"
        << "- **quantity**: Number of contracts (integer)\n"
        << "- **price_limit**: Limit price (float 0-1)\n\n"
        << "**Post-Trading Investment Decision (after trading ends)**\n\n"
        << "After trading is complete, you will decide how to allocate your remaining cash:\n\n"
        << "**Required Fields:**\n"
        << "- **risky_allocation_pct** (float 0-1): Percentage of your remaining cash to invest in the risky asset\n"
        << "- The remainder (1 - risky_allocation_pct) goes into the risk-free asset\n";
    return out.str();
}

std::string render_round_prompt(const RoundPromptContext& ctx) {
    const int round = require(ctx.round, "round");
    const int total = require(ctx.total_rounds, "total_rounds");
    const Signal signal = require(ctx.signal, "signal");
    const Cents cash_total = require(ctx.cash_total, "cash_total");
    const Cents cash_available = require(ctx.cash_available, "cash_available");
    const double mark = require(ctx.mark_price, "mark_price");
    const HorizonReturns& r = require(ctx.returns, "returns");
    const bool interest = require(ctx.interest_enabled, "interest_enabled");

    std::ostringstream out;
    out << "# Round " << round << " trading round\n\n"
        << "## Timing\n"
        << "- **Round**: " << round << " of " << total << "\n\n"
        << "## Your Private Signals\n"
        << "You observed **" << signal.successes << " successes** out of **" << signal.draws << " draws**.\n\n";
    if (!ctx.updates.empty()) {
        out << "## Updates From Last Round\n";
        for (const std::string& line : ctx.updates) out << "- " << line << "\n";
        out << "\n";
    }
    out << "## Current Market State\n\n"
        << "**YES Contract Market**\n\n"
        << "Best Prices\n"
        << "- Best Bid (sell): " << price_text(ctx.quotes.yes_bid) << "\n"
        << "- Best Ask (buy): " << price_text(ctx.quotes.yes_ask) << "\n\n"
        << "Order Book\n"
        << "Sell Orders (Asks)\n";
    if (ctx.asks.empty()) out << "_No sell orders_\n";
    for (const Level& level : ctx.asks) {
        out << "- " << money(level.price.dollars()) << ": " << level.quantity << " contracts (" << level.orders
            << (level.orders == 1 ? " order)" : " orders)") << "\n";
    }
    out << "Buy Orders (Bids)\n";
    if (ctx.bids.empty()) out << "_No buy orders_\n";
    for (const Level& level : ctx.bids) {
        out << "- " << money(level.price.dollars()) << ": " << level.quantity << " contracts (" << level.orders
            << (level.orders == 1 ? " order)" : " orders)") << "\n";
    }
    out << "\n**NO Contract Market**\n\n"
        << "Best Prices\n"
        << "- Best Bid (sell): " << price_text(ctx.quotes.no_bid) << "\n"
        << "- Best Ask (buy): " << price_text(ctx.quotes.no_ask) << "\n\n"
        << "The No order book is the inverse of the Yes book: a YES buy order at $0.23 is equivalent to a NO sell "
           "order at $0.77.\n\n"
        << "**Your Current Position**\n\n"
        << "- **Total Cash**: " << cents_text(cash_total) << "\n"
        << "- **AVAILABLE for new orders: " << cents_text(cash_available) << "**\n"
        << "- _Cash remaining after trading can be invested in a risk-free asset (" << format_percent(r.risk_free)
        << "% return) or a risky asset (expected " << format_percent(r.risky_mean) << "% return, "
        << format_percent(r.risky_sd) << "% std dev)_\n"
        << "- **YES Contracts**: " << ctx.yes << " total (current value: " << money(ctx.yes * mark) << ")\n"
        << "- **AVAILABLE for new sell orders: " << ctx.yes_available << "**\n"
        << "- **NO Contracts**: " << ctx.no << " total (current value: " << money(ctx.no * (1.0 - mark)) << ")\n"
        << "- **AVAILABLE for new sell orders: " << ctx.no_available << "**\n\n";
    if (interest) {
        out << "_Reminder: After trading concludes, you will earn " << format_percent(r.risk_free)
            << "% interest on the market value of your contract holdings (based on end-of-trading prices)._\n\n";
    }
    out << "**Your Outstanding Orders**\n";
    if (ctx.outstanding.empty()) out << "_No outstanding orders_\n";
    for (const OutstandingOrder& o : ctx.outstanding) {
        out << "- Order " << o.id << ": " << to_string(o.side) << " " << o.open << " " << to_string(o.contract)
            << " @ " << money(o.limit.dollars()) << " (" << o.open << " of " << o.original << " open)\n";
    }
    out << "\nWhat is your trading decision?\n";
    return out.str();
}

std::string render_post_trade_prompt(const PostTradePromptContext& ctx) {
    const HorizonReturns& r = require(ctx.returns, "returns");
    const Cents cash = require(ctx.cash, "cash");
    const double mark = require(ctx.mark_price, "mark_price");
    const bool interest = require(ctx.interest_enabled, "interest_enabled");
    const std::string earns =
        interest ? " (Earns " + format_percent(r.risk_free) + "% on market value after trading)" : "";

    std::ostringstream out;
    out << "# Post-Trading Investment Decision\n\n"
        << "Trading has ended. Now you must decide how to invest your remaining cash.\n\n"
        << "## Your Investment Options\n"
        << "- **Risk-free asset**: Earns " << format_percent(r.risk_free) << "% (guaranteed)\n"
        << "- **Risky asset**: Expected " << format_percent(r.risky_mean) << "% return, with a standard deviation of "
        << format_percent(r.risky_sd) << "%\n\n"
        << "## Your Current Financial State\n"
        << "- **Remaining Cash**: " << cents_text(cash) << "\n"
        << "- **YES Contracts Held**: " << fixed2(static_cast<double>(ctx.yes))
        << " (current value: " << money(ctx.yes * mark) << ")" << earns << "\n"
        << "- **NO Contracts Held**: " << fixed2(static_cast<double>(ctx.no))
        << " (current value: " << money(ctx.no * (1.0 - mark)) << ")" << earns << "\n\n"
        << "Note: Your contracts will pay out when the event resolves. This decision is only about how to invest "
           "your remaining cash.\n\n"
        << "What percentage of your remaining cash do you want to invest in the risky asset?\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Decision documents

namespace {

json parse_document(const std::string& text) {
    std::string body = text;
    // Tolerate a fenced block around the document.
    if (const auto fence = body.find("```"); fence != std::string::npos) {
        const auto start = body.find('\n', fence);
        const auto end = body.rfind("```");
        if (start != std::string::npos && end != std::string::npos && end > start) {
            body = body.substr(start + 1, end - start - 1);
        }
    }
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw Error(ErrorCode::MalformedDocument, "response is not a JSON object");
    }
    return doc;
}

const json& field(const json& obj, const char* name) {
    auto it = obj.find(name);
    if (it == obj.end() || it->is_null()) throw Error(ErrorCode::MissingField, name);
    return *it;
}

double unit_interval(const json& value, const char* name) {
    if (!value.is_number()) throw Error(ErrorCode::MalformedDocument, std::string(name) + " is not a number");
    const double v = value.get<double>();
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::OutOfRangeValue, std::string(name) + " outside [0, 1]");
    return v;
}

}  // namespace

TradeDecision parse_trade_response(const std::string& text) {
    const json doc = parse_document(text);
    TradeDecision d;
    d.probability_estimate = unit_interval(field(doc, "probability_estimate"), "probability_estimate");

    const json& replace = field(doc, "replace_decision");
    if (!replace.is_string()) throw Error(ErrorCode::MalformedDocument, "replace_decision is not a string");
    const std::string r = replace.get<std::string>();
    if (r == "Add") {
        d.replace_decision = ReplaceDecision::Add;
    } else if (r == "Cancel") {
        d.replace_decision = ReplaceDecision::Cancel;
    } else if (r == "Replace") {
        d.replace_decision = ReplaceDecision::Replace;
    } else {
        throw Error(ErrorCode::OutOfRangeValue, "replace_decision '" + r + "'");
    }

    const json& orders = field(doc, "orders");
    if (!orders.is_array()) throw Error(ErrorCode::MalformedDocument, "orders is not a list");
    for (const json& o : orders) {
        if (!o.is_object()) throw Error(ErrorCode::MalformedDocument, "order is not an object");
        OrderInstruction ins;
        const json& contract = field(o, "contract_type");
        const json& side = field(o, "decision");
        const json& qty = field(o, "quantity");
        const json& limit = field(o, "price_limit");
        if (!contract.is_string() || !side.is_string()) {
            throw Error(ErrorCode::MalformedDocument, "contract_type/decision must be strings");
        }
        const std::string c = contract.get<std::string>();
        const std::string s = side.get<std::string>();
        if (c == "YES") {
            ins.contract = Contract::Yes;
        } else if (c == "NO") {
            ins.contract = Contract::No;
        } else {
            throw Error(ErrorCode::OutOfRangeValue, "contract_type '" + c + "'");
        }
        if (s == "Buy") {
            ins.side = Side::Buy;
        } else if (s == "Sell") {
            ins.side = Side::Sell;
        } else {
            throw Error(ErrorCode::OutOfRangeValue, "decision '" + s + "'");
        }
        if (!qty.is_number()) throw Error(ErrorCode::MalformedDocument, "quantity is not a number");
        const double q = qty.get<double>();
        if (!(q >= 1.0) || q != std::floor(q)) throw Error(ErrorCode::OutOfRangeValue, "quantity must be a positive integer");
        ins.quantity = static_cast<Quantity>(q);
        if (!limit.is_number()) throw Error(ErrorCode::MalformedDocument, "price_limit is not a number");
        const auto price = Price::try_from_dollars(limit.get<double>());
        if (!price) throw Error(ErrorCode::OutOfRangeValue, "price_limit must be a cent price in 0.01..0.99");
        ins.limit = *price;
        d.orders.push_back(ins);
    }
    return d;
}

AllocationDecision parse_allocation_response(const std::string& text) {
    const json doc = parse_document(text);
    return {unit_interval(field(doc, "risky_allocation_pct"), "risky_allocation_pct")};
}

std::string render_trade_response(const TradeDecision& decision) {
    json doc;
    doc["probability_estimate"] = decision.probability_estimate;
    doc["orders"] = json::array();
    for (const OrderInstruction& o : decision.orders) {
        doc["orders"].push_back({{"decision", std::string(to_string(o.side))},
                                 {"quantity", o.quantity},
                                 {"contract_type", std::string(to_string(o.contract))},
                                 {"order_type", "limit"},
                                 {"price_limit", o.limit.dollars()}});
    }
    doc["replace_decision"] = std::string(to_string(decision.replace_decision));
    return doc.dump(2);
}

std::string render_allocation_response(const AllocationDecision& decision) {
    json doc;
    doc["risky_allocation_pct"] = decision.risky_allocation_pct;
    return doc.dump(2);
}

std::string trade_response_format() {
    const json order = {
        {"type", "object"},
        {"properties",
         {{"decision", {{"type", "string"}, {"enum", {"Buy", "Sell"}}}},
          {"quantity", {{"type", "integer"}}},
          {"contract_type", {{"type", "string"}, {"enum", {"YES", "NO"}}}},
          {"order_type", {{"type", "string"}, {"enum", {"limit"}}}},
          {"price_limit", {{"type", "number"}}}}},
        {"required", {"decision", "quantity", "contract_type", "order_type", "price_limit"}},
        {"additionalProperties", false}};
    const json schema = {
        {"type", "object"},
        {"properties",
         {{"probability_estimate", {{"type", "number"}}},
          {"orders", {{"type", "array"}, {"items", order}}},
          {"replace_decision", {{"type", "string"}, {"enum", {"Add", "Cancel", "Replace"}}}}}},
        {"required", {"probability_estimate", "orders", "replace_decision"}},
        {"additionalProperties", false}};
    return json{{"type", "json_schema"},
                {"json_schema", {{"name", "trade_decision"}, {"strict", true}, {"schema", schema}}}}
        .dump();
}

std::string allocation_response_format() {
    const json schema = {{"type", "object"},
                         {"properties", {{"risky_allocation_pct", {{"type", "number"}}}}},
                         {"required", {"risky_allocation_pct"}},
                         {"additionalProperties", false}};
    return json{{"type", "json_schema"},
                {"json_schema", {{"name", "post_trading_investment_decision"}, {"strict", true}, {"schema", schema}}}}
        .dump();
}

}  // namespace pmlab
