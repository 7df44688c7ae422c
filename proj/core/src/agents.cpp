#include "pmlab/agents.hpp"

#include <algorithm>
#include <cmath>

#include "pmlab/error.hpp"

namespace pmlab {

std::string_view to_string(RiskLabel label) { return label == RiskLabel::High ? "High" : "Medium"; }

std::string_view to_string(ReplaceDecision d) {
    switch (d) {
        case ReplaceDecision::Add: return "Add";
        case ReplaceDecision::Cancel: return "Cancel";
        case ReplaceDecision::Replace: return "Replace";
    }
    return "?";
}

double posterior_belief(Signal signal) {
    return (1.0 + signal.successes) / (2.0 + signal.draws);
}

OpportunityCost opportunity_cost(double alpha, const MarketParams& market, double years) {
    if (!(market.volatility > 0.0)) {
        throw Error(ErrorCode::NonpositiveVolatility, "volatility must be positive");
    }
    OpportunityCost oc;
    const double premium = market.expected_return - market.risk_free;
    oc.omega = std::clamp(premium / (alpha * market.volatility * market.volatility), 0.0, 1.0);
    oc.outside_return = market.risk_free + oc.omega * premium;
    oc.theta = std::expm1(oc.outside_return * years);
    oc.psi = oc.theta / (1.0 + oc.theta);
    return oc;
}

double trader_demand(double price, double belief, double wealth, double alpha, double psi) {
    const double scale = wealth / alpha;
    const double belief_log_odds = std::log(belief / (1.0 - belief));
    if (1.0 - price > psi) {
        const double q = scale * (belief_log_odds - std::log(price / (1.0 - price - psi)));
        if (q > 0.0) return q;
    }
    if (price > psi) {
        const double q = scale * (belief_log_odds - std::log((price - psi) / (1.0 - price)));
        if (q < 0.0) return q;
    }
    return 0.0;
}

OpportunityCost scripted_opportunity_cost(double alpha, const MarketParams& market, double years,
                                          bool interest_enabled, HurdleMode mode) {
    OpportunityCost oc = opportunity_cost(alpha, market, years);
    double rate = oc.outside_return;
    if (mode == HurdleMode::CertaintyEquivalent) {
        rate -= 0.5 * alpha * oc.omega * oc.omega * market.volatility * market.volatility;
    }
    if (interest_enabled) rate -= market.risk_free;
    rate = std::max(rate, 0.0);
    oc.theta = std::expm1(rate * years);
    oc.psi = oc.theta / (1.0 + oc.theta);
    return oc;
}

ReservationTicks reservation_ticks(double belief, double psi) {
    ReservationTicks r;
    const double long_bound = belief * (1.0 - psi);
    const double short_bound = belief + psi * (1.0 - belief);
    // Strict inequalities: demand must be nonzero at the quoted tick.
    const int long_ticks = static_cast<int>(std::ceil(long_bound * Price::kTicksPerDollar - 1e-9)) - 1;
    const int short_ticks = static_cast<int>(std::floor(short_bound * Price::kTicksPerDollar + 1e-9)) + 1;
    if (long_ticks >= Price::kMinTicks) r.long_ticks = std::min(long_ticks, Price::kMaxTicks);
    if (short_ticks <= Price::kMaxTicks) r.short_ticks = std::max(short_ticks, Price::kMinTicks);
    return r;
}

namespace {

struct Quote {
    int frame_ticks;
    Quantity target;  // desired net YES position at this price
};

}  // namespace

TradeDecision scripted_trade_decision(const AgentSnapshot& agent, const MarketSnapshot& market,
                                      const OpportunityCost& oc, double alpha, const ScriptedKnobs& knobs) {
    const double belief = posterior_belief(agent.signal);
    const double reference = market.last_trade ? market.last_trade->dollars() : knobs.fallback_reference;
    const double wealth = static_cast<double>(agent.cash) / kCentsPerDollar + agent.yes * reference +
                          agent.no * (1.0 - reference);

    TradeDecision decision = TradeDecision::no_op(belief);
    if (wealth <= 0.0) return decision;

    const double demand_at_reference = trader_demand(reference, belief, wealth, alpha, oc.psi);
    if (demand_at_reference == 0.0) return decision;
    const bool favour_long = demand_at_reference > 0.0;

    const ReservationTicks bounds = reservation_ticks(belief, oc.psi);
    const Quantity position = agent.yes - agent.no;
    const int step = knobs.improvement_ticks;

    std::optional<Quote> long_quote;
    if (bounds.long_ticks) {
        const int bound = *bounds.long_ticks;
        int ticks;
        if (market.others.yes_ask && market.others.yes_ask->ticks() <= bound) {
            ticks = market.others.yes_ask->ticks();
        } else if (market.others.yes_bid) {
            ticks = std::min(bound, market.others.yes_bid->ticks() + step);
        } else {
            ticks = favour_long ? bound : bound - knobs.passive_depth_ticks;
        }
        if (ticks >= Price::kMinTicks) {
            const double q = trader_demand(ticks / 100.0, belief, wealth, alpha, oc.psi);
            long_quote = Quote{ticks, static_cast<Quantity>(std::floor(q))};
        }
    }
    std::optional<Quote> short_quote;
    if (bounds.short_ticks) {
        const int bound = *bounds.short_ticks;
        int ticks;
        if (market.others.yes_bid && market.others.yes_bid->ticks() >= bound) {
            ticks = market.others.yes_bid->ticks();
        } else if (market.others.yes_ask) {
            ticks = std::max(bound, market.others.yes_ask->ticks() - step);
        } else {
            ticks = favour_long ? bound + knobs.passive_depth_ticks : bound;
        }
        if (ticks <= Price::kMaxTicks) {
            const double q = trader_demand(ticks / 100.0, belief, wealth, alpha, oc.psi);
            short_quote = Quote{ticks, static_cast<Quantity>(std::ceil(q))};
        }
    }

    Cents cash_left = agent.cash;
    auto emit_long = [&] {
        if (!long_quote || long_quote->target <= position) return;
        const Quantity wanted = long_quote->target - position;
        const Price frame(long_quote->frame_ticks);
        if (agent.no > 0) {
            // Selling NO at 1-p is the same YES-frame bid.
            decision.orders.push_back({Contract::No, Side::Sell, std::min(wanted, agent.no), frame.complement()});
            return;
        }
        const Quantity affordable = cash_left / frame.ticks();
        const Quantity qty = std::min(wanted, affordable);
        if (qty <= 0) return;
        cash_left -= qty * frame.ticks();
        decision.orders.push_back({Contract::Yes, Side::Buy, qty, frame});
    };
    auto emit_short = [&] {
        if (!short_quote || short_quote->target >= position) return;
        const Quantity wanted = position - short_quote->target;
        const Price frame(short_quote->frame_ticks);
        if (agent.yes > 0) {
            decision.orders.push_back({Contract::Yes, Side::Sell, std::min(wanted, agent.yes), frame});
            return;
        }
        const Price native = frame.complement();
        const Quantity affordable = cash_left / native.ticks();
        const Quantity qty = std::min(wanted, affordable);
        if (qty <= 0) return;
        cash_left -= qty * native.ticks();
        decision.orders.push_back({Contract::No, Side::Buy, qty, native});
    };
    if (favour_long) {
        emit_long();
        emit_short();
    } else {
        emit_short();
        emit_long();
    }

    if (!decision.orders.empty()) decision.replace_decision = ReplaceDecision::Replace;
    return decision;
}

AllocationDecision scripted_allocation(const OpportunityCost& oc) { return {oc.omega}; }

}  // namespace pmlab
