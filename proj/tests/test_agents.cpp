#include <gtest/gtest.h>

#include <cmath>

#include "pmlab/agents.hpp"
#include "pmlab/error.hpp"

using namespace pmlab;

namespace {
const MarketParams kMarket{0.04, 0.10, 0.16};
}

TEST(Belief, PosteriorMean) {
    EXPECT_NEAR(posterior_belief({12, 200}), 13.0 / 202.0, 1e-15);
    EXPECT_NEAR(posterior_belief({12, 200}), 0.064356, 1e-6);
    EXPECT_DOUBLE_EQ(posterior_belief({100, 200}), 0.5);
    EXPECT_DOUBLE_EQ(posterior_belief({0, 0}), 0.5);
}

TEST(OpportunityCost, LowRiskAversionClampsToAllRisky) {
    const OpportunityCost oc = opportunity_cost(1.0, kMarket, 2.0);
    EXPECT_DOUBLE_EQ(oc.omega, 1.0);
    EXPECT_NEAR(oc.outside_return, 0.10, 1e-15);
    EXPECT_NEAR(oc.theta, std::exp(0.2) - 1.0, 1e-12);
    EXPECT_NEAR(oc.psi, 0.181269, 1e-6);
}

TEST(OpportunityCost, InteriorShare) {
    const OpportunityCost oc = opportunity_cost(4.0, kMarket, 2.0);
    EXPECT_NEAR(oc.omega, 0.5859375, 1e-12);
    EXPECT_NEAR(oc.outside_return, 0.0751563, 1e-7);
    EXPECT_NEAR(oc.theta, 0.1622, 1e-4);
    EXPECT_NEAR(oc.psi, 0.139561, 1e-6);
}

TEST(OpportunityCost, ZeroHorizonHasNoCost) {
    for (double a : {0.5, 2.0, 10.0}) {
        const OpportunityCost oc = opportunity_cost(a, kMarket, 0.0);
        EXPECT_EQ(oc.theta, 0.0);
        EXPECT_EQ(oc.psi, 0.0);
    }
}

TEST(OpportunityCost, RejectsNonpositiveVolatility) {
    try {
        opportunity_cost(2.0, {0.04, 0.1, 0.0}, 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonpositiveVolatility);
    }
}

TEST(Demand, Examples) {
    EXPECT_EQ(trader_demand(0.5, 0.5, 1.0, 1.0, 0.0), 0.0);
    EXPECT_EQ(trader_demand(0.5, 0.52, 1.0, 1.0, 0.1), 0.0);  // no-trade region
    EXPECT_NEAR(trader_demand(0.5, 0.6, 1.0, 1.0, 0.0), std::log(1.5), 1e-12);
    EXPECT_NEAR(trader_demand(0.5, 0.6, 1.0, 1.0, 0.0), 0.4054651, 1e-7);
    EXPECT_NEAR(trader_demand(0.5, 0.4, 1.0, 1.0, 0.0), -std::log(1.5), 1e-12);
}

TEST(Demand, MonotoneInPriceAndZeroBand) {
    for (double psi : {0.0, 0.05, 0.15}) {
        double prev = INFINITY;
        for (int t = 1; t <= 99; ++t) {
            const double d = trader_demand(t / 100.0, 0.3, 1000.0, 3.0, psi);
            EXPECT_LE(d, prev + 1e-12);
            prev = d;
        }
    }
    // Inside [b(1-psi), b + psi(1-b)] demand vanishes.
    const double b = 0.3, psi = 0.1;
    for (double p = b * (1 - psi) + 1e-6; p < b + psi * (1 - b); p += 0.005) {
        EXPECT_EQ(trader_demand(p, b, 1000.0, 3.0, psi), 0.0) << p;
    }
}

TEST(Allocation, MeanVarianceShare) {
    EXPECT_DOUBLE_EQ(scripted_allocation(opportunity_cost(2.0, kMarket, 2.0)).risky_allocation_pct, 1.0);
    EXPECT_NEAR(scripted_allocation(opportunity_cost(4.2, kMarket, 2.0)).risky_allocation_pct, 0.558, 5e-4);
    EXPECT_NEAR(scripted_allocation(opportunity_cost(4.2, {0.04, 0.10, 1e6}, 2.0)).risky_allocation_pct, 0.0, 1e-12);
}

TEST(ScriptedCost, InterestNetsOutRiskFree) {
    const OpportunityCost plain = scripted_opportunity_cost(4.0, kMarket, 2.0, false, HurdleMode::ExpectedReturn);
    EXPECT_NEAR(plain.psi, opportunity_cost(4.0, kMarket, 2.0).psi, 1e-15);
    const OpportunityCost net = scripted_opportunity_cost(4.0, kMarket, 2.0, true, HurdleMode::ExpectedReturn);
    EXPECT_NEAR(net.theta, std::expm1((0.0751563 - 0.04) * 2.0), 1e-6);
    const OpportunityCost ce = scripted_opportunity_cost(4.0, kMarket, 2.0, false, HurdleMode::CertaintyEquivalent);
    const double w = 0.5859375;
    EXPECT_NEAR(ce.theta, std::expm1((0.04 + w * 0.06 - 0.5 * 4.0 * w * w * 0.0256) * 2.0), 1e-12);
    EXPECT_LT(ce.psi, plain.psi);
}

TEST(Reservation, TicksAreStrict) {
    const ReservationTicks r = reservation_ticks(0.064, 0.0);
    EXPECT_EQ(*r.long_ticks, 6);
    EXPECT_EQ(*r.short_ticks, 7);
    const ReservationTicks exact = reservation_ticks(0.5, 0.0);
    EXPECT_EQ(*exact.long_ticks, 49);
    EXPECT_EQ(*exact.short_ticks, 51);
    EXPECT_FALSE(reservation_ticks(0.005, 0.0).long_ticks);
}

TEST(ScriptedPolicy, EmptyBookLowBelief) {
    AgentSnapshot agent{{12, 200}, 10'000 * kCentsPerDollar, 0, 0};
    const OpportunityCost oc{};  // psi = 0
    const TradeDecision d = scripted_trade_decision(agent, {}, oc, 4.2, {});
    EXPECT_NEAR(d.probability_estimate, 13.0 / 202.0, 1e-12);
    ASSERT_EQ(d.orders.size(), 2u);
    const OrderInstruction& no_buy = d.orders[0];
    const OrderInstruction& yes_buy = d.orders[1];
    EXPECT_EQ(no_buy.contract, Contract::No);
    EXPECT_EQ(no_buy.side, Side::Buy);
    EXPECT_NEAR(no_buy.limit.dollars(), 0.93, 0.011);
    EXPECT_EQ(yes_buy.contract, Contract::Yes);
    EXPECT_EQ(yes_buy.side, Side::Buy);
    EXPECT_LT(yes_buy.limit.dollars(), 0.064);
    // Neither quote crosses the agent's own reservation bounds.
    EXPECT_GT(no_buy.limit.complement().dollars(), 0.064);
    EXPECT_EQ(d.replace_decision, ReplaceDecision::Replace);
}

TEST(ScriptedPolicy, InsideNoTradeBandDoesNothing) {
    AgentSnapshot agent{{12, 200}, 10'000 * kCentsPerDollar, 0, 0};
    MarketSnapshot m;
    m.last_trade = Price(6);
    OpportunityCost oc;
    oc.psi = 0.1;
    const TradeDecision d = scripted_trade_decision(agent, m, oc, 4.2, {});
    EXPECT_TRUE(d.orders.empty());
    EXPECT_EQ(d.replace_decision, ReplaceDecision::Cancel);
}

TEST(ScriptedPolicy, NoCashNoBuys) {
    AgentSnapshot agent{{12, 200}, 0, 0, 0};
    const TradeDecision d = scripted_trade_decision(agent, {}, {}, 4.2, {});
    for (const OrderInstruction& o : d.orders) EXPECT_NE(o.side, Side::Buy);
}

TEST(ScriptedPolicy, NeverQuotesThroughReservation) {
    for (int k = 0; k <= 200; k += 7) {
        for (double psi : {0.0, 0.02, 0.1}) {
            const double b = posterior_belief({k, 200});
            OpportunityCost oc;
            oc.psi = psi;
            for (int last = 1; last <= 99; last += 14) {
                MarketSnapshot m;
                m.last_trade = Price(last);
                const TradeDecision d =
                    scripted_trade_decision({{k, 200}, 10'000 * kCentsPerDollar, 0, 0}, m, oc, 2.0, {});
                for (const OrderInstruction& o : d.orders) {
                    const auto f = normalize_to_yes_frame(o.contract, o.side, o.limit);
                    if (f.side == FrameSide::Bid) {
                        EXPECT_LT(f.price.dollars(), b * (1 - psi) + 1e-12);
                    } else {
                        EXPECT_GT(f.price.dollars(), b + psi * (1 - b) - 1e-12);
                    }
                }
            }
        }
    }
}
