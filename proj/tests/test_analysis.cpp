#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "pmlab/analysis.hpp"
#include "pmlab/error.hpp"
#include "support/oracles.hpp"

#ifdef PMLAB_HAVE_EIGEN
#include <Eigen/Dense>
#endif

using namespace pmlab;
namespace oracle = pmlab::oracle;

namespace {

std::vector<Observation> balanced(const std::array<double, 4>& means, int per_cell = 10) {
    std::vector<Observation> rows;
    for (int cell = 1; cell <= 4; ++cell) {
        for (int i = 0; i < per_cell; ++i) {
            rows.push_back({means[static_cast<std::size_t>(cell - 1)], cell == 2 || cell == 4, cell >= 3});
        }
    }
    return rows;
}

SessionLog synthetic_log(const std::vector<std::optional<int>>& last_ticks, double p_star) {
    SessionLog log;
    log.header.config = TreatmentConfig::standard_cell(1, p_star);
    int round = 0;
    for (const auto& t : last_ticks) {
        RoundRecord r;
        r.round = ++round;
        if (t) r.last_price = Price(*t);
        r.beliefs = {0.06, 0.08};
        r.positions = {{0, 1000, 0, 0, 0, 0, 0}, {1, 1000, 0, 0, 0, 0, 0}};
        log.rounds.push_back(r);
    }
    return log;
}

}  // namespace

TEST(Exposure, TranscriptHolding) {
    PositionSnapshot p{0, 629'565, 0, 56'257, 0, 0, 0};
    EXPECT_NEAR(*exposure(p, 0.06), 3375.42 / 9671.07, 1e-9);
    EXPECT_NEAR(*exposure(p, 0.06), 0.349022, 1e-6);
    EXPECT_FALSE(exposure(p, std::nullopt).has_value());
    PositionSnapshot flat{0, 1000, 0, 0, 0, 0, 0};
    EXPECT_EQ(*exposure(flat, std::nullopt), 0.0);
}

TEST(Metrics, PriceErrors) {
    const SessionMetrics m = compute_metrics(synthetic_log({10, 8}, 0.05), PriceMeasure::LastTrade);
    EXPECT_NEAR(*m.mae_truth_last, 0.03, 1e-12);
    EXPECT_NEAR(*m.mae_truth_mean, 0.04, 1e-12);
    EXPECT_NEAR(*m.mae_belief_last, 0.01, 1e-12);
    EXPECT_EQ(*m.exposure_last, 0.0);
    EXPECT_FALSE(m.spread_last.has_value());
    EXPECT_EQ(m.rounds_without_spread, 2);
}

TEST(Metrics, MissingPricesAreCounted) {
    const SessionMetrics m = compute_metrics(synthetic_log({std::nullopt, 8}, 0.05), PriceMeasure::LastTrade);
    EXPECT_EQ(m.rounds_without_price, 1);
    EXPECT_NEAR(*m.mae_truth_mean, 0.03, 1e-12);
    EXPECT_THROW(compute_metrics(SessionLog{}, PriceMeasure::LastTrade), Error);
}

TEST(Metrics, MidpointUsesTwoSidedQuote) {
    SessionLog log = synthetic_log({10}, 0.05);
    log.rounds[0].quotes.yes_bid = Price(4);
    log.rounds[0].quotes.yes_ask = Price(8);
    log.rounds[0].quotes.spread = 4;
    const SessionMetrics m = compute_metrics(log, PriceMeasure::Midpoint);
    EXPECT_NEAR(*m.mae_truth_last, 0.01, 1e-12);
    EXPECT_NEAR(*m.spread_last, 0.04, 1e-12);
}

TEST(Metrics, MintVolumeCountsOneDollarPerPair) {
    SessionLog log = synthetic_log({60}, 0.05);
    Trade t;
    t.quantity = 10;
    t.yes_frame_price = Price(60);
    t.kind = SettlementKind::Mint;
    t.buyer = {0, 1, Contract::Yes, Side::Buy, -600};
    t.seller = {1, 2, Contract::No, Side::Buy, -400};
    log.fills.push_back(t);
    EXPECT_NEAR(compute_metrics(log, PriceMeasure::LastTrade).volume_total, 10.0, 1e-12);
}

// ---------------------------------------------------------------------------

TEST(Ols, ExposureCellMeans) {
    const RegressionResult r = ols_2x2(balanced({0.749, 0.169, 0.744, 0.616}));
    EXPECT_NEAR(r.coef[0], 0.749, 1e-12);
    EXPECT_NEAR(r.coef[1], -0.580, 1e-12);
    EXPECT_NEAR(r.coef[2], -0.005, 1e-12);
    EXPECT_NEAR(r.coef[3], 0.452, 1e-12);
    EXPECT_NEAR(r.residual_effect, -0.128, 1e-12);
}

TEST(Ols, ConstantResponse) {
    const RegressionResult r = ols_2x2(balanced({0.3, 0.3, 0.3, 0.3}));
    EXPECT_NEAR(r.coef[0], 0.3, 1e-12);
    for (int i = 1; i < 4; ++i) EXPECT_NEAR(r.coef[static_cast<std::size_t>(i)], 0.0, 1e-12);
    EXPECT_EQ(r.r2, 0.0);
}

TEST(Ols, RankDeficiency) {
    std::vector<Observation> rows = balanced({1, 2, 3, 4});
    rows.erase(std::remove_if(rows.begin(), rows.end(), [](const Observation& o) { return o.long_horizon; }),
               rows.end());
    EXPECT_THROW(ols_2x2(rows), Error);
    EXPECT_THROW(ols_2x2(balanced({1, 2, 3, 4}, 1)), Error);
}

TEST(Ols, KnownStandardErrors) {
    // y = 1 + 2x with residuals +-1 gives se(slope) = sqrt(s^2 / Sxx).
    const std::vector<std::vector<double>> x{{1, 0}, {1, 1}, {1, 2}, {1, 3}};
    const std::vector<double> y{2, 2, 6, 6};
    const OlsFit f = ols(x, y);
    EXPECT_NEAR(f.coef[0], 1.6, 1e-12);
    EXPECT_NEAR(f.coef[1], 1.6, 1e-12);
    EXPECT_NEAR(f.rss, 3.2, 1e-12);
    EXPECT_NEAR(f.se[1], std::sqrt(1.6 / 5.0), 1e-12);
    EXPECT_EQ(f.df, 2);
    EXPECT_GT(f.p[1], 0.0);
    EXPECT_LT(f.p[1], 1.0);
}

#ifdef PMLAB_HAVE_EIGEN
TEST(Ols, MatchesPseudoInverseOracle) {
    std::mt19937_64 gen(123);
    std::normal_distribution<double> noise(0.0, 0.1);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Observation> rows;
        Eigen::MatrixXd X(40, 4);
        Eigen::VectorXd Y(40);
        for (int i = 0; i < 40; ++i) {
            const bool l = i % 2, in = (i / 2) % 2;
            const double y = 0.5 + 0.3 * l - 0.2 * in + 0.1 * l * in + noise(gen);
            rows.push_back({y, l, in});
            X.row(i) << 1.0, l, in, l * in;
            Y(i) = y;
        }
        const Eigen::VectorXd beta = X.completeOrthogonalDecomposition().pseudoInverse() * Y;
        const Eigen::VectorXd resid = Y - X * beta;
        const Eigen::MatrixXd cov = (X.transpose() * X).inverse() * (resid.squaredNorm() / 36.0);
        const RegressionResult r = ols_2x2(rows);
        for (int a = 0; a < 4; ++a) {
            EXPECT_NEAR(r.coef[static_cast<std::size_t>(a)], beta(a), 1e-10);
            EXPECT_NEAR(r.se[static_cast<std::size_t>(a)], std::sqrt(cov(a, a)), 1e-10);
        }
        EXPECT_NEAR(r.residual_se, std::sqrt(cov(1, 1) + cov(3, 3) + 2 * cov(1, 3)), 1e-10);
    }
}
#endif

// ---------------------------------------------------------------------------

TEST(MannWhitney, PerfectSeparation) {
    const MWUResult r = mann_whitney_u({4, 5, 6}, {1, 2, 3}, Direction::XGreater);
    EXPECT_TRUE(r.exact);
    EXPECT_EQ(r.u, 9.0);
    EXPECT_NEAR(r.p, 0.05, 1e-12);
    EXPECT_NEAR(mann_whitney_u({4, 5, 6}, {1, 2, 3}, Direction::XLess).p, 1.0, 1e-12);
}

TEST(MannWhitney, IdenticalSamples) {
    for (Direction d : {Direction::XGreater, Direction::XLess}) {
        EXPECT_GE(mann_whitney_u({1, 2, 3}, {1, 2, 3}, d).p, 0.5);
        EXPECT_GE(mann_whitney_u(std::vector<double>(20, 1.0), std::vector<double>(20, 1.0), d).p, 0.5);
    }
}

TEST(MannWhitney, ExactMatchesEnumerationForAllSmallSizes) {
    std::mt19937_64 gen(5);
    int cases = 0;
    for (int n1 = 1; n1 <= 11; ++n1) {
        for (int n2 = 1; n1 + n2 <= 12; ++n2) {
            for (int rep = 0; rep < 6; ++rep) {
                // Small value alphabets force ties on most repetitions.
                const int alphabet = rep < 3 ? 4 : 1000;
                std::vector<double> x, y;
                for (int i = 0; i < n1; ++i) x.push_back(static_cast<double>(gen() % alphabet));
                for (int i = 0; i < n2; ++i) y.push_back(static_cast<double>(gen() % alphabet));
                for (Direction d : {Direction::XGreater, Direction::XLess}) {
                    const MWUResult r = mann_whitney_u(x, y, d);
                    ASSERT_TRUE(r.exact);
                    ASSERT_NEAR(r.p, oracle::enumerate_mwu_p(x, y, d), 1e-12) << n1 << "," << n2;
                    ASSERT_DOUBLE_EQ(r.u, oracle::u_by_pairs(x, y));
                    ++cases;
                }
            }
        }
    }
    EXPECT_EQ(cases, 66 * 12);
}

TEST(MannWhitney, NormalApproximationAgreesWithExactAtModerateSize) {
    std::vector<double> x, y;
    for (int i = 0; i < 10; ++i) {
        x.push_back(i * 1.3 + 2);
        y.push_back(i * 1.1);
    }
    const MWUResult approx = mann_whitney_u(x, y, Direction::XGreater);
    EXPECT_FALSE(approx.exact);
    EXPECT_NEAR(approx.p, mann_whitney_u_exact(x, y, Direction::XGreater).p, 0.01);
    EXPECT_THROW(mann_whitney_u({}, {1.0}, Direction::XLess), Error);
}

// ---------------------------------------------------------------------------

TEST(Summary, SingleCellHasNoTests) {
    std::vector<SessionMetrics> ms;
    for (int i = 0; i < 5; ++i) ms.push_back(compute_metrics(synthetic_log({10, 8}, 0.05), PriceMeasure::LastTrade));
    const SummaryTable t = summary_table(ms, PriceMeasure::LastTrade);
    EXPECT_EQ(t.sessions[0], 5);
    EXPECT_EQ(t.sessions[1], 0);
    EXPECT_TRUE(t.means[0][0].mean.has_value());
    EXPECT_FALSE(t.means[0][1].mean.has_value());
    for (const RegressionRow& r : t.regressions) EXPECT_FALSE(r.result.has_value());
    for (const MwuBattery& b : t.batteries)
        for (const MwuRow& r : b.rows) EXPECT_FALSE(r.result.has_value());
}

TEST(Summary, InvariantToSessionOrder) {
    std::mt19937_64 gen(1);
    std::vector<SessionMetrics> ms;
    for (int i = 0; i < 40; ++i) {
        SessionMetrics m;
        m.cell = 1 + i % 4;
        m.long_horizon = m.cell == 2 || m.cell == 4;
        m.interest = m.cell >= 3;
        m.exposure_last = static_cast<double>(gen() % 1000) / 1000.0;
        m.exposure_mean = m.exposure_last;
        m.volume_total = static_cast<double>(gen() % 5000);
        ms.push_back(m);
    }
    std::ostringstream a, b;
    write_summary_text(a, summary_table(ms, PriceMeasure::LastTrade));
    std::shuffle(ms.begin(), ms.end(), gen);
    write_summary_text(b, summary_table(ms, PriceMeasure::LastTrade));
    EXPECT_EQ(a.str(), b.str());
}

TEST(Summary, CsvCarriesMetadataRows) {
    std::vector<SessionMetrics> ms{compute_metrics(synthetic_log({10}, 0.05), PriceMeasure::Midpoint)};
    const SummaryTable t = summary_table(ms, PriceMeasure::Midpoint);
    for (auto writer : {write_cell_means_csv, write_regressions_csv, write_mwu_csv}) {
        std::ostringstream s;
        writer(s, t);
        EXPECT_EQ(s.str().rfind("# price_measure=midpoint", 0), 0u) << s.str();
        EXPECT_NE(s.str().find("# volume_convention="), std::string::npos);
    }
}
