#pragma once

// Session metrics, regression and rank tests, and the cell summary tables.

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pmlab/session.hpp"

namespace pmlab {

enum class PriceMeasure { LastTrade, Midpoint };
std::string_view to_string(PriceMeasure m);  // "last" / "midpoint"

inline constexpr const char* kVolumeConvention =
    "buyer-leg cash per fill; mint and burn count $1.00 per contract pair";

struct SessionMetrics {
    int cell = 0;
    bool long_horizon = false;
    bool interest = false;
    double p_star = 0.0;
    std::uint64_t session_index = 0;

    std::optional<double> mae_truth_last;
    std::optional<double> mae_truth_mean;
    std::optional<double> mae_belief_last;
    std::optional<double> mae_belief_mean;
    std::optional<double> exposure_last;
    std::optional<double> exposure_mean;
    double volume_total = 0.0;  // dollars
    std::optional<double> spread_last;  // dollars
    std::optional<double> spread_mean;

    int rounds_without_price = 0;
    int rounds_without_spread = 0;
    int rounds_without_exposure = 0;
};

/// Exposure of one holding: contract value over total wealth. Zero holdings
/// give zero whatever the price; otherwise a missing price gives no value.
std::optional<double> exposure(const PositionSnapshot& p, std::optional<double> price);

/// Throws Error(EmptyLog) if the log has no rounds.
SessionMetrics compute_metrics(const SessionLog& log, PriceMeasure measure);

// ---------------------------------------------------------------------------
// Regression

struct OlsFit {
    std::vector<double> coef;
    std::vector<double> se;
    std::vector<double> t;
    std::vector<double> p;
    std::vector<std::vector<double>> covariance;
    double r2 = 0.0;
    double rss = 0.0;
    int n = 0;
    int df = 0;
};

/// Least squares via the normal equations with classical standard errors and
/// two-sided t-distribution p values. Throws Error(RankDeficientDesign).
OlsFit ols(const std::vector<std::vector<double>>& x, const std::vector<double>& y);

struct Observation {
    double y = 0.0;
    bool long_horizon = false;
    bool interest = false;
};

struct RegressionResult {
    std::array<double, 4> coef{};  // intercept, long, interest, long x interest
    std::array<double, 4> se{};
    std::array<double, 4> t{};
    std::array<double, 4> p{};
    double r2 = 0.0;
    int n = 0;
    double residual_effect = 0.0;  // beta1 + beta3
    double residual_se = 0.0;
    double residual_p = 1.0;
};

/// Throws Error(RankDeficientDesign) when fewer than 5 rows or a cell is empty.
RegressionResult ols_2x2(const std::vector<Observation>& rows);

// ---------------------------------------------------------------------------
// Mann-Whitney U

enum class Direction { XGreater, XLess };

struct MWUResult {
    double u = 0.0;  // U of the x sample
    double p = 1.0;  // one-sided, in the stated direction
    Direction direction = Direction::XGreater;
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    bool exact = false;
    bool tie_corrected = false;
};

/// Exact permutation distribution when n1 + n2 <= 12, otherwise the normal
/// approximation with continuity and tie correction. Throws Error(EmptySample).
MWUResult mann_whitney_u(const std::vector<double>& x, const std::vector<double>& y, Direction direction);
MWUResult mann_whitney_u_exact(const std::vector<double>& x, const std::vector<double>& y, Direction direction);
MWUResult mann_whitney_u_normal(const std::vector<double>& x, const std::vector<double>& y, Direction direction);

// ---------------------------------------------------------------------------
// Summary

enum class Outcome {
    MaeTruthLast,
    MaeTruthMean,
    MaeBeliefLast,
    MaeBeliefMean,
    ExposureLast,
    ExposureMean,
    SpreadLast,
    Volume,
    SpreadMean,
};
inline constexpr std::array<Outcome, 9> kOutcomes = {
    Outcome::MaeTruthLast, Outcome::MaeTruthMean, Outcome::MaeBeliefLast, Outcome::MaeBeliefMean, Outcome::ExposureLast,
    Outcome::ExposureMean, Outcome::SpreadLast,   Outcome::Volume,        Outcome::SpreadMean};

std::string_view outcome_label(Outcome o);
std::string_view outcome_key(Outcome o);
std::optional<double> outcome_value(const SessionMetrics& m, Outcome o);
/// True for outcomes where a higher value means a worse-functioning market.
bool higher_is_worse(Outcome o);

struct CellMean {
    std::optional<double> mean;
    int n = 0;
    int missing = 0;
};

struct MwuRow {
    Outcome outcome;
    Direction direction;  // of the first-named cell relative to the second
    std::optional<MWUResult> result;
};

struct MwuBattery {
    std::string name;
    int cell_x = 0;
    int cell_y = 0;
    std::vector<MwuRow> rows;
};

struct RegressionRow {
    Outcome outcome;
    std::optional<RegressionResult> result;
    std::string note;
};

struct SummaryTable {
    PriceMeasure measure = PriceMeasure::LastTrade;
    std::array<int, 4> sessions{};                       // per cell
    std::array<std::array<CellMean, 4>, 9> means{};      // [outcome][cell-1]
    std::vector<RegressionRow> regressions;
    std::vector<MwuBattery> batteries;
};

SummaryTable summary_table(const std::vector<SessionMetrics>& metrics, PriceMeasure measure);

void write_metrics_csv(std::ostream& out, const std::vector<SessionMetrics>& metrics, PriceMeasure measure);
void write_cell_means_csv(std::ostream& out, const SummaryTable& table);
void write_regressions_csv(std::ostream& out, const SummaryTable& table);
void write_mwu_csv(std::ostream& out, const SummaryTable& table);
void write_summary_text(std::ostream& out, const SummaryTable& table);

}  // namespace pmlab
