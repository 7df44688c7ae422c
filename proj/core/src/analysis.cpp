#include "pmlab/analysis.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace pmlab {

std::string_view to_string(PriceMeasure m) { return m == PriceMeasure::LastTrade ? "last" : "midpoint"; }

// ---------------------------------------------------------------------------
// Metrics

std::optional<double> exposure(const PositionSnapshot& p, std::optional<double> price) {
    if (p.yes == 0 && p.no == 0) return 0.0;
    if (!price) return std::nullopt;
    const double value = p.yes * *price + p.no * (1.0 - *price);
    const double cash = static_cast<double>(p.cash_available + p.cash_reserved) / kCentsPerDollar;
    const double wealth = cash + value;
    return wealth > 0.0 ? value / wealth : 0.0;
}

namespace {

std::optional<double> mean_of(const std::vector<double>& v) {
    if (v.empty()) return std::nullopt;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::optional<double> round_price(const RoundRecord& r, PriceMeasure measure) {
    if (measure == PriceMeasure::Midpoint && r.quotes.yes_bid && r.quotes.yes_ask) {
        return (r.quotes.yes_bid->ticks() + r.quotes.yes_ask->ticks()) / 200.0;
    }
    if (r.last_price) return r.last_price->dollars();
    return std::nullopt;
}

}  // namespace

SessionMetrics compute_metrics(const SessionLog& log, PriceMeasure measure) {
    if (log.rounds.empty()) throw Error(ErrorCode::EmptyLog, "log has no trading rounds");
    const TreatmentConfig& c = log.header.config;
    SessionMetrics m;
    m.long_horizon = c.long_horizon();
    m.interest = c.interest_enabled;
    m.cell = 1 + (m.long_horizon ? 1 : 0) + (m.interest ? 2 : 0);
    m.p_star = c.p_star;
    m.session_index = log.header.session_index;

    std::vector<double> truth, belief, exposures, spreads;
    std::optional<double> truth_last, belief_last, exposure_last, spread_last;
    for (std::size_t i = 0; i < log.rounds.size(); ++i) {
        const RoundRecord& r = log.rounds[i];
        const bool last_round = i + 1 == log.rounds.size();
        const std::optional<double> price = round_price(r, measure);

        if (price) {
            truth.push_back(std::fabs(*price - c.p_star));
            if (const auto avg_belief = mean_of(r.beliefs)) belief.push_back(std::fabs(*price - *avg_belief));
            if (last_round) {
                truth_last = truth.back();
                if (!r.beliefs.empty()) belief_last = belief.back();
            }
        } else {
            ++m.rounds_without_price;
        }

        std::vector<double> agent_exposure;
        bool complete = true;
        for (const PositionSnapshot& p : r.positions) {
            const auto e = exposure(p, price);
            if (!e) {
                complete = false;
                break;
            }
            agent_exposure.push_back(*e);
        }
        if (complete && !agent_exposure.empty()) {
            exposures.push_back(*mean_of(agent_exposure));
            if (last_round) exposure_last = exposures.back();
        } else {
            ++m.rounds_without_exposure;
        }

        if (r.quotes.spread) {
            spreads.push_back(static_cast<double>(*r.quotes.spread) / kCentsPerDollar);
            if (last_round) spread_last = spreads.back();
        } else {
            ++m.rounds_without_spread;
        }
    }
    m.mae_truth_last = truth_last;
    m.mae_truth_mean = mean_of(truth);
    m.mae_belief_last = belief_last;
    m.mae_belief_mean = mean_of(belief);
    m.exposure_last = exposure_last;
    m.exposure_mean = mean_of(exposures);
    m.spread_last = spread_last;
    m.spread_mean = mean_of(spreads);

    Cents volume = 0;
    for (const Trade& t : log.fills) volume += t.buyer_leg_cash();
    m.volume_total = static_cast<double>(volume) / kCentsPerDollar;
    return m;
}

// ---------------------------------------------------------------------------
// OLS

namespace {

/// Inverse of a symmetric positive semi-definite matrix by Gauss-Jordan with
/// partial pivoting. Returns nullopt when a pivot is negligible.
std::optional<std::vector<std::vector<double>>> invert(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    double scale = 0.0;
    for (const auto& row : a) {
        for (double v : row) scale = std::max(scale, std::fabs(v));
    }
    std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        }
        if (std::fabs(a[pivot][col]) <= 1e-12 * std::max(scale, 1.0)) return std::nullopt;
        std::swap(a[pivot], a[col]);
        std::swap(inv[pivot], inv[col]);
        const double d = a[col][col];
        for (std::size_t j = 0; j < n; ++j) {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col || a[r][col] == 0.0) continue;
            const double f = a[r][col];
            for (std::size_t j = 0; j < n; ++j) {
                a[r][j] -= f * a[col][j];
                inv[r][j] -= f * inv[col][j];
            }
        }
    }
    return inv;
}

double two_sided_p(double t, int df) {
    if (std::isnan(t)) return 1.0;
    if (std::isinf(t)) return 0.0;
    const boost::math::students_t_distribution<double> dist(df);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

}  // namespace

OlsFit ols(const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
    const std::size_t n = y.size();
    if (x.size() != n || n == 0) throw Error(ErrorCode::RankDeficientDesign, "design and response sizes differ");
    const std::size_t k = x.front().size();
    if (n <= k) throw Error(ErrorCode::RankDeficientDesign, "not enough rows for the number of regressors");

    std::vector<std::vector<double>> xtx(k, std::vector<double>(k, 0.0));
    std::vector<double> xty(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < k; ++a) {
            xty[a] += x[i][a] * y[i];
            for (std::size_t b = 0; b < k; ++b) xtx[a][b] += x[i][a] * x[i][b];
        }
    }
    const auto inv = invert(xtx);
    if (!inv) throw Error(ErrorCode::RankDeficientDesign, "design matrix is not full rank");

    OlsFit fit;
    fit.n = static_cast<int>(n);
    fit.df = static_cast<int>(n - k);
    fit.coef.assign(k, 0.0);
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) fit.coef[a] += (*inv)[a][b] * xty[b];
    }
    const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double tss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double yhat = 0.0;
        for (std::size_t a = 0; a < k; ++a) yhat += x[i][a] * fit.coef[a];
        fit.rss += (y[i] - yhat) * (y[i] - yhat);
        tss += (y[i] - ybar) * (y[i] - ybar);
    }
    // A constant response has nothing to explain; report R^2 = 0.
    fit.r2 = tss > 0.0 ? std::clamp(1.0 - fit.rss / tss, 0.0, 1.0) : 0.0;
    const double sigma2 = fit.rss / fit.df;
    fit.covariance = *inv;
    for (auto& row : fit.covariance) {
        for (double& v : row) v *= sigma2;
    }
    for (std::size_t a = 0; a < k; ++a) {
        const double se = std::sqrt(std::max(fit.covariance[a][a], 0.0));
        fit.se.push_back(se);
        double t;
        if (se > 0.0) {
            t = fit.coef[a] / se;
        } else {
            t = fit.coef[a] == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                                   : std::copysign(std::numeric_limits<double>::infinity(), fit.coef[a]);
        }
        fit.t.push_back(t);
        fit.p.push_back(two_sided_p(t, fit.df));
    }
    return fit;
}

RegressionResult ols_2x2(const std::vector<Observation>& rows) {
    if (rows.size() < 5) throw Error(ErrorCode::RankDeficientDesign, "at least 5 rows are required");
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    x.reserve(rows.size());
    for (const Observation& o : rows) {
        const double l = o.long_horizon ? 1.0 : 0.0;
        const double i = o.interest ? 1.0 : 0.0;
        x.push_back({1.0, l, i, l * i});
        y.push_back(o.y);
    }
    const OlsFit fit = ols(x, y);
    RegressionResult r;
    for (std::size_t a = 0; a < 4; ++a) {
        r.coef[a] = fit.coef[a];
        r.se[a] = fit.se[a];
        r.t[a] = fit.t[a];
        r.p[a] = fit.p[a];
    }
    r.r2 = fit.r2;
    r.n = fit.n;
    r.residual_effect = fit.coef[1] + fit.coef[3];
    const double var = fit.covariance[1][1] + fit.covariance[3][3] + 2.0 * fit.covariance[1][3];
    r.residual_se = std::sqrt(std::max(var, 0.0));
    double t;
    if (r.residual_se > 0.0) {
        t = r.residual_effect / r.residual_se;
    } else {
        t = r.residual_effect == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                                     : std::copysign(std::numeric_limits<double>::infinity(), r.residual_effect);
    }
    r.residual_p = two_sided_p(t, fit.df);
    return r;
}

// ---------------------------------------------------------------------------
// Mann-Whitney U

namespace {

struct Ranked {
    std::vector<double> ranks;  // midranks, x first then y
    double tie_term = 0.0;      // sum over tie groups of t^3 - t
};

Ranked midranks(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size() + y.size();
    std::vector<std::pair<double, std::size_t>> pooled;
    pooled.reserve(n);
    for (std::size_t i = 0; i < x.size(); ++i) pooled.emplace_back(x[i], i);
    for (std::size_t i = 0; i < y.size(); ++i) pooled.emplace_back(y[i], x.size() + i);
    std::sort(pooled.begin(), pooled.end());
    Ranked r;
    r.ranks.assign(n, 0.0);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && pooled[j + 1].first == pooled[i].first) ++j;
        const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) r.ranks[pooled[k].second] = mid;
        const double t = static_cast<double>(j - i + 1);
        r.tie_term += t * t * t - t;
        i = j + 1;
    }
    return r;
}

double u_of_x(const Ranked& r, std::size_t n1) {
    const double rank_sum = std::accumulate(r.ranks.begin(), r.ranks.begin() + static_cast<long>(n1), 0.0);
    return rank_sum - static_cast<double>(n1) * (static_cast<double>(n1) + 1.0) / 2.0;
}

void require_samples(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.empty() || y.empty()) throw Error(ErrorCode::EmptySample, "both samples must be non-empty");
}

}  // namespace

MWUResult mann_whitney_u_exact(const std::vector<double>& x, const std::vector<double>& y, Direction direction) {
    require_samples(x, y);
    const Ranked r = midranks(x, y);
    const std::size_t n1 = x.size(), n = r.ranks.size();
    MWUResult out{u_of_x(r, n1), 1.0, direction, n1, y.size(), true, r.tie_term > 0.0};

    // Doubled midranks are integers, so count subsets of size n1 by doubled rank sum.
    std::vector<int> twice(n);
    int max_sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
        twice[i] = static_cast<int>(std::lround(2.0 * r.ranks[i]));
        max_sum += twice[i];
    }
    std::vector<std::vector<double>> ways(n1 + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
    ways[0][0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = std::min(i + 1, n1); j >= 1; --j) {
            for (int s = max_sum; s >= twice[i]; --s) {
                ways[j][static_cast<std::size_t>(s)] += ways[j - 1][static_cast<std::size_t>(s - twice[i])];
            }
        }
    }
    int observed = 0;
    for (std::size_t i = 0; i < n1; ++i) observed += twice[i];
    double total = 0.0, tail = 0.0;
    for (int s = 0; s <= max_sum; ++s) {
        const double w = ways[n1][static_cast<std::size_t>(s)];
        total += w;
        if ((direction == Direction::XGreater && s >= observed) || (direction == Direction::XLess && s <= observed)) {
            tail += w;
        }
    }
    out.p = tail / total;
    return out;
}

MWUResult mann_whitney_u_normal(const std::vector<double>& x, const std::vector<double>& y, Direction direction) {
    require_samples(x, y);
    const Ranked r = midranks(x, y);
    const double n1 = static_cast<double>(x.size()), n2 = static_cast<double>(y.size()), n = n1 + n2;
    MWUResult out{u_of_x(r, x.size()), 1.0, direction, x.size(), y.size(), false, r.tie_term > 0.0};
    const double mean = n1 * n2 / 2.0;
    const double var = n1 * n2 / 12.0 * ((n + 1.0) - r.tie_term / (n * (n - 1.0)));
    if (!(var > 0.0)) return out;  // every value tied
    const boost::math::normal_distribution<double> standard(0.0, 1.0);
    const double sd = std::sqrt(var);
    if (direction == Direction::XGreater) {
        out.p = boost::math::cdf(boost::math::complement(standard, (out.u - mean - 0.5) / sd));
    } else {
        out.p = boost::math::cdf(standard, (out.u - mean + 0.5) / sd);
    }
    return out;
}

MWUResult mann_whitney_u(const std::vector<double>& x, const std::vector<double>& y, Direction direction) {
    require_samples(x, y);
    if (x.size() + y.size() <= 12) return mann_whitney_u_exact(x, y, direction);
    return mann_whitney_u_normal(x, y, direction);
}

// ---------------------------------------------------------------------------
// Summary

std::string_view outcome_label(Outcome o) {
    switch (o) {
        case Outcome::MaeTruthLast: return "Last |Price - p*|";
        case Outcome::MaeTruthMean: return "Mean |Price - p*|";
        case Outcome::MaeBeliefLast: return "Last |Price - Belief|";
        case Outcome::MaeBeliefMean: return "Mean |Price - Belief|";
        case Outcome::ExposureLast: return "Last PM Exposure";
        case Outcome::ExposureMean: return "Mean PM Exposure";
        case Outcome::SpreadLast: return "Last Bid-Ask Spread";
        case Outcome::Volume: return "Total Volume ($)";
        case Outcome::SpreadMean: return "Mean Bid-Ask Spread";
    }
    return "?";
}

std::string_view outcome_key(Outcome o) {
    switch (o) {
        case Outcome::MaeTruthLast: return "mae_truth_last";
        case Outcome::MaeTruthMean: return "mae_truth_mean";
        case Outcome::MaeBeliefLast: return "mae_belief_last";
        case Outcome::MaeBeliefMean: return "mae_belief_mean";
        case Outcome::ExposureLast: return "exposure_last";
        case Outcome::ExposureMean: return "exposure_mean";
        case Outcome::SpreadLast: return "spread_last";
        case Outcome::Volume: return "volume_total";
        case Outcome::SpreadMean: return "spread_mean";
    }
    return "?";
}

std::optional<double> outcome_value(const SessionMetrics& m, Outcome o) {
    switch (o) {
        case Outcome::MaeTruthLast: return m.mae_truth_last;
        case Outcome::MaeTruthMean: return m.mae_truth_mean;
        case Outcome::MaeBeliefLast: return m.mae_belief_last;
        case Outcome::MaeBeliefMean: return m.mae_belief_mean;
        case Outcome::ExposureLast: return m.exposure_last;
        case Outcome::ExposureMean: return m.exposure_mean;
        case Outcome::SpreadLast: return m.spread_last;
        case Outcome::Volume: return m.volume_total;
        case Outcome::SpreadMean: return m.spread_mean;
    }
    return std::nullopt;
}

bool higher_is_worse(Outcome o) {
    return o != Outcome::ExposureLast && o != Outcome::ExposureMean && o != Outcome::Volume;
}

namespace {

std::vector<double> cell_values(const std::vector<SessionMetrics>& metrics, int cell, Outcome o) {
    std::vector<double> out;
    for (const SessionMetrics& m : metrics) {
        if (m.cell != cell) continue;
        if (const auto v = outcome_value(m, o)) out.push_back(*v);
    }
    std::sort(out.begin(), out.end());  // canonical order, independent of input order
    return out;
}

Direction flip(Direction d) { return d == Direction::XGreater ? Direction::XLess : Direction::XGreater; }

}  // namespace

SummaryTable summary_table(const std::vector<SessionMetrics>& metrics, PriceMeasure measure) {
    SummaryTable t;
    t.measure = measure;
    for (const SessionMetrics& m : metrics) {
        if (m.cell >= 1 && m.cell <= 4) ++t.sessions[static_cast<std::size_t>(m.cell - 1)];
    }

    for (std::size_t oi = 0; oi < kOutcomes.size(); ++oi) {
        const Outcome o = kOutcomes[oi];
        for (int cell = 1; cell <= 4; ++cell) {
            const std::vector<double> v = cell_values(metrics, cell, o);
            CellMean& cm = t.means[oi][static_cast<std::size_t>(cell - 1)];
            cm.n = static_cast<int>(v.size());
            cm.missing = t.sessions[static_cast<std::size_t>(cell - 1)] - cm.n;
            if (!v.empty()) cm.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        }

        RegressionRow row{o, std::nullopt, ""};
        std::vector<Observation> obs;
        for (int cell = 1; cell <= 4; ++cell) {
            for (double v : cell_values(metrics, cell, o)) obs.push_back({v, cell == 2 || cell == 4, cell >= 3});
        }
        try {
            row.result = ols_2x2(obs);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::RankDeficientDesign) throw;
            row.note = e.what();
        }
        t.regressions.push_back(std::move(row));
    }

    // Predicted directions: the long horizon worsens the market, interest repairs it.
    struct Spec {
        const char* name;
        int x, y;
        bool x_predicted_worse;
    };
    const Spec specs[] = {{"H1 Long-Horizon Effect (Cell 2 vs. Cell 1)", 2, 1, true},
                          {"H2 Direct Effect of Interest (Cell 4 vs. Cell 2)", 4, 2, false},
                          {"H2 Residual Horizon Effect (Cell 4 vs. Cell 3)", 4, 3, true}};
    for (const Spec& s : specs) {
        MwuBattery b{s.name, s.x, s.y, {}};
        for (const Outcome o : kOutcomes) {
            Direction d = s.x_predicted_worse ? Direction::XGreater : Direction::XLess;
            if (!higher_is_worse(o)) d = flip(d);
            MwuRow row{o, d, std::nullopt};
            const auto xs = cell_values(metrics, s.x, o);
            const auto ys = cell_values(metrics, s.y, o);
            if (!xs.empty() && !ys.empty()) row.result = mann_whitney_u(xs, ys, d);
            b.rows.push_back(row);
        }
        t.batteries.push_back(std::move(b));
    }
    return t;
}

// ---------------------------------------------------------------------------
// Writers

namespace {

void metadata(std::ostream& out, PriceMeasure measure) {
    out << "# price_measure=" << to_string(measure) << "\n";
    out << "# volume_convention=" << kVolumeConvention << "\n";
}

std::string opt(const std::optional<double>& v) {
    if (!v) return "";
    std::ostringstream s;
    s << std::setprecision(10) << *v;
    return s.str();
}

std::string num(double v) { return opt(v); }

std::string direction_text(const MwuBattery& b, Direction d) {
    return "Cell " + std::to_string(b.cell_x) + (d == Direction::XGreater ? " > " : " < ") + "Cell " +
           std::to_string(b.cell_y);
}

}  // namespace

void write_metrics_csv(std::ostream& out, const std::vector<SessionMetrics>& metrics, PriceMeasure measure) {
    metadata(out, measure);
    out << "cell,long_horizon,interest,p_star,session_index";
    for (const Outcome o : kOutcomes) out << ',' << outcome_key(o);
    out << ",rounds_without_price,rounds_without_spread,rounds_without_exposure\n";
    for (const SessionMetrics& m : metrics) {
        out << m.cell << ',' << m.long_horizon << ',' << m.interest << ',' << num(m.p_star) << ',' << m.session_index;
        for (const Outcome o : kOutcomes) out << ',' << opt(outcome_value(m, o));
        out << ',' << m.rounds_without_price << ',' << m.rounds_without_spread << ',' << m.rounds_without_exposure
            << '\n';
    }
}

void write_cell_means_csv(std::ostream& out, const SummaryTable& t) {
    metadata(out, t.measure);
    out << "outcome,cell1,cell2,cell3,cell4,n1,n2,n3,n4,missing1,missing2,missing3,missing4\n";
    for (std::size_t oi = 0; oi < kOutcomes.size(); ++oi) {
        out << outcome_key(kOutcomes[oi]);
        for (const CellMean& c : t.means[oi]) out << ',' << opt(c.mean);
        for (const CellMean& c : t.means[oi]) out << ',' << c.n;
        for (const CellMean& c : t.means[oi]) out << ',' << c.missing;
        out << '\n';
    }
    out << "sessions";
    for (int n : t.sessions) out << ',' << n;
    out << ",,,,,,,,\n";
}

void write_regressions_csv(std::ostream& out, const SummaryTable& t) {
    metadata(out, t.measure);
    out << "outcome,term,coef,se,t,p,r2,n,note\n";
    static const char* terms[] = {"intercept", "long_horizon", "interest", "long_x_interest"};
    for (const RegressionRow& row : t.regressions) {
        if (!row.result) {
            out << outcome_key(row.outcome) << ",,,,,,,,\"" << row.note << "\"\n";
            continue;
        }
        const RegressionResult& r = *row.result;
        for (std::size_t a = 0; a < 4; ++a) {
            out << outcome_key(row.outcome) << ',' << terms[a] << ',' << num(r.coef[a]) << ',' << num(r.se[a]) << ','
                << num(r.t[a]) << ',' << num(r.p[a]) << ',' << num(r.r2) << ',' << r.n << ",\n";
        }
        out << outcome_key(row.outcome) << ",long_plus_interaction," << num(r.residual_effect) << ','
            << num(r.residual_se) << ",," << num(r.residual_p) << ',' << num(r.r2) << ',' << r.n << ",\n";
    }
}

void write_mwu_csv(std::ostream& out, const SummaryTable& t) {
    metadata(out, t.measure);
    out << "battery,outcome,predicted_direction,u,p,n1,n2,method\n";
    for (const MwuBattery& b : t.batteries) {
        for (const MwuRow& row : b.rows) {
            out << '"' << b.name << "\"," << outcome_key(row.outcome) << ',' << direction_text(b, row.direction)
                << ',';
            if (row.result) {
                out << num(row.result->u) << ',' << num(row.result->p) << ',' << row.result->n1 << ','
                    << row.result->n2 << ',' << (row.result->exact ? "exact" : "normal") << '\n';
            } else {
                out << ",,,,\n";
            }
        }
    }
}

void write_summary_text(std::ostream& out, const SummaryTable& t) {
    out << "Price measure: " << to_string(t.measure) << "\nVolume convention: " << kVolumeConvention << "\n\n";
    out << "Summary Statistics by Treatment Cell\n";
    out << std::left << std::setw(26) << "" << std::right;
    for (int c = 1; c <= 4; ++c) out << std::setw(14) << ("Cell " + std::to_string(c));
    out << '\n';
    for (std::size_t oi = 0; oi < kOutcomes.size(); ++oi) {
        out << std::left << std::setw(26) << outcome_label(kOutcomes[oi]) << std::right;
        for (const CellMean& c : t.means[oi]) {
            std::ostringstream cell;
            if (c.mean) {
                cell << std::fixed << std::setprecision(kOutcomes[oi] == Outcome::Volume ? 0 : 4) << *c.mean;
            } else {
                cell << "-";
            }
            out << std::setw(14) << cell.str();
        }
        out << '\n';
    }
    out << std::left << std::setw(26) << "N (sessions)" << std::right;
    for (int n : t.sessions) out << std::setw(14) << n;
    out << "\n\nOLS: Y = b0 + b1 Long + b2 Interest + b3 Long x Interest\n";
    out << std::left << std::setw(26) << "Outcome" << std::right << std::setw(13) << "b0" << std::setw(13) << "b1"
        << std::setw(13) << "b2" << std::setw(13) << "b3" << std::setw(13) << "b1+b3" << std::setw(8) << "R2"
        << std::setw(6) << "N" << '\n';
    for (const RegressionRow& row : t.regressions) {
        out << std::left << std::setw(26) << outcome_label(row.outcome) << std::right;
        if (!row.result) {
            out << "  (not estimable: " << row.note << ")\n";
            continue;
        }
        const RegressionResult& r = *row.result;
        out << std::setprecision(5);
        for (double c : r.coef) out << std::setw(13) << c;
        out << std::setw(13) << r.residual_effect << std::setw(8) << std::setprecision(3) << r.r2 << std::setw(6)
            << r.n << '\n';
        out << std::left << std::setw(26) << "" << std::right << std::setprecision(4);
        for (double s : r.se) out << std::setw(13) << ("(" + num(s).substr(0, 8) + ")");
        out << '\n';
    }
    for (const MwuBattery& b : t.batteries) {
        out << "\nMann-Whitney U: " << b.name << '\n';
        out << std::left << std::setw(26) << "Outcome" << std::setw(18) << "Predicted" << std::right << std::setw(12)
            << "U" << std::setw(12) << "p" << '\n';
        for (const MwuRow& row : b.rows) {
            out << std::left << std::setw(26) << outcome_label(row.outcome) << std::setw(18)
                << direction_text(b, row.direction) << std::right;
            if (row.result) {
                out << std::setw(12) << std::setprecision(6) << row.result->u << std::setw(12) << std::setprecision(3)
                    << row.result->p << '\n';
            } else {
                out << std::setw(12) << "-" << std::setw(12) << "-" << '\n';
            }
        }
    }
}

}  // namespace pmlab
