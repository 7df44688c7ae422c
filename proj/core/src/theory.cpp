#include "pmlab/theory.hpp"

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <ostream>
#include <sstream>

namespace pmlab {

std::vector<double> lognormal_midpoint_grid(double log_mean, double log_sd, int size) {
    const boost::math::normal_distribution<double> standard(0.0, 1.0);
    std::vector<double> nodes(static_cast<std::size_t>(size));
    for (int j = 0; j < size; ++j) {
        const double u = (j + 0.5) / size;
        nodes[static_cast<std::size_t>(j)] = std::exp(log_mean + log_sd * boost::math::quantile(standard, u));
    }
    return nodes;
}

DemandModel::DemandModel(const TheoryParams& params) : wealth_(params.wealth) {
    if (!(params.alpha_log_sd > 0.0)) throw Error(ErrorCode::InvalidConfig, "alpha_log_sd must be positive");
    if (params.alpha_grid_size < 1) throw Error(ErrorCode::InvalidConfig, "alpha_grid_size must be positive");
    if (!(params.p_star >= 0.0 && params.p_star <= 1.0)) throw Error(ErrorCode::InvalidConfig, "p_star outside [0, 1]");

    const boost::math::binomial_distribution<double> binom(params.n_draws, params.p_star);
    for (int k = 0; k <= params.n_draws; ++k) {
        const double w = boost::math::pdf(binom, k);
        if (w == 0.0) continue;
        beliefs_.push_back(posterior_belief({k, params.n_draws}));
        belief_weights_.push_back(w);
    }
    expected_belief_ = (1.0 + params.n_draws * params.p_star) / (2.0 + params.n_draws);

    alphas_ = lognormal_midpoint_grid(params.alpha_log_mean, params.alpha_log_sd, params.alpha_grid_size);
    psis_.reserve(alphas_.size());
    for (double a : alphas_) psis_.push_back(opportunity_cost(a, params.market, params.years).psi);
}

double DemandModel::operator()(double price) const {
    const double alpha_weight = 1.0 / static_cast<double>(alphas_.size());
    double total = 0.0;
    for (std::size_t k = 0; k < beliefs_.size(); ++k) {
        double inner = 0.0;
        for (std::size_t j = 0; j < alphas_.size(); ++j) {
            inner += trader_demand(price, beliefs_[k], wealth_, alphas_[j], psis_[j]);
        }
        total += belief_weights_[k] * inner * alpha_weight;
    }
    return total;
}

double aggregate_demand(double price, const TheoryParams& params) { return DemandModel(params)(price); }

EquilibriumResult solve_equilibrium(const TheoryParams& params) {
    const DemandModel demand(params);
    EquilibriumResult r;
    r.expected_belief = demand.expected_belief();
    RootResult root;
    try {
        root = brent_root(demand, params.bracket_lo, params.bracket_hi, params.price_tolerance);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NoSignChange) throw;
        std::ostringstream msg;
        msg << "aggregate demand does not change sign on (" << params.bracket_lo << ", " << params.bracket_hi
            << "); scanned curve:";
        for (int i = 0; i <= 49; ++i) {
            const double p = params.bracket_lo + (params.bracket_hi - params.bracket_lo) * i / 49.0;
            msg << " (" << p << ", " << demand(p) << ")";
        }
        throw Error(ErrorCode::NoSignChange, msg.str());
    }
    r.clearing_price = root.root;
    r.residual_demand = root.value;
    r.iterations = root.iterations;
    r.bias = r.clearing_price - r.expected_belief;
    return r;
}

std::vector<SweepRow> bias_sweep(const TheoryParams& params, const std::vector<double>& horizons_years) {
    std::vector<SweepRow> rows;
    for (double t : horizons_years) {
        TheoryParams p = params;
        p.years = t;
        SweepRow row;
        row.years = t;
        try {
            row.result = solve_equilibrium(p);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoSignChange) throw;
            row.note = "NoSignChange";
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    const auto old_precision = out.precision(10);
    out << "T_years,expected_belief,price,bias,flag\n";
    for (const SweepRow& row : rows) {
        out << row.years << ',';
        if (row.result) {
            out << row.result->expected_belief << ',' << row.result->clearing_price << ',' << row.result->bias << ",\n";
        } else {
            out << ",,," << row.note << '\n';
        }
    }
    out.precision(old_precision);
}

}  // namespace pmlab
