#pragma once

// Equilibrium price of a binary contract when traders hold Binomial-sampled
// posteriors, lognormally distributed risk aversion, and an outside portfolio
// that charges an opportunity cost over the horizon.

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pmlab/agents.hpp"

namespace pmlab {

struct TheoryParams {
    double years = 2.0;
    MarketParams market;  // annual r_f, mu, sigma
    int n_draws = 200;
    double wealth = 10'000.0;
    double alpha_log_mean = 0.5;
    double alpha_log_sd = 0.6;
    double p_star = 0.05;
    int alpha_grid_size = 2000;
    double bracket_lo = 0.001;
    double bracket_hi = 0.999;
    double price_tolerance = 1e-9;
};

struct EquilibriumResult {
    double expected_belief = 0.0;
    double clearing_price = 0.0;
    double bias = 0.0;  // clearing_price - expected_belief
    double residual_demand = 0.0;
    int iterations = 0;
};

/// Equal-probability nodes of Lognormal(mu, sd): exp(mu + sd * Phi^-1((j + 0.5) / G)), each weight 1/G.
std::vector<double> lognormal_midpoint_grid(double log_mean, double log_sd, int size);

/// Pre-tabulated integrand so repeated demand evaluations reuse the grid,
/// the Binomial weights and the per-alpha opportunity costs.
class DemandModel {
public:
    explicit DemandModel(const TheoryParams& params);
    double operator()(double price) const;
    double expected_belief() const noexcept { return expected_belief_; }

private:
    double wealth_;
    std::vector<double> beliefs_;  // posterior per k with nonzero weight
    std::vector<double> belief_weights_;
    std::vector<double> alphas_;
    std::vector<double> psis_;
    double expected_belief_;
};

double aggregate_demand(double price, const TheoryParams& params);

/// Bracketed root of `f` by Brent's method. Throws Error(NoSignChange).
struct RootResult {
    double root = 0.0;
    double value = 0.0;
    int iterations = 0;
};
template <class F>
RootResult brent_root(F&& f, double lo, double hi, double tolerance, int max_iterations = 200);

/// Throws Error(NoSignChange) with the scanned demand curve in the message.
EquilibriumResult solve_equilibrium(const TheoryParams& params);

struct SweepRow {
    double years = 0.0;
    std::optional<EquilibriumResult> result;  // absent when the bracket has no sign change
    std::string note;
};
std::vector<SweepRow> bias_sweep(const TheoryParams& params, const std::vector<double>& horizons_years);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace pmlab

#include "pmlab/detail/brent.hpp"
