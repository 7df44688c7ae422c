#include "pmlab/session.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

namespace pmlab {

HorizonReturns scale_horizon_params(double risk_free, double mu, double sigma, int horizon_days) {
    if (horizon_days <= 0) return {};
    const double years = horizon_days / 365.0;
    HorizonReturns h;
    h.risk_free = std::pow(1.0 + risk_free, years) - 1.0;
    h.risky_mean = years < 1.0 ? mu * years : std::pow(1.0 + mu, years) - 1.0;
    h.risky_sd = sigma * std::sqrt(years);
    return h;
}

TreatmentConfig TreatmentConfig::standard_cell(int cell, double p_star) {
    if (cell < 1 || cell > 4) throw Error(ErrorCode::InvalidConfig, "cell must be 1..4");
    TreatmentConfig c;
    c.cell = cell;
    c.p_star = p_star;
    const bool is_long = cell == 2 || cell == 4;
    c.interest_enabled = cell >= 3;
    c.horizon_days = is_long ? 730 : 4;
    if (is_long) {
        c.horizon = {0.08, 0.20, 0.2263};
    } else {
        c.horizon = scale_horizon_params(c.annual.risk_free, c.annual.expected_return, c.annual.volatility,
                                         c.horizon_days);
    }
    return c;
}

void TreatmentConfig::validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
    if (horizon_days <= 0) fail("horizon_days must be positive");
    if (n_agents <= 0) fail("n_agents must be positive");
    if (n_high < 0 || n_high > n_agents) fail("n_high must lie in 0..n_agents");
    if (n_rounds <= 0) fail("n_rounds must be positive");
    if (n_draws <= 0) fail("n_draws must be positive");
    if (endowment <= 0) fail("endowment must be positive");
    if (!(p_star >= 0.0 && p_star <= 1.0)) fail("p_star must lie in [0, 1]");
    if (!(horizon.risky_sd > 0.0)) fail("horizon risky_sd must be positive");
    if (!(annual.volatility > 0.0)) fail("annual volatility must be positive");
    if (!(high_alpha > 0.0) || !(medium_alpha > 0.0)) fail("risk aversion must be positive");
    if (knobs.improvement_ticks < 0 || knobs.passive_depth_ticks < 0) fail("quoting offsets must be non-negative");
}

// ---------------------------------------------------------------------------
// Traders

ScriptedTrader::ScriptedTrader(const AgentSetup& agent, const TreatmentConfig& config)
    : alpha_(agent.persona.alpha),
      quote_cost_(scripted_opportunity_cost(alpha_, config.annual, config.years(), config.interest_enabled,
                                            config.knobs.hurdle)),
      allocation_cost_(opportunity_cost(alpha_, config.annual, config.years())),
      knobs_(config.knobs) {}

TraderReply<TradeDecision> ScriptedTrader::decide(const RoundView& view) {
    return {scripted_trade_decision(view.self, view.market, quote_cost_, alpha_, knobs_), {}, false};
}

TraderReply<AllocationDecision> ScriptedTrader::allocate(const PostTradeView&) {
    return {scripted_allocation(allocation_cost_), {}, false};
}

ChatTrader::ChatTrader(const TraderSetup& setup, std::shared_ptr<ChatTransport> transport, int max_attempts)
    : id_(setup.agent.id), agent_(std::move(transport), render_system_prompt(setup.system), max_attempts) {
    pending_.push_back({0, id_, agent_.history().front().content});
}

TraderReply<TradeDecision> ChatTrader::decide(const RoundView& view) {
    const std::string prompt = render_round_prompt(view.prompt);
    pending_.push_back({view.round, id_, prompt});
    ChatOutcome<TradeDecision> outcome = agent_.decide_trade(prompt);
    if (outcome.exhausted) {
        // Keep the belief series continuous through a degraded round.
        outcome.decision.probability_estimate = last_estimate_.value_or(0.5);
    } else {
        last_estimate_ = outcome.decision.probability_estimate;
    }
    return {std::move(outcome.decision), std::move(outcome.attempts), outcome.exhausted};
}

TraderReply<AllocationDecision> ChatTrader::allocate(const PostTradeView& view) {
    const std::string prompt = render_post_trade_prompt(view.prompt);
    pending_.push_back({-1, id_, prompt});
    ChatOutcome<AllocationDecision> outcome = agent_.decide_allocation(prompt);
    return {outcome.decision, std::move(outcome.attempts), outcome.exhausted};
}

std::vector<ExchangeRecord> ChatTrader::take_exchanges() {
    std::vector<ExchangeRecord> out;
    out.swap(pending_);
    return out;
}

TraderFactory scripted_backend() {
    return [](const TraderSetup& setup) -> std::unique_ptr<Trader> {
        return std::make_unique<ScriptedTrader>(setup.agent, *setup.config);
    };
}

TraderFactory chat_backend(std::function<std::shared_ptr<ChatTransport>()> make_transport, int max_attempts) {
    return [make_transport = std::move(make_transport), max_attempts](const TraderSetup& setup)
               -> std::unique_ptr<Trader> {
        return std::make_unique<ChatTrader>(setup, make_transport(), max_attempts);
    };
}

// ---------------------------------------------------------------------------
// Phases

std::vector<Signal> generate_signals(RandomStream& rng, double p_star, int n_agents, int n_draws) {
    std::vector<Signal> out;
    out.reserve(static_cast<std::size_t>(n_agents));
    for (int i = 0; i < n_agents; ++i) out.push_back({rng.binomial(n_draws, p_star), n_draws});
    return out;
}

InterestResult accrue_interest(const Book& book, int n_agents, std::optional<Price> last_price, double rate,
                               bool interest_enabled) {
    InterestResult r;
    r.credit.assign(static_cast<std::size_t>(n_agents), 0.0);
    if (!interest_enabled) return r;
    r.fallback = !last_price.has_value();
    r.mark = last_price ? last_price->dollars() : 0.5;
    for (AgentId a = 0; a < n_agents; ++a) {
        const Account& acct = book.account(a);
        const double value = acct.yes * r.mark + acct.no * (1.0 - r.mark);
        r.credit[static_cast<std::size_t>(a)] = value * rate;
    }
    return r;
}

double grow_outside_cash(double cash, double risky_pct, double risk_free_return, double risky_return) {
    return cash * ((1.0 - risky_pct) * (1.0 + risk_free_return) + risky_pct * (1.0 + risky_return));
}

double draw_risky_return(RandomStream& rng, double mu, double sigma) {
    return std::max(-1.0, mu + sigma * rng.normal());
}

namespace {

PositionSnapshot snapshot_of(AgentId id, const Account& a) {
    return {id, a.cash_available, a.cash_reserved, a.yes, a.no, a.yes_reserved, a.no_reserved};
}

RoundStartRecord take_round_start(const Book& book, int round) {
    RoundStartRecord s;
    s.round = round;
    s.bids = book.depth(FrameSide::Bid);
    s.asks = book.depth(FrameSide::Ask);
    s.quotes = book.best_quotes();
    s.last_price = book.last_trade_price();
    for (const auto& [id, acct] : book.accounts()) s.positions.push_back(snapshot_of(id, acct));
    s.resting = book.resting_orders();
    return s;
}

/// Quotes computed from a round-start record while ignoring one agent's orders.
Quotes quotes_excluding(const RoundStartRecord& start, AgentId agent) {
    Quotes q;
    for (const Order& o : start.resting) {
        if (o.agent == agent) continue;
        const YesFrameView v = normalize_to_yes_frame(o);
        if (v.side == FrameSide::Bid) {
            if (!q.yes_bid || v.price > *q.yes_bid) q.yes_bid = v.price;
        } else {
            if (!q.yes_ask || v.price < *q.yes_ask) q.yes_ask = v.price;
        }
    }
    if (q.yes_bid) q.no_ask = q.yes_bid->complement();
    if (q.yes_ask) q.no_bid = q.yes_ask->complement();
    if (q.yes_bid && q.yes_ask) q.spread = q.yes_ask->ticks() - q.yes_bid->ticks();
    return q;
}

void apply_decision(Book& book, AgentId agent, const TradeDecision& decision, int round, std::vector<Trade>& fills,
                    std::vector<RejectRecord>* rejects) {
    if (decision.replace_decision != ReplaceDecision::Add) book.cancel_all(agent);
    for (const OrderInstruction& o : decision.orders) {
        try {
            SubmitResult r = book.submit({agent, o.contract, o.side, o.quantity, o.limit.ticks()}, round);
            fills.insert(fills.end(), r.fills.begin(), r.fills.end());
        } catch (const Error& e) {
            if (rejects) rejects->push_back({round, agent, o, e.code(), e.what()});
        }
    }
}

std::string money_text(Cents c) {
    std::ostringstream s;
    s << "$" << c / kCentsPerDollar << "." << (c % kCentsPerDollar < 10 ? "0" : "") << c % kCentsPerDollar;
    return s.str();
}

std::string price_text(Price p) { return money_text(p.ticks()); }

std::string leg_line(const Trade& t, const TradeLeg& leg) {
    const Price native = leg.contract == Contract::Yes ? t.yes_frame_price : t.yes_frame_price.complement();
    std::ostringstream s;
    s << "Filled: " << to_string(leg.side) << " " << t.quantity << " " << to_string(leg.contract) << " @ "
      << price_text(native) << " (order " << leg.order_id << ")";
    return s.str();
}

}  // namespace

std::vector<std::string> round_updates(const std::vector<Trade>& fills, const std::vector<RejectRecord>& rejects,
                                       AgentId agent, int round) {
    std::vector<std::string> out;
    for (const Trade& t : fills) {
        if (t.round != round) continue;
        if (t.buyer.agent == agent) out.push_back(leg_line(t, t.buyer));
        if (t.seller.agent == agent) out.push_back(leg_line(t, t.seller));
    }
    for (const RejectRecord& r : rejects) {
        if (r.round != round || r.agent != agent) continue;
        std::ostringstream s;
        s << "Rejected (" << to_string(r.code) << "): " << to_string(r.order.side) << " " << r.order.quantity << " "
          << to_string(r.order.contract) << " @ " << price_text(r.order.limit) << ". " << r.message;
        out.push_back(s.str());
    }
    return out;
}

SystemPromptContext system_context(const TreatmentConfig& config, const Persona& persona) {
    SystemPromptContext s;
    s.participants = config.n_agents;
    s.rounds = config.n_rounds;
    s.draws = config.n_draws;
    s.endowment = static_cast<double>(config.endowment) / kCentsPerDollar;
    s.horizon_phrase = horizon_phrase(config.horizon_days);
    s.interest_enabled = config.interest_enabled;
    s.risk = persona.label;
    s.returns = config.horizon;
    return s;
}

RoundPromptContext round_context(const TreatmentConfig& config, const RoundStartRecord& start, AgentId agent,
                                 Signal signal, std::vector<std::string> updates) {
    RoundPromptContext c;
    c.round = start.round;
    c.total_rounds = config.n_rounds;
    c.signal = signal;
    c.updates = std::move(updates);
    c.quotes = start.quotes;
    c.asks = start.asks;
    c.bids = start.bids;
    for (const PositionSnapshot& p : start.positions) {
        if (p.agent != agent) continue;
        c.cash_total = p.cash_available + p.cash_reserved;
        c.cash_available = p.cash_available;
        c.yes = p.yes;
        c.yes_available = p.yes - p.yes_reserved;
        c.no = p.no;
        c.no_available = p.no - p.no_reserved;
    }
    c.mark_price = start.last_price ? start.last_price->dollars() : 0.5;
    c.returns = config.horizon;
    c.interest_enabled = config.interest_enabled;
    for (const Order& o : start.resting) {
        if (o.agent == agent) c.outstanding.push_back({o.id, o.contract, o.side, o.quantity_open, o.quantity_original, o.limit});
    }
    return c;
}

SessionLog run_session(const TreatmentConfig& config, const TraderFactory& backend, std::uint64_t master_seed,
                       std::uint64_t session_index) {
    config.validate();
    SessionLog log;
    SessionHeader& h = log.header;
    h.config = config;
    h.master_seed = master_seed;
    h.session_index = session_index;
    h.session_key = derive_key(master_seed, session_index);

    RandomStream signal_rng(h.session_key, StreamId::Signals);
    RandomStream shuffle_rng(h.session_key, StreamId::Shuffle);
    RandomStream realization_rng(h.session_key, StreamId::Realization);
    RandomStream outcome_rng(h.session_key, StreamId::Outcome);

    // Signal phase.
    const std::vector<Signal> signals = generate_signals(signal_rng, config.p_star, config.n_agents, config.n_draws);
    Book book;
    std::vector<std::unique_ptr<Trader>> traders;
    bool any_remote = false;
    for (AgentId i = 0; i < config.n_agents; ++i) {
        const Persona persona =
            i < config.n_high ? Persona::high(config.high_alpha) : Persona::medium(config.medium_alpha);
        AgentSetup setup{i, persona, signals[static_cast<std::size_t>(i)]};
        h.agents.push_back(setup);
        book.open_account(i, config.endowment);
        traders.push_back(backend({setup, &config, system_context(config, persona)}));
        any_remote = any_remote || traders.back()->remote();
    }
    h.backend = any_remote ? "chat" : "scripted";
    auto collect_exchanges = [&] {
        for (auto& t : traders) {
            for (ExchangeRecord& e : t->take_exchanges()) log.exchanges.push_back(std::move(e));
        }
    };
    collect_exchanges();

    // Trading phase.
    for (int round = 1; round <= config.n_rounds; ++round) {
        log.round_starts.push_back(take_round_start(book, round));
        const RoundStartRecord& start = log.round_starts.back();

        std::vector<RoundView> views(static_cast<std::size_t>(config.n_agents));
        for (AgentId i = 0; i < config.n_agents; ++i) {
            RoundView& v = views[static_cast<std::size_t>(i)];
            const Account& acct = book.account(i);
            v.round = round;
            v.self = {signals[static_cast<std::size_t>(i)], acct.cash_total(), acct.yes, acct.no};
            v.market = {quotes_excluding(start, i), start.last_price};
            if (traders[static_cast<std::size_t>(i)]->remote()) {
                v.prompt = round_context(config, start, i, signals[static_cast<std::size_t>(i)],
                                         round_updates(log.fills, log.rejects, i, round - 1));
            }
        }

        std::vector<TraderReply<TradeDecision>> replies(static_cast<std::size_t>(config.n_agents));
        if (any_remote) {
            std::vector<std::future<TraderReply<TradeDecision>>> pending;
            for (std::size_t i = 0; i < traders.size(); ++i) {
                pending.push_back(std::async(std::launch::async, [&, i] { return traders[i]->decide(views[i]); }));
            }
            for (std::size_t i = 0; i < traders.size(); ++i) replies[i] = pending[i].get();
        } else {
            for (std::size_t i = 0; i < traders.size(); ++i) replies[i] = traders[i]->decide(views[i]);
        }
        collect_exchanges();

        RoundRecord rec;
        rec.round = round;
        const std::size_t fills_before = log.fills.size();
        for (int idx : random_permutation(shuffle_rng, config.n_agents)) rec.order.push_back(idx);
        for (std::size_t pos = 0; pos < rec.order.size(); ++pos) {
            const AgentId agent = rec.order[pos];
            TraderReply<TradeDecision>& reply = replies[static_cast<std::size_t>(agent)];
            log.decisions.push_back({round, agent, static_cast<int>(pos), reply.decision, std::move(reply.attempts),
                                     reply.degraded});
            if (reply.degraded) {
                log.warnings.push_back(std::string(to_string(ErrorCode::ExhaustedRetries)) + ": agent " +
                                       std::to_string(agent) + " round " + std::to_string(round) +
                                       "; the no-op decision was applied");
            }
            apply_decision(book, agent, reply.decision, round, log.fills, &log.rejects);
        }
        rec.fills = log.fills.size() - fills_before;
        rec.last_price = book.last_trade_price();
        rec.quotes = book.best_quotes();
        for (const auto& reply : replies) rec.beliefs.push_back(reply.decision.probability_estimate);
        for (const auto& [id, acct] : book.accounts()) rec.positions.push_back(snapshot_of(id, acct));
        log.rounds.push_back(std::move(rec));
    }

    // Post-trading phase.
    book.cancel_everything();
    RealizationRecord& real = log.realization;
    real.last_price = book.last_trade_price();
    real.risk_free_return = config.horizon.risk_free;
    const InterestResult interest =
        accrue_interest(book, config.n_agents, real.last_price, config.horizon.risk_free, config.interest_enabled);
    real.interest_mark = interest.mark;
    real.interest_fallback = interest.fallback;
    real.interest_credit = interest.credit;
    if (interest.fallback) {
        log.warnings.push_back(std::string(to_string(ErrorCode::NoTradeEverOccurred)) +
                               ": no trade occurred; position interest marked at 0.50");
    }
    real.risky_return = draw_risky_return(realization_rng, config.horizon.risky_mean, config.horizon.risky_sd);

    const double mark = real.last_price ? real.last_price->dollars() : 0.5;
    std::vector<double> outside(static_cast<std::size_t>(config.n_agents));
    for (AgentId i = 0; i < config.n_agents; ++i) {
        const Account& acct = book.account(i);
        PostTradeView view;
        view.prompt.returns = config.horizon;
        view.prompt.cash = acct.cash_total();
        view.prompt.yes = acct.yes;
        view.prompt.no = acct.no;
        view.prompt.mark_price = mark;
        view.prompt.interest_enabled = config.interest_enabled;
        TraderReply<AllocationDecision> reply = traders[static_cast<std::size_t>(i)]->allocate(view);
        const double pct = std::clamp(reply.decision.risky_allocation_pct, 0.0, 1.0);
        const double cash = static_cast<double>(acct.cash_total()) / kCentsPerDollar;
        log.allocations.push_back({i, pct, cash, std::move(reply.attempts), reply.degraded});
        if (reply.degraded) {
            log.warnings.push_back(std::string(to_string(ErrorCode::ExhaustedRetries)) + ": agent " +
                                   std::to_string(i) + " post-trade; allocation 0.0 was applied");
        }
        outside[static_cast<std::size_t>(i)] =
            grow_outside_cash(cash, pct, config.horizon.risk_free, real.risky_return);
    }
    collect_exchanges();

    // Resolution.
    log.resolution.outcome = outcome_rng.bernoulli(config.p_star);
    for (AgentId i = 0; i < config.n_agents; ++i) {
        const Account& acct = book.account(i);
        AgentOutcome o;
        o.agent = i;
        o.outside_wealth = outside[static_cast<std::size_t>(i)];
        o.contract_payout = static_cast<double>(log.resolution.outcome ? acct.yes : acct.no);
        o.interest = interest.credit[static_cast<std::size_t>(i)];
        o.final_wealth = o.outside_wealth + o.contract_payout + o.interest;
        o.expected_wealth = o.outside_wealth + config.p_star * acct.yes + (1.0 - config.p_star) * acct.no + o.interest;
        log.resolution.agents.push_back(o);
    }
    return log;
}

std::vector<Trade> replay_fills(const SessionLog& log) {
    Book book;
    for (const AgentSetup& a : log.header.agents) book.open_account(a.id, log.header.config.endowment);
    std::vector<Trade> fills;
    for (const DecisionRecord& d : log.decisions) apply_decision(book, d.agent, d.decision, d.round, fills, nullptr);
    return fills;
}

}  // namespace pmlab
