#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "pmlab/session.hpp"

namespace pmlab {

using json = nlohmann::json;

namespace {

// ---- primitive encoders ---------------------------------------------------

json price_json(const std::optional<Price>& p) { return p ? json(p->ticks()) : json(nullptr); }

std::optional<Price> price_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    return Price(j.get<int>());
}

Contract contract_from(const std::string& s) {
    if (s == "YES") return Contract::Yes;
    if (s == "NO") return Contract::No;
    throw Error(ErrorCode::MalformedLog, "unknown contract " + s);
}

Side side_from(const std::string& s) {
    if (s == "Buy") return Side::Buy;
    if (s == "Sell") return Side::Sell;
    throw Error(ErrorCode::MalformedLog, "unknown side " + s);
}

SettlementKind kind_from(const std::string& s) {
    for (SettlementKind k : {SettlementKind::TransferYes, SettlementKind::TransferNo, SettlementKind::Mint,
                             SettlementKind::Burn}) {
        if (to_string(k) == s) return k;
    }
    throw Error(ErrorCode::MalformedLog, "unknown settlement kind " + s);
}

ReplaceDecision replace_from(const std::string& s) {
    for (ReplaceDecision d : {ReplaceDecision::Add, ReplaceDecision::Cancel, ReplaceDecision::Replace}) {
        if (to_string(d) == s) return d;
    }
    throw Error(ErrorCode::MalformedLog, "unknown replace decision " + s);
}

ErrorCode code_from(const std::string& s) {
    for (int i = 0; i <= static_cast<int>(ErrorCode::IoError); ++i) {
        const auto c = static_cast<ErrorCode>(i);
        if (to_string(c) == s) return c;
    }
    throw Error(ErrorCode::MalformedLog, "unknown error code " + s);
}

json quotes_json(const Quotes& q) {
    return {{"yes_bid", price_json(q.yes_bid)},
            {"yes_ask", price_json(q.yes_ask)},
            {"no_bid", price_json(q.no_bid)},
            {"no_ask", price_json(q.no_ask)},
            {"spread", q.spread ? json(*q.spread) : json(nullptr)}};
}

Quotes quotes_from(const json& j) {
    Quotes q;
    q.yes_bid = price_from(j.at("yes_bid"));
    q.yes_ask = price_from(j.at("yes_ask"));
    q.no_bid = price_from(j.at("no_bid"));
    q.no_ask = price_from(j.at("no_ask"));
    if (!j.at("spread").is_null()) q.spread = j.at("spread").get<Cents>();
    return q;
}

json levels_json(const std::vector<Level>& levels) {
    json out = json::array();
    for (const Level& l : levels) out.push_back({l.price.ticks(), l.quantity, l.orders});
    return out;
}

std::vector<Level> levels_from(const json& j) {
    std::vector<Level> out;
    for (const json& l : j) out.push_back({Price(l.at(0).get<int>()), l.at(1).get<Quantity>(), l.at(2).get<int>()});
    return out;
}

json positions_json(const std::vector<PositionSnapshot>& ps) {
    json out = json::array();
    for (const PositionSnapshot& p : ps) {
        out.push_back({p.agent, p.cash_available, p.cash_reserved, p.yes, p.no, p.yes_reserved, p.no_reserved});
    }
    return out;
}

std::vector<PositionSnapshot> positions_from(const json& j) {
    std::vector<PositionSnapshot> out;
    for (const json& p : j) {
        out.push_back({p.at(0).get<AgentId>(), p.at(1).get<Cents>(), p.at(2).get<Cents>(), p.at(3).get<Quantity>(),
                       p.at(4).get<Quantity>(), p.at(5).get<Quantity>(), p.at(6).get<Quantity>()});
    }
    return out;
}

json order_json(const Order& o) {
    return {{"id", o.id},
            {"agent", o.agent},
            {"contract", std::string(to_string(o.contract))},
            {"side", std::string(to_string(o.side))},
            {"open", o.quantity_open},
            {"original", o.quantity_original},
            {"limit", o.limit.ticks()},
            {"seq", o.arrival_seq}};
}

Order order_from(const json& j) {
    Order o;
    o.id = j.at("id").get<OrderId>();
    o.agent = j.at("agent").get<AgentId>();
    o.contract = contract_from(j.at("contract").get<std::string>());
    o.side = side_from(j.at("side").get<std::string>());
    o.quantity_open = j.at("open").get<Quantity>();
    o.quantity_original = j.at("original").get<Quantity>();
    o.limit = Price(j.at("limit").get<int>());
    o.arrival_seq = j.at("seq").get<std::uint64_t>();
    return o;
}

json instruction_json(const OrderInstruction& o) {
    return {{"contract", std::string(to_string(o.contract))},
            {"side", std::string(to_string(o.side))},
            {"quantity", o.quantity},
            {"limit", o.limit.ticks()}};
}

OrderInstruction instruction_from(const json& j) {
    return {contract_from(j.at("contract").get<std::string>()), side_from(j.at("side").get<std::string>()),
            j.at("quantity").get<Quantity>(), Price(j.at("limit").get<int>())};
}

json attempts_json(const std::vector<ChatAttempt>& attempts) {
    json out = json::array();
    for (const ChatAttempt& a : attempts) out.push_back({{"raw", a.raw}, {"error", a.error}});
    return out;
}

std::vector<ChatAttempt> attempts_from(const json& j) {
    std::vector<ChatAttempt> out;
    for (const json& a : j) out.push_back({a.at("raw").get<std::string>(), a.at("error").get<std::string>()});
    return out;
}

json leg_json(const TradeLeg& l) {
    return {{"agent", l.agent},
            {"order", l.order_id},
            {"contract", std::string(to_string(l.contract))},
            {"side", std::string(to_string(l.side))},
            {"cash", l.cash_delta}};
}

TradeLeg leg_from(const json& j) {
    return {j.at("agent").get<AgentId>(), j.at("order").get<OrderId>(),
            contract_from(j.at("contract").get<std::string>()), side_from(j.at("side").get<std::string>()),
            j.at("cash").get<Cents>()};
}

json config_json(const TreatmentConfig& c) {
    return {{"cell", c.cell},
            {"horizon_days", c.horizon_days},
            {"interest_enabled", c.interest_enabled},
            {"annual_risk_free", c.annual.risk_free},
            {"annual_mu", c.annual.expected_return},
            {"annual_sigma", c.annual.volatility},
            {"horizon_risk_free", c.horizon.risk_free},
            {"horizon_mu", c.horizon.risky_mean},
            {"horizon_sigma", c.horizon.risky_sd},
            {"n_agents", c.n_agents},
            {"n_high", c.n_high},
            {"n_rounds", c.n_rounds},
            {"n_draws", c.n_draws},
            {"endowment_cents", c.endowment},
            {"p_star", c.p_star},
            {"high_alpha", c.high_alpha},
            {"medium_alpha", c.medium_alpha},
            {"improvement_ticks", c.knobs.improvement_ticks},
            {"fallback_reference", c.knobs.fallback_reference},
            {"passive_depth_ticks", c.knobs.passive_depth_ticks},
            {"hurdle", c.knobs.hurdle == HurdleMode::CertaintyEquivalent ? "certainty_equivalent" : "expected_return"}};
}

TreatmentConfig config_from(const json& j) {
    TreatmentConfig c;
    c.cell = j.at("cell").get<int>();
    c.horizon_days = j.at("horizon_days").get<int>();
    c.interest_enabled = j.at("interest_enabled").get<bool>();
    c.annual = {j.at("annual_risk_free").get<double>(), j.at("annual_mu").get<double>(),
                j.at("annual_sigma").get<double>()};
    c.horizon = {j.at("horizon_risk_free").get<double>(), j.at("horizon_mu").get<double>(),
                 j.at("horizon_sigma").get<double>()};
    c.n_agents = j.at("n_agents").get<int>();
    c.n_high = j.at("n_high").get<int>();
    c.n_rounds = j.at("n_rounds").get<int>();
    c.n_draws = j.at("n_draws").get<int>();
    c.endowment = j.at("endowment_cents").get<Cents>();
    c.p_star = j.at("p_star").get<double>();
    c.high_alpha = j.at("high_alpha").get<double>();
    c.medium_alpha = j.at("medium_alpha").get<double>();
    c.knobs.improvement_ticks = j.at("improvement_ticks").get<int>();
    c.knobs.fallback_reference = j.at("fallback_reference").get<double>();
    c.knobs.passive_depth_ticks = j.at("passive_depth_ticks").get<int>();
    c.knobs.hurdle = j.at("hurdle").get<std::string>() == "expected_return" ? HurdleMode::ExpectedReturn
                                                                          : HurdleMode::CertaintyEquivalent;
    return c;
}

// ---- record writers --------------------------------------------------------

json header_json(const SessionHeader& h) {
    json agents = json::array();
    for (const AgentSetup& a : h.agents) {
        agents.push_back({{"id", a.id},
                          {"risk", std::string(to_string(a.persona.label))},
                          {"alpha", a.persona.alpha},
                          {"successes", a.signal.successes},
                          {"draws", a.signal.draws}});
    }
    return {{"type", "header"},
            {"schema", h.schema},
            {"master_seed", h.master_seed},
            {"session_index", h.session_index},
            {"session_key", h.session_key},
            {"backend", h.backend},
            {"interest_policy", h.interest_policy},
            {"volume_convention", "buyer-leg cash per fill; mint and burn count $1.00 per contract pair"},
            {"config", config_json(h.config)},
            {"agents", agents}};
}

json fill_json(const Trade& t) {
    return {{"type", "fill"},
            {"round", t.round},
            {"quantity", t.quantity},
            {"price", t.yes_frame_price.ticks()},
            {"kind", std::string(to_string(t.kind))},
            {"escrow_delta", t.escrow_delta},
            {"buyer_resting", t.buyer_was_resting},
            {"buyer", leg_json(t.buyer)},
            {"seller", leg_json(t.seller)}};
}

}  // namespace

void write_session_log(std::ostream& out, const SessionLog& log) {
    auto emit = [&](const json& j) { out << j.dump() << '\n'; };
    emit(header_json(log.header));

    auto exchanges_for = [&](int round) {
        for (const ExchangeRecord& e : log.exchanges) {
            if (e.round == round) emit({{"type", "exchange"}, {"round", e.round}, {"agent", e.agent}, {"prompt", e.prompt}});
        }
    };
    exchanges_for(0);

    std::size_t d = 0, f = 0, r = 0;
    for (std::size_t i = 0; i < log.rounds.size(); ++i) {
        const RoundStartRecord& s = log.round_starts.at(i);
        const RoundRecord& rr = log.rounds[i];
        json resting = json::array();
        for (const Order& o : s.resting) resting.push_back(order_json(o));
        emit({{"type", "round_start"},
              {"round", s.round},
              {"bids", levels_json(s.bids)},
              {"asks", levels_json(s.asks)},
              {"quotes", quotes_json(s.quotes)},
              {"last_price", price_json(s.last_price)},
              {"positions", positions_json(s.positions)},
              {"resting", resting}});
        exchanges_for(s.round);

        // Decisions in application order, each followed by its fills and rejections.
        for (; d < log.decisions.size() && log.decisions[d].round == rr.round; ++d) {
            const DecisionRecord& dec = log.decisions[d];
            json orders = json::array();
            for (const OrderInstruction& o : dec.decision.orders) orders.push_back(instruction_json(o));
            emit({{"type", "decision"},
                  {"round", dec.round},
                  {"agent", dec.agent},
                  {"position", dec.position},
                  {"probability_estimate", dec.decision.probability_estimate},
                  {"replace_decision", std::string(to_string(dec.decision.replace_decision))},
                  {"orders", orders},
                  {"degraded", dec.degraded},
                  {"attempts", attempts_json(dec.attempts)}});
            for (; f < log.fills.size() && log.fills[f].round == rr.round &&
                   (log.fills[f].buyer_was_resting ? log.fills[f].seller.agent : log.fills[f].buyer.agent) ==
                       dec.agent;
                 ++f) {
                emit(fill_json(log.fills[f]));
            }
            for (; r < log.rejects.size() && log.rejects[r].round == rr.round && log.rejects[r].agent == dec.agent;
                 ++r) {
                const RejectRecord& rej = log.rejects[r];
                emit({{"type", "reject"},
                      {"round", rej.round},
                      {"agent", rej.agent},
                      {"order", instruction_json(rej.order)},
                      {"code", std::string(to_string(rej.code))},
                      {"message", rej.message}});
            }
        }
        emit({{"type", "round"},
              {"round", rr.round},
              {"order", rr.order},
              {"last_price", price_json(rr.last_price)},
              {"quotes", quotes_json(rr.quotes)},
              {"beliefs", rr.beliefs},
              {"positions", positions_json(rr.positions)},
              {"fills", rr.fills}});
    }

    exchanges_for(-1);
    for (const AllocationRecord& a : log.allocations) {
        emit({{"type", "allocation"},
              {"agent", a.agent},
              {"risky_allocation_pct", a.risky_allocation_pct},
              {"cash", a.cash},
              {"degraded", a.degraded},
              {"attempts", attempts_json(a.attempts)}});
    }
    const RealizationRecord& real = log.realization;
    emit({{"type", "realization"},
          {"risky_return", real.risky_return},
          {"risk_free_return", real.risk_free_return},
          {"last_price", price_json(real.last_price)},
          {"interest_mark", real.interest_mark},
          {"interest_fallback", real.interest_fallback},
          {"interest_credit", real.interest_credit}});
    json agents = json::array();
    for (const AgentOutcome& o : log.resolution.agents) {
        agents.push_back({{"agent", o.agent},
                          {"outside_wealth", o.outside_wealth},
                          {"contract_payout", o.contract_payout},
                          {"interest", o.interest},
                          {"final_wealth", o.final_wealth},
                          {"expected_wealth", o.expected_wealth}});
    }
    emit({{"type", "resolution"}, {"outcome", log.resolution.outcome}, {"agents", agents}});
    for (const std::string& w : log.warnings) emit({{"type", "warning"}, {"message", w}});
}

std::string session_log_to_string(const SessionLog& log) {
    std::ostringstream out;
    write_session_log(out, log);
    return out.str();
}

SessionLog read_session_log(std::istream& in) {
    SessionLog log;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw Error(ErrorCode::MalformedLog, "line " + std::to_string(line_no) + " is not a JSON object");
        }
        try {
            const std::string type = j.at("type").get<std::string>();
            if (!have_header) {
                if (type != "header") throw Error(ErrorCode::MalformedLog, "first record must be the header");
                have_header = true;
                SessionHeader& h = log.header;
                h.schema = j.at("schema").get<std::string>();
                if (h.schema != kSessionSchema) {
                    throw Error(ErrorCode::MixedSchemaVersions, "unsupported log schema " + h.schema);
                }
                h.master_seed = j.at("master_seed").get<std::uint64_t>();
                h.session_index = j.at("session_index").get<std::uint64_t>();
                h.session_key = j.at("session_key").get<std::uint64_t>();
                h.backend = j.at("backend").get<std::string>();
                h.interest_policy = j.at("interest_policy").get<std::string>();
                h.config = config_from(j.at("config"));
                for (const json& a : j.at("agents")) {
                    const RiskLabel label = a.at("risk").get<std::string>() == "High" ? RiskLabel::High : RiskLabel::Medium;
                    h.agents.push_back({a.at("id").get<AgentId>(), {label, a.at("alpha").get<double>()},
                                        {a.at("successes").get<int>(), a.at("draws").get<int>()}});
                }
            } else if (type == "exchange") {
                log.exchanges.push_back(
                    {j.at("round").get<int>(), j.at("agent").get<AgentId>(), j.at("prompt").get<std::string>()});
            } else if (type == "round_start") {
                RoundStartRecord s;
                s.round = j.at("round").get<int>();
                s.bids = levels_from(j.at("bids"));
                s.asks = levels_from(j.at("asks"));
                s.quotes = quotes_from(j.at("quotes"));
                s.last_price = price_from(j.at("last_price"));
                s.positions = positions_from(j.at("positions"));
                for (const json& o : j.at("resting")) s.resting.push_back(order_from(o));
                log.round_starts.push_back(std::move(s));
            } else if (type == "decision") {
                DecisionRecord d;
                d.round = j.at("round").get<int>();
                d.agent = j.at("agent").get<AgentId>();
                d.position = j.at("position").get<int>();
                d.decision.probability_estimate = j.at("probability_estimate").get<double>();
                d.decision.replace_decision = replace_from(j.at("replace_decision").get<std::string>());
                for (const json& o : j.at("orders")) d.decision.orders.push_back(instruction_from(o));
                d.degraded = j.at("degraded").get<bool>();
                d.attempts = attempts_from(j.at("attempts"));
                log.decisions.push_back(std::move(d));
            } else if (type == "fill") {
                Trade t;
                t.round = j.at("round").get<int>();
                t.quantity = j.at("quantity").get<Quantity>();
                t.yes_frame_price = Price(j.at("price").get<int>());
                t.kind = kind_from(j.at("kind").get<std::string>());
                t.escrow_delta = j.at("escrow_delta").get<Cents>();
                t.buyer_was_resting = j.at("buyer_resting").get<bool>();
                t.buyer = leg_from(j.at("buyer"));
                t.seller = leg_from(j.at("seller"));
                log.fills.push_back(t);
            } else if (type == "reject") {
                log.rejects.push_back({j.at("round").get<int>(), j.at("agent").get<AgentId>(),
                                       instruction_from(j.at("order")), code_from(j.at("code").get<std::string>()),
                                       j.at("message").get<std::string>()});
            } else if (type == "round") {
                RoundRecord r;
                r.round = j.at("round").get<int>();
                r.order = j.at("order").get<std::vector<AgentId>>();
                r.last_price = price_from(j.at("last_price"));
                r.quotes = quotes_from(j.at("quotes"));
                r.beliefs = j.at("beliefs").get<std::vector<double>>();
                r.positions = positions_from(j.at("positions"));
                r.fills = j.at("fills").get<std::size_t>();
                log.rounds.push_back(std::move(r));
            } else if (type == "allocation") {
                log.allocations.push_back({j.at("agent").get<AgentId>(), j.at("risky_allocation_pct").get<double>(),
                                           j.at("cash").get<double>(), attempts_from(j.at("attempts")),
                                           j.at("degraded").get<bool>()});
            } else if (type == "realization") {
                RealizationRecord& real = log.realization;
                real.risky_return = j.at("risky_return").get<double>();
                real.risk_free_return = j.at("risk_free_return").get<double>();
                real.last_price = price_from(j.at("last_price"));
                real.interest_mark = j.at("interest_mark").get<double>();
                real.interest_fallback = j.at("interest_fallback").get<bool>();
                real.interest_credit = j.at("interest_credit").get<std::vector<double>>();
            } else if (type == "resolution") {
                log.resolution.outcome = j.at("outcome").get<bool>();
                for (const json& a : j.at("agents")) {
                    log.resolution.agents.push_back({a.at("agent").get<AgentId>(), a.at("outside_wealth").get<double>(),
                                                     a.at("contract_payout").get<double>(),
                                                     a.at("interest").get<double>(), a.at("final_wealth").get<double>(),
                                                     a.at("expected_wealth").get<double>()});
                }
            } else if (type == "warning") {
                log.warnings.push_back(j.at("message").get<std::string>());
            } else {
                throw Error(ErrorCode::MalformedLog, "unknown record type " + type);
            }
        } catch (const json::exception& e) {
            throw Error(ErrorCode::MalformedLog, "line " + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            if (e.code() == ErrorCode::InvalidPrice) {
                throw Error(ErrorCode::MalformedLog, "line " + std::to_string(line_no) + ": " + e.what());
            }
            throw;
        }
    }
    if (!have_header) throw Error(ErrorCode::EmptyLog, "log has no records");
    return log;
}

SessionLog read_session_log_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    return read_session_log(in);
}

}  // namespace pmlab
