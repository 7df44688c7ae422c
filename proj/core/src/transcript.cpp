#include <sstream>

#include "pmlab/session.hpp"

namespace pmlab {

namespace {

const std::string* logged_prompt(const SessionLog& log, AgentId agent, int round) {
    for (const ExchangeRecord& e : log.exchanges) {
        if (e.agent == agent && e.round == round) return &e.prompt;
    }
    return nullptr;
}

void write_attempts(std::ostringstream& out, const std::vector<ChatAttempt>& attempts) {
    for (std::size_t i = 0; i < attempts.size(); ++i) {
        out << "Raw response (attempt " << i + 1 << "):\n" << attempts[i].raw << "\n";
        if (!attempts[i].error.empty()) out << "Rejected: " << attempts[i].error << "\n";
    }
}

}  // namespace

std::string render_transcript(const SessionLog& log, AgentId agent) {
    const SessionHeader& h = log.header;
    const AgentSetup* setup = nullptr;
    for (const AgentSetup& a : h.agents) {
        if (a.id == agent) setup = &a;
    }
    if (!setup) throw Error(ErrorCode::UnknownAgent, "agent " + std::to_string(agent) + " is not in this session");
    const TreatmentConfig& config = h.config;

    std::ostringstream out;
    out << "==== Experiment Transcript: agent " << agent << " (" << to_string(setup->persona.label)
        << " risk tolerance, alpha " << setup->persona.alpha << "), session " << h.session_index << " ====\n\n";

    out << "---- System Prompt ----\n";
    if (const std::string* p = logged_prompt(log, agent, 0)) {
        out << *p;
    } else {
        out << render_system_prompt(system_context(config, setup->persona));
    }

    for (const RoundStartRecord& start : log.round_starts) {
        const int round = start.round;
        out << "\n---- Round " << round << " Trading Decision - Prompt ----\n";
        if (const std::string* p = logged_prompt(log, agent, round)) {
            out << *p;
        } else {
            out << render_round_prompt(round_context(config, start, agent, setup->signal,
                                                     round_updates(log.fills, log.rejects, agent, round - 1)));
        }
        out << "\n---- Round " << round << " Trading Decision - Response ----\n";
        for (const DecisionRecord& d : log.decisions) {
            if (d.round != round || d.agent != agent) continue;
            write_attempts(out, d.attempts);
            if (d.degraded) out << "All attempts failed; the no-op decision was applied.\n";
            out << "Response:\n" << render_trade_response(d.decision) << "\n";
            out << "(applied " << d.position + 1 << " of " << config.n_agents << " in this round's shuffled order)\n";
        }
        const std::vector<std::string> updates = round_updates(log.fills, log.rejects, agent, round);
        if (!updates.empty()) {
            out << "Round " << round << " results:\n";
            for (const std::string& u : updates) out << "- " << u << "\n";
        }
    }

    out << "\n---- Post-Trading Investment Decision - Prompt ----\n";
    if (const std::string* p = logged_prompt(log, agent, -1)) {
        out << *p;
    } else if (!log.rounds.empty()) {
        PostTradePromptContext ctx;
        ctx.returns = config.horizon;
        ctx.mark_price = log.realization.last_price ? log.realization.last_price->dollars() : 0.5;
        ctx.interest_enabled = config.interest_enabled;
        for (const PositionSnapshot& p : log.rounds.back().positions) {
            if (p.agent != agent) continue;
            // Resting orders are cancelled before this prompt, so reserved cash is available again.
            ctx.cash = p.cash_available + p.cash_reserved;
            ctx.yes = p.yes;
            ctx.no = p.no;
        }
        out << render_post_trade_prompt(ctx);
    }
    out << "\n---- Post-Trading Investment Decision - Response ----\n";
    for (const AllocationRecord& a : log.allocations) {
        if (a.agent != agent) continue;
        write_attempts(out, a.attempts);
        if (a.degraded) out << "All attempts failed; allocation 0.0 was applied.\n";
        out << "Response:\n" << render_allocation_response({a.risky_allocation_pct}) << "\n";
    }

    out << "\n---- Resolution ----\n";
    out << "Event " << (log.resolution.outcome ? "occurred" : "did not occur") << "; risky return "
        << log.realization.risky_return << "\n";
    for (const AgentOutcome& o : log.resolution.agents) {
        if (o.agent != agent) continue;
        out << "Outside wealth: " << o.outside_wealth << "\nContract payout: " << o.contract_payout
            << "\nInterest: " << o.interest << "\nFinal wealth: " << o.final_wealth << "\n";
    }
    return out.str();
}

}  // namespace pmlab
