#include "pmlab/orderbook.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "pmlab/error.hpp"

namespace pmlab {

std::string_view to_string(Contract c) { return c == Contract::Yes ? "YES" : "NO"; }
std::string_view to_string(Side s) { return s == Side::Buy ? "Buy" : "Sell"; }
std::string_view to_string(FrameSide s) { return s == FrameSide::Bid ? "Bid" : "Ask"; }
std::string_view to_string(SettlementKind k) {
    switch (k) {
        case SettlementKind::TransferYes: return "Transfer_YES";
        case SettlementKind::TransferNo: return "Transfer_NO";
        case SettlementKind::Mint: return "Mint";
        case SettlementKind::Burn: return "Burn";
    }
    return "?";
}

Price::Price(int ticks) : ticks_(ticks) {
    if (ticks < kMinTicks || ticks > kMaxTicks) {
        throw Error(ErrorCode::InvalidPrice, "price ticks " + std::to_string(ticks) + " outside 1..99");
    }
}

std::optional<Price> Price::try_from_ticks(int ticks) noexcept {
    if (ticks < kMinTicks || ticks > kMaxTicks) return std::nullopt;
    return Price(Unchecked{}, ticks);
}

std::optional<Price> Price::try_from_dollars(double dollars) noexcept {
    if (!std::isfinite(dollars)) return std::nullopt;
    const double scaled = dollars * kTicksPerDollar;
    const double nearest = std::round(scaled);
    if (std::abs(scaled - nearest) > 1e-6) return std::nullopt;
    return try_from_ticks(static_cast<int>(nearest));
}

YesFrameView normalize_to_yes_frame(Contract contract, Side side, Price native_price) noexcept {
    if (contract == Contract::Yes) {
        return {side == Side::Buy ? FrameSide::Bid : FrameSide::Ask, native_price};
    }
    return {side == Side::Buy ? FrameSide::Ask : FrameSide::Bid, native_price.complement()};
}

NativeView denormalize_from_yes_frame(FrameSide side, Price frame_price, Contract contract) noexcept {
    if (contract == Contract::Yes) {
        return {side == FrameSide::Bid ? Side::Buy : Side::Sell, frame_price};
    }
    return {side == FrameSide::Bid ? Side::Sell : Side::Buy, frame_price.complement()};
}

Cents Trade::buyer_leg_cash() const noexcept {
    switch (kind) {
        case SettlementKind::TransferYes: return quantity * yes_frame_price.ticks();
        case SettlementKind::TransferNo: return quantity * yes_frame_price.complement().ticks();
        case SettlementKind::Mint:
        case SettlementKind::Burn: return quantity * kCentsPerDollar;
    }
    return 0;
}

namespace {

// Native price paid or received per contract for a leg executing at a YES-frame price.
Cents native_unit(Contract contract, Price frame_price) {
    return contract == Contract::Yes ? frame_price.ticks() : frame_price.complement().ticks();
}

SettlementKind classify(const Order& buyer, const Order& seller) {
    const bool buyer_yes = buyer.contract == Contract::Yes;   // YES Buy, else NO Sell
    const bool seller_yes = seller.contract == Contract::Yes;  // YES Sell, else NO Buy
    if (buyer_yes && seller_yes) return SettlementKind::TransferYes;
    if (buyer_yes && !seller_yes) return SettlementKind::Mint;
    if (!buyer_yes && seller_yes) return SettlementKind::Burn;
    return SettlementKind::TransferNo;
}

}  // namespace

void Book::open_account(AgentId agent, Cents cash) {
    if (cash < 0) throw Error(ErrorCode::InvalidConfig, "negative opening cash");
    Account acc;
    acc.cash_available = cash;
    accounts_[agent] = acc;
}

const Account& Book::account(AgentId agent) const {
    auto it = accounts_.find(agent);
    if (it == accounts_.end()) throw Error(ErrorCode::UnknownAgent, "agent " + std::to_string(agent));
    return it->second;
}

Account& Book::account_mut(AgentId agent) {
    auto it = accounts_.find(agent);
    if (it == accounts_.end()) throw Error(ErrorCode::UnknownAgent, "agent " + std::to_string(agent));
    return it->second;
}

void Book::validate_and_reserve(const OrderRequest& request, Price limit) {
    Account& acc = account_mut(request.agent);
    if (request.side == Side::Buy) {
        const Cents cost = request.quantity * limit.ticks();
        if (cost > acc.cash_available) {
            throw Error(ErrorCode::InsufficientCash, "need " + std::to_string(cost) + " cents, available " +
                                                         std::to_string(acc.cash_available));
        }
        acc.cash_available -= cost;
        acc.cash_reserved += cost;
        return;
    }
    Quantity& held = request.contract == Contract::Yes ? acc.yes : acc.no;
    Quantity& reserved = request.contract == Contract::Yes ? acc.yes_reserved : acc.no_reserved;
    if (request.quantity > held - reserved) {
        throw Error(ErrorCode::InsufficientContracts,
                    "need " + std::to_string(request.quantity) + " " + std::string(to_string(request.contract)) +
                        ", available " + std::to_string(held - reserved));
    }
    reserved += request.quantity;
}

void Book::release_reservation(const Order& order) {
    Account& acc = account_mut(order.agent);
    if (order.side == Side::Buy) {
        const Cents held = order.quantity_open * order.limit.ticks();
        acc.cash_reserved -= held;
        acc.cash_available += held;
    } else if (order.contract == Contract::Yes) {
        acc.yes_reserved -= order.quantity_open;
    } else {
        acc.no_reserved -= order.quantity_open;
    }
}

void Book::settle(const Order& buyer_order, const Order& seller_order, Quantity qty, Price frame_price,
                  Trade& out) {
    out.quantity = qty;
    out.yes_frame_price = frame_price;
    out.kind = classify(buyer_order, seller_order);

    auto apply_leg = [&](const Order& o, TradeLeg& leg) {
        Account& acc = account_mut(o.agent);
        const Cents unit = native_unit(o.contract, frame_price);
        leg.agent = o.agent;
        leg.order_id = o.id;
        leg.contract = o.contract;
        leg.side = o.side;
        if (o.side == Side::Buy) {
            const Cents reserved = qty * o.limit.ticks();
            const Cents paid = qty * unit;
            acc.cash_reserved -= reserved;
            acc.cash_available += reserved - paid;
            leg.cash_delta = -paid;
            (o.contract == Contract::Yes ? acc.yes : acc.no) += qty;
        } else {
            const Cents received = qty * unit;
            acc.cash_available += received;
            leg.cash_delta = received;
            if (o.contract == Contract::Yes) {
                acc.yes_reserved -= qty;
                acc.yes -= qty;
            } else {
                acc.no_reserved -= qty;
                acc.no -= qty;
            }
        }
    };
    apply_leg(buyer_order, out.buyer);
    apply_leg(seller_order, out.seller);

    if (out.kind == SettlementKind::Mint) out.escrow_delta = qty * kCentsPerDollar;
    if (out.kind == SettlementKind::Burn) out.escrow_delta = -qty * kCentsPerDollar;
    escrow_ += out.escrow_delta;
    last_trade_ = frame_price;
}

template <class Levels>
void Book::rest(Levels& levels, const Order& order, int frame_ticks) {
    levels[frame_ticks].push_back(order);
    index_[order.id] = {normalize_to_yes_frame(order).side, frame_ticks};
}

SubmitResult Book::submit(const OrderRequest& request, int round) {
    if (request.quantity <= 0) throw Error(ErrorCode::ZeroQuantity, "quantity must be positive");
    const auto limit = Price::try_from_ticks(request.limit_ticks);
    if (!limit) {
        throw Error(ErrorCode::InvalidPrice, "limit ticks " + std::to_string(request.limit_ticks) + " outside 1..99");
    }
    validate_and_reserve(request, *limit);

    Order incoming;
    incoming.id = next_id_++;
    incoming.agent = request.agent;
    incoming.contract = request.contract;
    incoming.side = request.side;
    incoming.quantity_open = request.quantity;
    incoming.quantity_original = request.quantity;
    incoming.limit = *limit;
    incoming.arrival_seq = next_seq_++;

    SubmitResult result;
    result.order = incoming;
    const YesFrameView frame = normalize_to_yes_frame(incoming);

    auto match_against = [&](auto& opposite, auto crosses) {
        while (incoming.quantity_open > 0 && !opposite.empty()) {
            auto level_it = opposite.begin();
            if (!crosses(level_it->first)) break;
            Queue& queue = level_it->second;
            Order& resting = queue.front();
            const Quantity qty = std::min(incoming.quantity_open, resting.quantity_open);
            const Price exec = Price(level_it->first);

            Trade trade;
            trade.round = round;
            if (frame.side == FrameSide::Bid) {
                settle(incoming, resting, qty, exec, trade);
                trade.buyer_was_resting = false;
            } else {
                settle(resting, incoming, qty, exec, trade);
                trade.buyer_was_resting = true;
            }
            result.fills.push_back(trade);

            incoming.quantity_open -= qty;
            resting.quantity_open -= qty;
            if (resting.quantity_open == 0) {
                index_.erase(resting.id);
                queue.pop_front();
                if (queue.empty()) opposite.erase(level_it);
            }
        }
    };

    const int p = frame.price.ticks();
    if (frame.side == FrameSide::Bid) {
        match_against(asks_, [p](int ask) { return ask <= p; });
        if (incoming.quantity_open > 0) rest(bids_, incoming, p);
    } else {
        match_against(bids_, [p](int bid) { return bid >= p; });
        if (incoming.quantity_open > 0) rest(asks_, incoming, p);
    }
    if (incoming.quantity_open > 0) result.resting = incoming;
    return result;
}

Order Book::cancel(OrderId id) {
    auto it = index_.find(id);
    if (it == index_.end()) throw Error(ErrorCode::UnknownOrder, "order " + std::to_string(id) + " is not resting");
    const auto [side, ticks] = it->second;
    auto take = [&](auto& levels) {
        auto level = levels.find(ticks);
        Queue& queue = level->second;
        auto pos = std::find_if(queue.begin(), queue.end(), [id](const Order& o) { return o.id == id; });
        Order removed = *pos;
        queue.erase(pos);
        if (queue.empty()) levels.erase(level);
        return removed;
    };
    Order removed = side == FrameSide::Bid ? take(bids_) : take(asks_);
    index_.erase(it);
    release_reservation(removed);
    return removed;
}

std::vector<Order> Book::cancel_all(AgentId agent) {
    std::vector<Order> cancelled;
    for (const Order& o : orders_of(agent)) cancelled.push_back(cancel(o.id));
    return cancelled;
}

std::vector<Order> Book::cancel_everything() {
    std::vector<Order> cancelled;
    for (const Order& o : resting_orders()) cancelled.push_back(cancel(o.id));
    return cancelled;
}

namespace {

template <class Levels>
std::optional<Price> best_excluding(const Levels& levels, std::optional<AgentId> skip) {
    for (const auto& [ticks, queue] : levels) {
        for (const Order& o : queue) {
            if (!skip || o.agent != *skip) return Price(ticks);
        }
    }
    return std::nullopt;
}

Quotes make_quotes(std::optional<Price> bid, std::optional<Price> ask) {
    Quotes q;
    q.yes_bid = bid;
    q.yes_ask = ask;
    if (ask) q.no_bid = ask->complement();
    if (bid) q.no_ask = bid->complement();
    if (bid && ask) q.spread = ask->ticks() - bid->ticks();
    return q;
}

}  // namespace

Quotes Book::best_quotes() const {
    return make_quotes(best_excluding(bids_, std::nullopt), best_excluding(asks_, std::nullopt));
}

Quotes Book::best_quotes_excluding(AgentId agent) const {
    return make_quotes(best_excluding(bids_, agent), best_excluding(asks_, agent));
}

std::vector<Level> Book::depth(FrameSide side) const {
    std::vector<Level> out;
    auto collect = [&](const auto& levels) {
        for (const auto& [ticks, queue] : levels) {
            Level level{Price(ticks), 0, 0};
            for (const Order& o : queue) {
                level.quantity += o.quantity_open;
                ++level.orders;
            }
            out.push_back(level);
        }
    };
    if (side == FrameSide::Bid) {
        collect(bids_);
    } else {
        collect(asks_);
    }
    return out;
}

std::vector<Order> Book::resting_orders() const {
    std::vector<Order> out;
    out.reserve(index_.size());
    for (const auto& [ticks, queue] : bids_) out.insert(out.end(), queue.begin(), queue.end());
    for (const auto& [ticks, queue] : asks_) out.insert(out.end(), queue.begin(), queue.end());
    return out;
}

std::vector<Order> Book::orders_of(AgentId agent) const {
    std::vector<Order> out;
    for (const Order& o : resting_orders()) {
        if (o.agent == agent) out.push_back(o);
    }
    std::sort(out.begin(), out.end(), [](const Order& a, const Order& b) { return a.arrival_seq < b.arrival_seq; });
    return out;
}

Cents Book::total_money() const {
    Cents total = escrow_;
    for (const auto& [id, acc] : accounts_) total += acc.cash_total();
    return total;
}

Quantity Book::outstanding_yes() const {
    Quantity total = 0;
    for (const auto& [id, acc] : accounts_) total += acc.yes;
    return total;
}

Quantity Book::outstanding_no() const {
    Quantity total = 0;
    for (const auto& [id, acc] : accounts_) total += acc.no;
    return total;
}

void Book::check_invariants() const {
    auto fail = [](const std::string& what) { throw std::logic_error("book invariant violated: " + what); };

    std::map<AgentId, Account> expected;
    for (const Order& o : resting_orders()) {
        if (o.quantity_open <= 0 || o.quantity_open > o.quantity_original) fail("open quantity out of range");
        Account& e = expected[o.agent];
        if (o.side == Side::Buy) {
            e.cash_reserved += o.quantity_open * o.limit.ticks();
        } else if (o.contract == Contract::Yes) {
            e.yes_reserved += o.quantity_open;
        } else {
            e.no_reserved += o.quantity_open;
        }
    }
    for (const auto& [id, acc] : accounts_) {
        const Account& e = expected[id];
        if (acc.cash_available < 0 || acc.yes < 0 || acc.no < 0) fail("negative balance for agent " + std::to_string(id));
        if (acc.cash_reserved != e.cash_reserved) fail("cash reservation mismatch for agent " + std::to_string(id));
        if (acc.yes_reserved != e.yes_reserved || acc.no_reserved != e.no_reserved) {
            fail("contract reservation mismatch for agent " + std::to_string(id));
        }
        if (acc.yes_reserved > acc.yes || acc.no_reserved > acc.no) fail("reserved beyond holdings");
    }
    const Quantity yes = outstanding_yes();
    const Quantity no = outstanding_no();
    if (yes != no) fail("YES outstanding != NO outstanding");
    if (escrow_ != yes * kCentsPerDollar) fail("escrow does not back outstanding pairs");
    if (!bids_.empty() && !asks_.empty() && bids_.begin()->first >= asks_.begin()->first) fail("crossed book at rest");
    if (index_.size() != resting_orders().size()) fail("order index out of sync");
}

}  // namespace pmlab
