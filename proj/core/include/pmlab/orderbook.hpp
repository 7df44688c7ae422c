#pragma once

// Unified YES/NO limit order book.
//
// Every order, whatever contract it names, is filed on a single book quoted in
// the YES frame: a NO Buy at q is a YES-frame Ask at 1-q and a NO Sell at q is a
// YES-frame Bid at 1-q. Crossing orders match under price-time priority and
// execute at the resting order's price. Depending on the two native legs a fill
// transfers an existing contract, mints a new YES/NO pair against $1 of escrow,
// or burns a pair and releases its escrow.
//
// All money inside the book is integer cents; all quantities are whole
// contracts. That keeps conservation exact.

#include <compare>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pmlab {

using AgentId = std::int32_t;
using OrderId = std::uint64_t;
using Cents = std::int64_t;
using Quantity = std::int64_t;

inline constexpr Cents kCentsPerDollar = 100;

enum class Contract : std::uint8_t { Yes, No };
enum class Side : std::uint8_t { Buy, Sell };
enum class FrameSide : std::uint8_t { Bid, Ask };
enum class SettlementKind : std::uint8_t { TransferYes, TransferNo, Mint, Burn };

std::string_view to_string(Contract c);
std::string_view to_string(Side s);
std::string_view to_string(FrameSide s);
std::string_view to_string(SettlementKind k);

/// A contract price in whole cents, 1..99. Zero and one dollar are not tradable.
class Price {
public:
    static constexpr int kMinTicks = 1;
    static constexpr int kMaxTicks = 99;
    static constexpr int kTicksPerDollar = 100;

    /// Throws Error(InvalidPrice) outside 1..99.
    explicit Price(int ticks);

    static std::optional<Price> try_from_ticks(int ticks) noexcept;
    /// Accepts dollar values that sit on the cent grid (0.9, 0.88, ...).
    static std::optional<Price> try_from_dollars(double dollars) noexcept;

    constexpr int ticks() const noexcept { return ticks_; }
    constexpr double dollars() const noexcept { return ticks_ / 100.0; }
    constexpr Price complement() const noexcept { return Price(Unchecked{}, kTicksPerDollar - ticks_); }

    friend constexpr auto operator<=>(Price, Price) = default;

private:
    struct Unchecked {};
    constexpr Price(Unchecked, int ticks) noexcept : ticks_(ticks) {}
    int ticks_;
};

struct OrderRequest {
    AgentId agent = 0;
    Contract contract = Contract::Yes;
    Side side = Side::Buy;
    Quantity quantity = 0;
    int limit_ticks = 0;  // native frame; validated on submit
};

struct Order {
    OrderId id = 0;
    AgentId agent = 0;
    Contract contract = Contract::Yes;
    Side side = Side::Buy;
    Quantity quantity_open = 0;
    Quantity quantity_original = 0;
    Price limit{50};
    std::uint64_t arrival_seq = 0;
};

struct YesFrameView {
    FrameSide side;
    Price price;
};

struct NativeView {
    Side side;
    Price price;
};

YesFrameView normalize_to_yes_frame(Contract contract, Side side, Price native_price) noexcept;
inline YesFrameView normalize_to_yes_frame(const Order& o) noexcept {
    return normalize_to_yes_frame(o.contract, o.side, o.limit);
}
/// Inverse of normalize_to_yes_frame for a given native contract.
NativeView denormalize_from_yes_frame(FrameSide side, Price frame_price, Contract contract) noexcept;

/// One side of a fill. `cash_delta` is the signed cash flow to the agent.
struct TradeLeg {
    AgentId agent = 0;
    OrderId order_id = 0;
    Contract contract = Contract::Yes;
    Side side = Side::Buy;
    Cents cash_delta = 0;

    friend bool operator==(const TradeLeg&, const TradeLeg&) = default;
};

/// An executed fill. `buyer` is the YES-frame Bid leg (YES Buy or NO Sell),
/// `seller` the YES-frame Ask leg (YES Sell or NO Buy).
struct Trade {
    int round = 0;
    Quantity quantity = 0;
    Price yes_frame_price{50};
    TradeLeg buyer;
    TradeLeg seller;
    SettlementKind kind = SettlementKind::TransferYes;
    Cents escrow_delta = 0;
    bool buyer_was_resting = false;

    /// Committed capital: cash paid by the buying leg(s); a pair mint or burn counts $1 per pair.
    Cents buyer_leg_cash() const noexcept;

    friend bool operator==(const Trade&, const Trade&) = default;
};

struct Account {
    Cents cash_available = 0;
    Cents cash_reserved = 0;
    Quantity yes = 0;  // total held, including reserved
    Quantity no = 0;
    Quantity yes_reserved = 0;
    Quantity no_reserved = 0;

    Cents cash_total() const noexcept { return cash_available + cash_reserved; }
    Quantity yes_available() const noexcept { return yes - yes_reserved; }
    Quantity no_available() const noexcept { return no - no_reserved; }
};

struct Quotes {
    std::optional<Price> yes_bid;
    std::optional<Price> yes_ask;
    std::optional<Price> no_bid;
    std::optional<Price> no_ask;
    std::optional<Cents> spread;  // yes_ask - yes_bid in cents, two-sided books only
};

struct Level {
    Price price;
    Quantity quantity;
    int orders;
};

struct SubmitResult {
    Order order;  // as accepted (id, sequence), before matching
    std::vector<Trade> fills;
    std::optional<Order> resting;
};

class Book {
public:
    Book() = default;

    /// Registers an agent with an opening cash balance. Agents start flat.
    void open_account(AgentId agent, Cents cash);
    bool has_account(AgentId agent) const { return accounts_.count(agent) != 0; }
    const Account& account(AgentId agent) const;
    const std::map<AgentId, Account>& accounts() const noexcept { return accounts_; }

    /// Validates, reserves, matches and rests. Throws pmlab::Error with
    /// InvalidPrice, ZeroQuantity, InsufficientCash, InsufficientContracts or
    /// UnknownAgent, in which case nothing is mutated.
    SubmitResult submit(const OrderRequest& request, int round = 0);

    /// Throws Error(UnknownOrder) if the id is not resting.
    Order cancel(OrderId id);
    std::vector<Order> cancel_all(AgentId agent);
    std::vector<Order> cancel_everything();

    Quotes best_quotes() const;
    /// Quotes ignoring one agent's own orders.
    Quotes best_quotes_excluding(AgentId agent) const;
    std::optional<Price> last_trade_price() const noexcept { return last_trade_; }

    /// Aggregated depth, best level first.
    std::vector<Level> depth(FrameSide side) const;
    std::vector<Order> orders_of(AgentId agent) const;
    std::vector<Order> resting_orders() const;
    std::size_t resting_count() const noexcept { return index_.size(); }

    Cents escrow() const noexcept { return escrow_; }
    Cents total_money() const;
    Quantity outstanding_yes() const;
    Quantity outstanding_no() const;

    /// Throws std::logic_error describing the first violated book invariant.
    void check_invariants() const;

private:
    using Queue = std::deque<Order>;
    using BidLevels = std::map<int, Queue, std::greater<>>;
    using AskLevels = std::map<int, Queue, std::less<>>;

    Account& account_mut(AgentId agent);
    void validate_and_reserve(const OrderRequest& request, Price limit);
    void settle(const Order& buyer_order, const Order& seller_order, Quantity qty, Price frame_price,
                Trade& out);
    void release_reservation(const Order& order);
    template <class Levels>
    void rest(Levels& levels, const Order& order, int frame_ticks);

    std::map<AgentId, Account> accounts_;
    BidLevels bids_;
    AskLevels asks_;
    std::unordered_map<OrderId, std::pair<FrameSide, int>> index_;
    Cents escrow_ = 0;
    std::optional<Price> last_trade_;
    OrderId next_id_ = 1;
    std::uint64_t next_seq_ = 1;
};

}  // namespace pmlab
