"""Agent species: normal traders, the arbitrageur, and the leveraged-ETF fund.

Normal agents mix a fundamental, a technical and a noise term into an
expected log return, then quote uniformly around the implied price.
The arbitrage agent keeps the leveraged-ETF price on the parity line
``P_L = P_F - P_fF (1 - 1/L)``. The leveraged-ETF agent holds futures and
rebalances them toward ``S_0 [ (P_F / P_fF)(L - 1) - (L - 2) ]``.

All prices handled here are in ticks unless a name says otherwise.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Protocol

from .matching import BUY, SELL, Order, OrderBook, Trade, price_to_ticks

FUTURES = "futures"
LETF = "letf"
MARKETS = (FUTURES, LETF)

ARBITRAGE_ID = -1
LETF_AGENT_ID = -2


class DegeneratePrice(ValueError):
    """A parity-converted price fell to zero or below."""


@dataclass(slots=True)
class NormalAgentState:
    w1: float
    w2: float
    w3: float
    tau: int
    market: str
    rng: random.Random = field(repr=False)

    @classmethod
    def draw(
        cls,
        market: str,
        rng: random.Random,
        w1_max: float,
        w2_max: float,
        w3_max: float,
        tau_max: int,
    ) -> NormalAgentState:
        w1 = rng.uniform(0, w1_max)
        w2 = rng.uniform(0, w2_max)
        w3 = rng.uniform(0, w3_max)
        tau = rng.randint(1, tau_max)
        return cls(w1, w2, w3, tau, market, rng)


def normal_expected_return(
    agent: NormalAgentState,
    p_f: float,
    mid_prev: float,
    mid_lagged: float,
    noise: float,
) -> float:
    """Weighted mix of fundamental, trend-following and noise returns."""
    w1, w2, w3 = agent.w1, agent.w2, agent.w3
    return (
        w1 * math.log(p_f / mid_prev) + w2 * math.log(mid_prev / mid_lagged) + w3 * noise
    ) / (w1 + w2 + w3)


def normal_order(
    mid_prev: float,
    expected_return: float,
    p_d: float,
    uniform_draw: float,
    tick_size: float = 1,
) -> tuple[str, int]:
    """Quote uniformly in ``P_e ± p_d``; below ``P_e`` is a buy.

    Returns ``(side, tick_price)``. The order price sits below the
    expected price exactly when the draw is below one half, so the side is
    decided on the draw itself; ``P_o == P_e`` counts as a buy.
    """
    p_e = mid_prev * math.exp(expected_return)
    p_o = p_e - p_d + 2.0 * p_d * uniform_draw
    side = BUY if uniform_draw <= 0.5 else SELL
    return side, price_to_ticks(p_o, side, tick_size)


def formation_order(
    p_f: float,
    expected_return: float,
    p_d: float,
    uniform_draw: float,
    tick_size: float = 1,
) -> tuple[str, int]:
    """Book-formation quote: anchored at the fundamental price on both counts."""
    p_e = p_f * math.exp(expected_return)
    p_o = p_e - p_d + 2.0 * p_d * uniform_draw
    side = BUY if p_o <= p_f else SELL
    return side, price_to_ticks(p_o, side, tick_size)


def parity_offset(p_ff: float, leverage: float) -> float:
    return p_ff * (1.0 - 1.0 / leverage)


def letf_equiv(futures_price: float, p_ff: float, leverage: float) -> float:
    value = futures_price - parity_offset(p_ff, leverage)
    if value <= 0:
        raise DegeneratePrice(f"futures price {futures_price} maps to {value}")
    return value


def futures_equiv(letf_price: float, p_ff: float, leverage: float) -> float:
    return letf_price + parity_offset(p_ff, leverage)


def letf_target_position(s0: float, leverage: float, p_ff: float, futures_price: float) -> float:
    return s0 * (futures_price / p_ff * (leverage - 1) - (leverage - 2))


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def rebalance_quantity(held: int, target: float, w_r: float) -> int | None:
    """Signed number of unit market orders needed (negative means sell).

    Returns ``None`` when the target is not positive; 0 when the deviation
    is within the ``w_r`` band.
    """
    if target <= 0:
        return None
    if abs(held - target) / target <= w_r:
        return 0
    return -round_half_away(held - target)


@dataclass(slots=True)
class LetfAgentState:
    s0: int
    held: int
    sold: int = 0
    bought: int = 0

    def on_trade(self, trade: Trade) -> None:
        if trade.seller == LETF_AGENT_ID:
            self.held -= trade.quantity
            self.sold += trade.quantity
        if trade.buyer == LETF_AGENT_ID:
            self.held += trade.quantity
            self.bought += trade.quantity


class Venue(Protocol):
    """What the arbitrageur needs from the scheduler."""

    books: dict[str, OrderBook]

    def place_limit(self, market: str, side: str, price: int, owner: int) -> Order: ...

    def place_market(self, market: str, side: str, owner: int) -> list[Trade]: ...

    def cancel(self, market: str, order_id: int, owner: int) -> bool: ...


OTHER = {FUTURES: LETF, LETF: FUTURES}
OPPOSITE = {BUY: SELL, SELL: BUY}


class ArbitrageAgent:
    """Single arbitrageur trading the two books toward price parity.

    Keeps at most one resting order per (market, side). Fills of those
    orders by other agents are queued in :attr:`pending` and hedged with a
    market order on the other book at the next activation.
    """

    def __init__(self, p_ff: float, leverage: float, tick_size: float = 1):
        # parity shift expressed in ticks; may be fractional
        self.offset = parity_offset(p_ff, leverage) / tick_size
        self.resting: dict[tuple[str, str], Order] = {}
        self.pending: list[Trade] = []
        self.positions = {FUTURES: 0, LETF: 0}
        self.unhedged = 0
        self.instant_pairs = 0
        self._quotes: tuple[int | None, ...] | None = None

    # -- bookkeeping ---------------------------------------------------

    def on_trade(self, trade: Trade) -> None:
        """Track inventory and queue fills of resting orders for hedging."""
        if trade.buyer == ARBITRAGE_ID:
            self.positions[trade.market] += trade.quantity
        if trade.seller == ARBITRAGE_ID:
            self.positions[trade.market] -= trade.quantity
        if trade.buyer == trade.seller:
            return
        maker = trade.buyer if trade.maker_side == BUY else trade.seller
        if maker == ARBITRAGE_ID:
            self.pending.append(trade)

    def _ex_own(self, book: OrderBook, side: str, own: Order | None) -> int | None:
        best = book.best_bid() if side == BUY else book.best_ask()
        if own is None or not own.live or best != own.price:
            return best
        if book.quantity_at(side, best) > own.remaining:
            return best
        return book.best_excluding(side, {best: own.remaining})

    def quotes_excluding_own(self, books: dict[str, OrderBook]) -> tuple[int | None, ...]:
        """``(B_F, S_F, B_L, S_L)`` as seen without this agent's own quotes."""
        r = self.resting.get
        fb = books[FUTURES]
        lb = books[LETF]
        return (
            self._ex_own(fb, BUY, r((FUTURES, BUY))),
            self._ex_own(fb, SELL, r((FUTURES, SELL))),
            self._ex_own(lb, BUY, r((LETF, BUY))),
            self._ex_own(lb, SELL, r((LETF, SELL))),
        )

    # -- decision rules ------------------------------------------------

    def desired_resting(
        self, bf: int | None, sf: int | None, bl: int | None, sl: int | None
    ) -> dict[tuple[str, str], int]:
        """Resting quotes implied by the parity rule, strictly inside each spread."""
        off = self.offset
        out: dict[tuple[str, str], int] = {}
        if bl is not None and sl is not None:
            if bf is not None:
                x = bf - off
                if bl < x < sl and x > 0:
                    p = math.floor(x + 1e-9)
                    if bl < p < sl:
                        out[(LETF, BUY)] = p
            if sf is not None:
                x = sf - off
                if bl < x < sl and x > 0:
                    p = math.ceil(x - 1e-9)
                    if bl < p < sl:
                        out[(LETF, SELL)] = p
        if bf is not None and sf is not None:
            if bl is not None:
                x = bl + off
                if bf < x < sf:
                    p = math.floor(x + 1e-9)
                    if bf < p < sf:
                        out[(FUTURES, BUY)] = p
            if sl is not None:
                x = sl + off
                if bf < x < sf:
                    p = math.ceil(x - 1e-9)
                    if bf < p < sf:
                        out[(FUTURES, SELL)] = p
        return out

    def instant_signal(self, books: dict[str, OrderBook]) -> int:
        """+1: buy letf / sell futures; -1: buy futures / sell letf; 0: none."""
        bf = books[FUTURES].best_bid()
        sl = books[LETF].best_ask()
        if bf is not None and sl is not None and sl < bf - self.offset:
            return 1
        bl = books[LETF].best_bid()
        sf = books[FUTURES].best_ask()
        if bl is not None and sf is not None and sf - self.offset <= bl:
            return -1
        return 0

    # -- actions -------------------------------------------------------

    def hedge_pending(self, venue: Venue) -> None:
        pending, self.pending = self.pending, []
        for fill in pending:
            own_side = BUY if fill.buyer == ARBITRAGE_ID else SELL
            for _ in range(fill.quantity):
                if not venue.place_market(OTHER[fill.market], OPPOSITE[own_side], ARBITRAGE_ID):
                    self.unhedged += 1

    def instant(self, venue: Venue) -> int:
        """Trade marketable pairs until neither parity trigger holds."""
        books = venue.books
        pairs = 0
        while True:
            signal = self.instant_signal(books)
            if signal == 0:
                break
            if signal > 0:
                venue.place_market(LETF, BUY, ARBITRAGE_ID)
                venue.place_market(FUTURES, SELL, ARBITRAGE_ID)
            else:
                venue.place_market(FUTURES, BUY, ARBITRAGE_ID)
                venue.place_market(LETF, SELL, ARBITRAGE_ID)
            pairs += 1
        self.instant_pairs += pairs
        return pairs

    def refresh_resting(self, venue: Venue) -> None:
        """Cancel stale resting quotes and place the ones now implied."""
        resting = self.resting
        for key, order in list(resting.items()):
            if not order.live:
                del resting[key]
        quotes = self.quotes_excluding_own(venue.books)
        want = self.desired_resting(*quotes)
        for key, order in list(resting.items()):
            if want.get(key) != order.price:
                venue.cancel(key[0], order.id, ARBITRAGE_ID)
                del resting[key]
        for key, price in want.items():
            if key not in resting:
                order = venue.place_limit(key[0], key[1], price, ARBITRAGE_ID)
                if order.live:
                    resting[key] = order
        self._quotes = quotes
        for book in venue.books.values():
            book.reset_touch()

    def unchanged(self, books: dict[str, OrderBook]) -> bool:
        """Nothing the agent reacts to has moved since its last refresh."""
        q = self._quotes
        if q is None or self.pending:
            return False
        return not (
            books[FUTURES].touched_inside(q[0], q[1]) or books[LETF].touched_inside(q[2], q[3])
        )

    def activate(self, venue: Venue) -> None:
        if self.unchanged(venue.books):
            return
        self.hedge_pending(venue)
        self.refresh_resting(venue)
        self.instant(venue)
        self.refresh_resting(venue)
