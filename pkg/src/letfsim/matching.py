"""Continuous double auction for a single market.

Prices inside the book are integer tick indices (``price / tick_size``).
Callers working in currency convert with :func:`round_to_tick` on the way
in and multiply by the tick size on the way out.

Resting orders are matched by price, then ``placed_at``, then ``id``.
Trades execute at the resting order's price.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field

BUY = "buy"
SELL = "sell"
LIMIT = "limit"
MARKET = "market"

# Tolerance for prices that are on the grid up to float noise (e.g. 4999.9999999).
_GRID_EPS = 1e-9
_NO_BID = 0
_NO_ASK = float("inf")


class RejectedOrder(ValueError):
    """Raised for orders that cannot enter the book."""


def round_to_tick(raw_price: float, side: str, tick_size: float = 1) -> float:
    """Round a raw price onto the tick grid: buys down, sells up.

    Returns a price in currency units (an integer multiple of ``tick_size``).
    """
    return price_to_ticks(raw_price, side, tick_size) * tick_size


def price_to_ticks(raw_price: float, side: str, tick_size: float = 1) -> int:
    """Same rounding rule as :func:`round_to_tick`, returning the tick index."""
    if not raw_price > 0:
        raise RejectedOrder(f"non-positive order price {raw_price!r}")
    x = raw_price / tick_size
    if side == BUY:
        ticks = math.floor(x + _GRID_EPS)
    elif side == SELL:
        ticks = math.ceil(x - _GRID_EPS)
    else:
        raise RejectedOrder(f"unknown side {side!r}")
    if ticks < 1:
        raise RejectedOrder(f"price {raw_price!r} rounds below one tick")
    return ticks


@dataclass(slots=True, eq=False)
class Order:
    id: int
    side: str
    kind: str
    price: int | None
    quantity: int
    owner: int
    placed_at: int
    remaining: int = field(init=False)
    live: bool = field(init=False, default=False)

    def __post_init__(self) -> None:
        self.remaining = self.quantity


@dataclass(slots=True, frozen=True)
class Trade:
    time: int
    market: str
    price: int
    quantity: int
    buyer: int
    seller: int
    buy_order: int
    sell_order: int
    maker_side: str


@dataclass(slots=True, frozen=True)
class BookSnapshot:
    best_bid: int | None
    best_ask: int | None
    mid: float | None
    bid_depth: tuple[int, ...] = ()
    ask_depth: tuple[int, ...] = ()


class OrderBook:
    """Price-time priority limit order book for one market.

    ``lifetime`` is the order lifetime t_c: :meth:`expire` removes orders
    whose age strictly exceeds it. ``placed_at`` must be nondecreasing
    across submissions, which lets expiry walk a FIFO queue.

    Quantities are stored in arrays indexed by tick, so ``max_price``
    (in ticks) bounds memory; limit orders above it are rejected.
    """

    def __init__(
        self,
        market: str = "futures",
        lifetime: int | None = None,
        max_price: int | None = None,
    ):
        self.market = market
        self.lifetime = lifetime
        self.max_price = max_price
        self.last_trade_price: int | None = None
        self._next_id = 1
        self._last_placed = 0
        # quantity per tick index, grown on demand
        self._bid_qty: list[int] = [0] * 1024
        self._ask_qty: list[int] = [0] * 1024
        self._bid_levels: dict[int, deque[Order]] = {}
        self._ask_levels: dict[int, deque[Order]] = {}
        self._bid_heap: list[int] = []  # negated prices
        self._ask_heap: list[int] = []
        self._bid_total = 0
        self._ask_total = 0
        self._orders: dict[int, Order] = {}
        self._fifo: deque[Order] = deque()
        # extreme prices mutated since reset_touch(); lets observers skip
        # work when nothing at or inside their reference quotes changed
        self.bid_touch = _NO_BID
        self.ask_touch = _NO_ASK

    # ------------------------------------------------------------------
    # order construction

    def new_order(
        self,
        side: str,
        kind: str,
        price: int | None,
        quantity: int,
        owner: int,
        placed_at: int,
    ) -> Order:
        order = Order(self._next_id, side, kind, price, quantity, owner, placed_at)
        self._next_id += 1
        return order

    def limit(self, side: str, price: int, owner: int, now: int, quantity: int = 1) -> list[Trade]:
        return self.submit(self.new_order(side, LIMIT, price, quantity, owner, now), now)

    def market_order(self, side: str, owner: int, now: int, quantity: int = 1) -> list[Trade]:
        return self.submit(self.new_order(side, MARKET, None, quantity, owner, now), now)

    # ------------------------------------------------------------------
    # queries

    def best_bid(self) -> int | None:
        heap = self._bid_heap
        qty = self._bid_qty
        while heap:
            p = -heap[0]
            if qty[p]:
                return p
            heapq.heappop(heap)
        return None

    def best_ask(self) -> int | None:
        heap = self._ask_heap
        qty = self._ask_qty
        while heap:
            p = heap[0]
            if qty[p]:
                return p
            heapq.heappop(heap)
        return None

    def mid(self) -> float | None:
        b = self.best_bid()
        a = self.best_ask()
        if b is None or a is None:
            return None
        return (b + a) / 2

    def quantity_at(self, side: str, price: int) -> int:
        arr = self._bid_qty if side == BUY else self._ask_qty
        if 0 <= price < len(arr):
            return arr[price]
        return 0

    def bid_profile(self, anchor: int, offsets: tuple[int, ...]) -> tuple[int, ...]:
        """Bid quantity exactly ``k`` ticks below ``anchor`` for each offset."""
        qty = self._bid_qty
        n = len(qty)
        return tuple(qty[anchor - k] if 0 <= anchor - k < n else 0 for k in offsets)

    def total_quantity(self, side: str) -> int:
        return self._bid_total if side == BUY else self._ask_total

    def depth_in_range(self, side: str, anchor: int | None, span_ticks: int) -> int | None:
        """Resting quantity within ``span_ticks`` of ``anchor``.

        Buy side sums bids in ``[anchor - span, anchor]``; sell side sums
        asks in ``[anchor, anchor + span]``. ``None`` when there is no anchor.
        """
        if anchor is None:
            return None
        if side == BUY:
            lo = max(anchor - span_ticks, 0)
            return sum(self._bid_qty[lo : anchor + 1])
        return sum(self._ask_qty[max(anchor, 0) : anchor + span_ticks + 1])

    def best_excluding(self, side: str, own: dict[int, int]) -> int | None:
        """Best price on ``side`` after removing the quantities in ``own``.

        ``own`` maps price -> quantity to disregard (an agent's own quotes).
        """
        total = self._bid_total if side == BUY else self._ask_total
        if total - sum(own.values()) <= 0:
            return None
        if side == BUY:
            p = self.best_bid()
            qty = self._bid_qty
            while p > 0 and qty[p] - own.get(p, 0) <= 0:
                p -= 1
            return p if p > 0 else None
        p = self.best_ask()
        qty = self._ask_qty
        n = len(qty)
        while p < n and qty[p] - own.get(p, 0) <= 0:
            p += 1
        return p if p < n else None

    def resting(self, side: str) -> list[Order]:
        """Live resting orders on one side in priority order."""
        levels = self._bid_levels if side == BUY else self._ask_levels
        prices = sorted(levels, reverse=(side == BUY))
        return [o for p in prices for o in levels[p] if o.live]

    def reset_touch(self) -> None:
        self.bid_touch = _NO_BID
        self.ask_touch = _NO_ASK

    def touched_inside(self, bid: int | None, ask: int | None) -> bool:
        """True if any bid at/above ``bid`` or ask at/below ``ask`` changed since reset."""
        if self.bid_touch >= (bid if bid is not None else 1):
            return True
        return self.ask_touch <= (ask if ask is not None else _NO_ASK)

    def get(self, order_id: int) -> Order | None:
        return self._orders.get(order_id)

    def __contains__(self, order_id: int) -> bool:
        return order_id in self._orders

    def __len__(self) -> int:
        return len(self._orders)

    def snapshot(self, span_ticks: int = 0) -> BookSnapshot:
        b = self.best_bid()
        a = self.best_ask()
        mid = (b + a) / 2 if b is not None and a is not None else None
        bid_depth: tuple[int, ...] = ()
        ask_depth: tuple[int, ...] = ()
        if span_ticks and b is not None:
            bid_depth = tuple(self.quantity_at(BUY, b - k) for k in range(span_ticks + 1))
        if span_ticks and a is not None:
            ask_depth = tuple(self.quantity_at(SELL, a + k) for k in range(span_ticks + 1))
        return BookSnapshot(b, a, mid, bid_depth, ask_depth)

    # ------------------------------------------------------------------
    # mutation

    def submit(self, order: Order, now: int | None = None) -> list[Trade]:
        """Match ``order`` against the opposite side, resting any limit remainder.

        Unfilled market-order quantity is discarded.
        """
        if now is None:
            now = order.placed_at
        if order.quantity < 1:
            raise RejectedOrder("quantity must be at least 1")
        if order.kind == LIMIT:
            if order.price is None or order.price < 1:
                raise RejectedOrder("limit order needs a positive tick price")
            if self.max_price is not None and order.price > self.max_price:
                raise RejectedOrder(f"price {order.price} above book ceiling {self.max_price}")
        elif order.kind == MARKET:
            if order.price is not None:
                raise RejectedOrder("market orders carry no price")
        else:
            raise RejectedOrder(f"unknown order kind {order.kind!r}")
        if order.side != BUY and order.side != SELL:
            raise RejectedOrder(f"unknown side {order.side!r}")
        if order.placed_at < self._last_placed:
            raise RejectedOrder("placed_at went backwards")
        self._last_placed = order.placed_at

        trades: list[Trade] = []
        limit = order.price
        is_market = order.kind == MARKET
        market = self.market
        if order.side == BUY:
            levels = self._ask_levels
            qty = self._ask_qty
            while order.remaining:
                best = self.best_ask()
                if best is None or (not is_market and best > limit):
                    break
                queue = levels[best]
                resting = queue[0]
                if not resting.live:
                    queue.popleft()
                    continue
                q = order.remaining if order.remaining < resting.remaining else resting.remaining
                trades.append(
                    Trade(now, market, best, q, order.owner, resting.owner, order.id, resting.id, SELL)
                )
                order.remaining -= q
                resting.remaining -= q
                qty[best] -= q
                self._ask_total -= q
                if best < self.ask_touch:
                    self.ask_touch = best
                if not resting.remaining:
                    resting.live = False
                    queue.popleft()
                    del self._orders[resting.id]
                if not qty[best]:
                    del levels[best]
        else:
            levels = self._bid_levels
            qty = self._bid_qty
            while order.remaining:
                best = self.best_bid()
                if best is None or (not is_market and best < limit):
                    break
                queue = levels[best]
                resting = queue[0]
                if not resting.live:
                    queue.popleft()
                    continue
                q = order.remaining if order.remaining < resting.remaining else resting.remaining
                trades.append(
                    Trade(now, market, best, q, resting.owner, order.owner, resting.id, order.id, BUY)
                )
                order.remaining -= q
                resting.remaining -= q
                qty[best] -= q
                self._bid_total -= q
                if best > self.bid_touch:
                    self.bid_touch = best
                if not resting.remaining:
                    resting.live = False
                    queue.popleft()
                    del self._orders[resting.id]
                if not qty[best]:
                    del levels[best]
        if trades:
            self.last_trade_price = trades[-1].price
        if order.remaining and not is_market:
            self._rest(order)
        return trades

    def _rest(self, order: Order) -> None:
        p = order.price
        if order.side == BUY:
            qty, levels, heap, sign = self._bid_qty, self._bid_levels, self._bid_heap, -1
        else:
            qty, levels, heap, sign = self._ask_qty, self._ask_levels, self._ask_heap, 1
        if p >= len(qty):
            qty.extend([0] * (p + 1 - len(qty) + len(qty)))
        if not qty[p]:
            heapq.heappush(heap, sign * p)
            levels[p] = deque()
        qty[p] += order.remaining
        levels[p].append(order)
        if order.side == BUY:
            self._bid_total += order.remaining
            if p > self.bid_touch:
                self.bid_touch = p
        else:
            self._ask_total += order.remaining
            if p < self.ask_touch:
                self.ask_touch = p
        order.live = True
        self._orders[order.id] = order
        self._fifo.append(order)

    def _remove(self, order: Order) -> None:
        order.live = False
        del self._orders[order.id]
        p = order.price
        if order.side == BUY:
            self._bid_qty[p] -= order.remaining
            self._bid_total -= order.remaining
            if p > self.bid_touch:
                self.bid_touch = p
            if not self._bid_qty[p]:
                del self._bid_levels[p]
        else:
            self._ask_qty[p] -= order.remaining
            self._ask_total -= order.remaining
            if p < self.ask_touch:
                self.ask_touch = p
            if not self._ask_qty[p]:
                del self._ask_levels[p]

    def cancel(self, order_id: int) -> bool:
        order = self._orders.get(order_id)
        if order is None:
            return False
        self._remove(order)
        return True

    def expire(self, now: int) -> int:
        """Drop resting orders older than the lifetime; returns how many."""
        if self.lifetime is None:
            return 0
        cutoff = now - self.lifetime
        fifo = self._fifo
        removed = 0
        while fifo:
            order = fifo[0]
            if not order.live:
                fifo.popleft()
                continue
            if order.placed_at >= cutoff:
                break
            fifo.popleft()
            self._remove(order)
            removed += 1
        return removed
