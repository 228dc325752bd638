"""Liquidity indicators: Volume, SellDepth, BuyDepth and Tightness.

Both depth windows are anchored at the best bid: BuyDepth counts bids in
``[bid - span, bid]`` and SellDepth counts asks in ``[bid, bid + span]``.
When prices fall fast the SellDepth window slides under the ask side and
the measure drops, which is the effect the indicator is meant to expose.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

from .matching import BUY, SELL, OrderBook, Trade

TICK_OFFSETS = (0, 1, 10, 20, 30, 40, 50, 100)
FIELDS = ("best_bid", "best_ask", "tightness", "sell_depth", "buy_depth")


@dataclass(slots=True, frozen=True)
class LiquiditySample:
    time: int
    market: str
    best_bid: float | None
    best_ask: float | None
    tightness: int | None
    sell_depth: int | None
    buy_depth: int | None
    tick_profile: tuple[int, ...] | None
    mid: float | None = None


def sample(
    book: OrderBook,
    t: int,
    span_ticks: int,
    tick_size: float = 1,
    mid: float | None = None,
) -> LiquiditySample:
    """Measure one book. ``mid`` is the price agents see (with fallbacks)."""
    b = book.best_bid()
    a = book.best_ask()
    tightness = a - b if a is not None and b is not None else None
    if b is None:
        buy_depth = sell_depth = None
        profile = None
    else:
        buy_depth = book.depth_in_range(BUY, b, span_ticks)
        sell_depth = book.depth_in_range(SELL, b, span_ticks) if a is not None else None
        profile = book.bid_profile(b, TICK_OFFSETS)
    return LiquiditySample(
        t,
        book.market,
        b * tick_size if b is not None else None,
        a * tick_size if a is not None else None,
        tightness,
        sell_depth,
        buy_depth,
        profile,
        mid,
    )


def volume(trades: Iterable[Trade], window: tuple[int, int], market: str | None = None) -> int:
    """Number of trades with ``t_ms <= time <= t_me``."""
    lo, hi = window
    return sum(
        1 for tr in trades if lo <= tr.time <= hi and (market is None or tr.market == market)
    )


@dataclass(slots=True)
class MarketReport:
    market: str
    volume: int = 0
    sell_depth: float | None = None
    buy_depth: float | None = None
    tightness: float | None = None
    best_bid: float | None = None
    best_ask: float | None = None
    tick_profile: tuple[float, ...] | None = None
    min_mid: float | None = None
    decline_amount: float | None = None


@dataclass(slots=True)
class LiquidityReport:
    markets: dict[str, MarketReport]
    rebalance_sell_volume: int = 0
    rebalance_buy_volume: int = 0
    disrupted: bool = False
    steps: int = 0
    seed: int | None = None
    extras: dict[str, float] = field(default_factory=dict)

    def __getitem__(self, market: str) -> MarketReport:
        return self.markets[market]


class WindowAccumulator:
    """Streaming means over in-window samples plus the run-wide mid minimum.

    Missing fields are skipped, so each field carries its own count.
    """

    def __init__(self, market: str):
        self.market = market
        self.sums = dict.fromkeys(FIELDS, 0.0)
        self.counts = dict.fromkeys(FIELDS, 0)
        self.profile_sum = [0] * len(TICK_OFFSETS)
        self.profile_count = 0
        self.min_mid = math.inf

    def observe_mid(self, mid: float | None) -> None:
        if mid is not None and mid < self.min_mid:
            self.min_mid = mid

    def add(self, s: LiquiditySample) -> None:
        sums, counts = self.sums, self.counts
        for name, v in zip(FIELDS, (s.best_bid, s.best_ask, s.tightness, s.sell_depth, s.buy_depth)):
            if v is not None:
                sums[name] += v
                counts[name] += 1
        if s.tick_profile is not None:
            self.profile_sum = [a + b for a, b in zip(self.profile_sum, s.tick_profile)]
            self.profile_count += 1

    def report(self, volume: int, p_f: float) -> MarketReport:
        means = {
            name: (self.sums[name] / self.counts[name] if self.counts[name] else None)
            for name in FIELDS
        }
        profile = (
            tuple(q / self.profile_count for q in self.profile_sum)
            if self.profile_count
            else None
        )
        min_mid = self.min_mid if self.min_mid < math.inf else None
        return MarketReport(
            market=self.market,
            volume=volume,
            sell_depth=means["sell_depth"],
            buy_depth=means["buy_depth"],
            tightness=means["tightness"],
            best_bid=means["best_bid"],
            best_ask=means["best_ask"],
            tick_profile=profile,
            min_mid=min_mid,
            decline_amount=(p_f - min_mid) if min_mid is not None else None,
        )


def aggregate(
    samples: Iterable[LiquiditySample],
    trades: Iterable[Trade],
    window: tuple[int, int],
    fundamentals: dict[str, float],
    rebalance_sell_volume: int = 0,
) -> LiquidityReport:
    """Window averages per market from a full run's per-step samples.

    ``decline_amount`` uses the minimum ``mid`` over every sample given,
    not only the window.
    """
    lo, hi = window
    accs = {m: WindowAccumulator(m) for m in fundamentals}
    for s in samples:
        acc = accs[s.market]
        acc.observe_mid(s.mid)
        if lo <= s.time <= hi:
            acc.add(s)
    trades = list(trades)
    markets = {
        m: acc.report(volume(trades, window, m), fundamentals[m]) for m, acc in accs.items()
    }
    return LiquidityReport(markets, rebalance_sell_volume=rebalance_sell_volume)


# ---------------------------------------------------------------------------
# ensemble statistics


@dataclass(slots=True, frozen=True)
class CellStat:
    mean: float | None
    std: float | None
    runs: int
    disrupted: int

    @property
    def is_disrupted(self) -> bool:
        return self.runs == 0


def cell_stat(values: Sequence[float | None], disrupted: int = 0) -> CellStat:
    """Mean and population std over the non-missing values."""
    xs = [v for v in values if v is not None]
    if not xs:
        return CellStat(None, None, 0, disrupted)
    n = len(xs)
    mean = math.fsum(xs) / n
    std = math.sqrt(math.fsum((x - mean) ** 2 for x in xs) / n)
    return CellStat(mean, std, n, disrupted)


REPORT_METRICS = (
    "volume",
    "sell_depth",
    "buy_depth",
    "tightness",
    "best_bid",
    "best_ask",
    "decline_amount",
)


@dataclass(slots=True)
class EnsembleStats:
    """Per (market, metric) statistics over one scenario's trials."""

    cells: dict[tuple[str, str], CellStat]
    tick_profiles: dict[str, tuple[CellStat, ...]]
    rebalance_sell_volume: CellStat
    trials: int
    disrupted: int
    seeds: tuple[int, ...] = ()

    def mean(self, market: str, metric: str) -> float | None:
        return self.cells[(market, metric)].mean

    def __getitem__(self, key: tuple[str, str]) -> CellStat:
        return self.cells[key]


def ensemble_stats(reports: Sequence[LiquidityReport], seeds: Sequence[int] = ()) -> EnsembleStats:
    """Summarise a scenario's trials; disrupted runs are left out of the means."""
    ok = [r for r in reports if not r.disrupted]
    n_bad = len(reports) - len(ok)
    markets = list(reports[0].markets) if reports else []
    cells = {
        (m, metric): cell_stat([getattr(r[m], metric) for r in ok], n_bad)
        for m in markets
        for metric in REPORT_METRICS
    }
    profiles = {}
    for m in markets:
        rows = [r[m].tick_profile for r in ok]
        profiles[m] = tuple(
            cell_stat([row[i] if row is not None else None for row in rows], n_bad)
            for i in range(len(TICK_OFFSETS))
        )
    reb = cell_stat([r.rebalance_sell_volume for r in ok], n_bad)
    return EnsembleStats(cells, profiles, reb, len(reports), n_bad, tuple(seeds))
