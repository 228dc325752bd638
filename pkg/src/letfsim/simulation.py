"""Two-market scheduler: futures and leveraged-ETF books coupled by arbitrage.

Each step ``t`` runs, in order: expiry on both books, the normal-agent
action(s) (each followed by an arbitrage activation), the leveraged-ETF
rebalance check, then liquidity sampling.

Random draws come from per-agent ``random.Random`` streams seeded from
``(seed, market, agent index)`` plus one activation stream per market.
Every activation consumes the same four draws whether or not the agent
ends up placing an order, so two scenarios sharing a seed see the same
draw sequence for each agent.
"""

from __future__ import annotations

import dataclasses
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

from .agents import (
    ARBITRAGE_ID,
    FUTURES,
    LETF,
    LETF_AGENT_ID,
    MARKETS,
    ArbitrageAgent,
    LetfAgentState,
    NormalAgentState,
    formation_order,
    letf_target_position,
    normal_expected_return,
    normal_order,
    rebalance_quantity,
)
from .matching import BUY, LIMIT, MARKET, SELL, Order, OrderBook, RejectedOrder, Trade
from .metrics import LiquidityReport, LiquiditySample, WindowAccumulator, sample

MISORDER_CHOICES = ("none", "letf", "futures")
ACTIVATION_CHOICES = ("per_market", "pooled")
# limit prices above this multiple of P_f are rejected (bounds book memory)
PRICE_CEILING = 100


class ConfigError(ValueError):
    """Invalid simulation configuration; message names the offending field."""


@dataclass(frozen=True)
class SimConfig:
    n: int = 1000
    w1_max: float = 1.0
    w2_max: float = 10.0
    w3_max: float = 1.0
    tau_max: int = 10000
    sigma_eps: float = 0.03
    p_d: float = 0.1  # order-price half width as a fraction of the market's P_f
    t_c: int = 20000
    delta_p: float = 1.0
    p_ff: float = 10000.0
    t_ms: int = 30000
    t_me: int = 60000
    s0: int = 10000
    p_m: float = 0.2
    r_l: float = 0.2
    leverage: float = 2.0
    t_r: int = 10
    w_r: float = 0.01
    t_e: int = 100000
    seed: int = 1
    arbitrage: bool = True
    rebalance: bool = True
    misorder: str = "letf"
    activation: str = "per_market"
    depth_ticks_futures: int = 100
    depth_ticks_letf: int = 50

    @property
    def p_fl(self) -> float:
        return self.p_ff / self.leverage

    def fundamental(self, market: str) -> float:
        return self.p_ff if market == FUTURES else self.p_fl

    def depth_span(self, market: str) -> int:
        return self.depth_ticks_futures if market == FUTURES else self.depth_ticks_letf

    @property
    def window(self) -> tuple[int, int]:
        return (self.t_ms, self.t_me)

    def replace(self, **changes) -> SimConfig:
        return dataclasses.replace(self, **changes)

    def validate(self) -> SimConfig:
        def bad(name: str, why: str) -> ConfigError:
            return ConfigError(f"{name}: {why} (got {getattr(self, name)!r})")

        for name in ("n", "tau_max", "t_r", "t_e"):
            if getattr(self, name) < 1:
                raise bad(name, "must be >= 1")
        for name in ("t_c", "t_ms", "s0"):
            if getattr(self, name) < 0:
                raise bad(name, "must be >= 0")
        for name in ("w1_max", "w2_max", "w3_max", "sigma_eps"):
            if getattr(self, name) < 0:
                raise bad(name, "must be >= 0")
        if self.w1_max + self.w2_max + self.w3_max <= 0:
            raise bad("w1_max", "weight maxima must not all be zero")
        for name in ("p_d", "delta_p", "p_ff"):
            if not getattr(self, name) > 0:
                raise bad(name, "must be > 0")
        for name in ("p_m", "r_l"):
            if not 0 <= getattr(self, name) <= 1:
                raise bad(name, "must lie in [0, 1]")
        if not 0 < self.w_r < 1:
            raise bad("w_r", "must lie in (0, 1)")
        if not self.leverage > 1:
            raise bad("leverage", "must be > 1")
        if self.misorder not in MISORDER_CHOICES:
            raise bad("misorder", f"must be one of {MISORDER_CHOICES}")
        if self.activation not in ACTIVATION_CHOICES:
            raise bad("activation", f"must be one of {ACTIVATION_CHOICES}")
        if not self.t_ms < self.t_me:
            raise bad("t_me", "must exceed t_ms")
        if self.misorder != "none":
            if self.t_me > self.t_e:
                raise bad("t_me", "misorder window must end by t_e")
            if not self.t_c < self.t_ms:
                raise bad("t_ms", "misorder window must start after formation (t_c)")
        return self


# ---------------------------------------------------------------------------
# flat key=value config files

_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(SimConfig)}
_ALIASES = {
    "misorder_market": "misorder",
    "arbitrage_enabled": "arbitrage",
    "rebalance_enabled": "rebalance",
    "p_ff": "p_ff",
    "r_letf": "r_l",
    "l": "leverage",
}
_TRUE = {"1", "true", "on", "yes"}
_FALSE = {"0", "false", "off", "no"}


def coerce(key: str, raw: str) -> tuple[str, object]:
    """Parse one ``key=value`` pair into a SimConfig field and typed value."""
    name = _ALIASES.get(key.strip().lower(), key.strip().lower())
    if name not in _FIELD_TYPES:
        raise ConfigError(f"{key}: unknown parameter")
    kind = _FIELD_TYPES[name]
    text = raw.strip()
    try:
        if kind == "bool":
            low = text.lower()
            if low in _TRUE:
                return name, True
            if low in _FALSE:
                return name, False
            raise ValueError(text)
        if kind == "int":
            value = float(text)
            if value != int(value):
                raise ValueError(text)
            return name, int(value)
        if kind == "float":
            if text.endswith("%"):
                return name, float(text[:-1]) / 100
            return name, float(text)
        return name, text.lower()
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r} as {kind}") from None


def parse_config_text(text: str) -> dict[str, object]:
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, raw = line.split("=", 1)
        elif ":" in line:
            key, raw = line.split(":", 1)
        else:
            raise ConfigError(f"line {lineno}: expected key=value")
        name, value = coerce(key, raw)
        values[name] = value
    return values


def load_config(path: str | Path | None = None, overrides: dict[str, object] | None = None) -> SimConfig:
    """Defaults, then file values, then overrides; validated."""
    values: dict[str, object] = {}
    if path is not None:
        values.update(parse_config_text(Path(path).read_text(encoding="utf-8")))
    if overrides:
        values.update(overrides)
    return SimConfig(**values).validate()


def dump_config(config: SimConfig) -> str:
    lines = []
    for f in dataclasses.fields(config):
        v = getattr(config, f.name)
        if isinstance(v, bool):
            v = "on" if v else "off"
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# world state


@dataclass
class EventLog:
    """Chronological record of orders, trades, cancellations and activations."""

    records: list[tuple] = field(default_factory=list)
    enabled: bool = True

    COLUMNS = ("time", "event", "market", "owner", "side", "kind", "price", "quantity", "ref", "other")

    def add(self, *row) -> None:
        if self.enabled:
            self.records.append(row)

    def __len__(self) -> int:
        return len(self.records)


@dataclass
class RunResult:
    config: SimConfig
    report: LiquidityReport
    events: EventLog
    samples: list[LiquiditySample] | None
    world: World

    @property
    def disrupted(self) -> bool:
        return self.report.disrupted


class World:
    """Mutable state of one run. Implements the arbitrageur's venue protocol."""

    def __init__(self, config: SimConfig, record_events: bool = False, record_samples: bool = False):
        config.validate()
        self.config = config
        self.t = 0
        self.books = {
            m: OrderBook(
                m,
                lifetime=config.t_c,
                max_price=int(PRICE_CEILING * config.fundamental(m) / config.delta_p),
            )
            for m in MARKETS
        }
        self.trades: dict[str, list[Trade]] = {m: [] for m in MARKETS}
        self.mids: dict[str, list[float]] = {m: [config.fundamental(m)] for m in MARKETS}
        self.events = EventLog(enabled=record_events)
        self.samples: list[LiquiditySample] | None = [] if record_samples else None
        self.acc = {m: WindowAccumulator(m) for m in MARKETS}
        for m in MARKETS:
            self.acc[m].observe_mid(config.fundamental(m))
        self.disrupted = False
        self.disruption_reason = ""
        self.misorders = {m: 0 for m in MARKETS}
        self.activations = {m: [0] * config.n for m in MARKETS}
        self.arb = ArbitrageAgent(config.p_ff, config.leverage, config.delta_p)
        self.letf_agent = LetfAgentState(config.s0, config.s0)

        seed = config.seed
        self.agents = {
            m: [
                NormalAgentState.draw(
                    m,
                    random.Random(f"{seed}:agent:{m}:{j}"),
                    config.w1_max,
                    config.w2_max,
                    config.w3_max,
                    config.tau_max,
                )
                for j in range(config.n)
            ]
            for m in MARKETS
        }
        self.activation_rng = {m: random.Random(f"{seed}:activation:{m}") for m in MARKETS}
        self.pooled_rng = random.Random(f"{seed}:activation:pooled")

    # -- venue protocol ------------------------------------------------

    def _dispatch(self, trades: list[Trade]) -> None:
        if not trades:
            return
        self.trades[trades[0].market].extend(trades)
        arb = self.arb
        letf_agent = self.letf_agent
        log = self.events
        for tr in trades:
            if tr.buyer == ARBITRAGE_ID or tr.seller == ARBITRAGE_ID:
                arb.on_trade(tr)
            if tr.buyer == LETF_AGENT_ID or tr.seller == LETF_AGENT_ID:
                letf_agent.on_trade(tr)
            if log.enabled:
                log.add(tr.time, "trade", tr.market, tr.buyer, tr.maker_side, "", tr.price,
                        tr.quantity, tr.buy_order, tr.sell_order)

    def _submit(self, market: str, side: str, kind: str, price: int | None, owner: int) -> tuple[Order, list[Trade]]:
        book = self.books[market]
        order = book.new_order(side, kind, price, 1, owner, self.t)
        self.events.add(self.t, "order", market, owner, side, kind, price, 1, order.id, "")
        trades = book.submit(order, self.t)
        self._dispatch(trades)
        return order, trades

    def place_limit(self, market: str, side: str, price: int, owner: int) -> Order:
        return self._submit(market, side, LIMIT, price, owner)[0]

    def place_market(self, market: str, side: str, owner: int) -> list[Trade]:
        return self._submit(market, side, MARKET, None, owner)[1]

    def cancel(self, market: str, order_id: int, owner: int) -> bool:
        ok = self.books[market].cancel(order_id)
        if ok:
            self.events.add(self.t, "cancel", market, owner, "", "", "", "", order_id, "")
        return ok

    # -- prices ----------------------------------------------------------

    def current_mid(self, market: str) -> float:
        """Mid in currency; falls back to last trade, then the fundamental price."""
        book = self.books[market]
        mid = book.mid()
        if mid is not None:
            return mid * self.config.delta_p
        if book.last_trade_price is not None:
            return book.last_trade_price * self.config.delta_p
        return self.config.fundamental(market)

    # -- step phases -----------------------------------------------------

    def in_formation(self) -> bool:
        return self.t <= self.config.t_c

    def normal_action(self, market: str, j: int) -> None:
        cfg = self.config
        t = self.t
        agent = self.agents[market][j]
        self.activations[market][j] += 1
        rng = agent.rng
        u_rl = rng.random()
        u_mis = rng.random()
        eps = rng.gauss(0.0, cfg.sigma_eps)
        u = rng.random()
        if market == LETF and u_rl >= cfg.r_l:
            return
        if cfg.misorder == market and cfg.t_ms <= t <= cfg.t_me and u_mis < cfg.p_m:
            self.misorders[market] += 1
            self.events.add(t, "misorder", market, self.owner_id(market, j), SELL, MARKET, "", 1, "", "")
            self.place_market(market, SELL, self.owner_id(market, j))
            return
        p_f = cfg.fundamental(market)
        hist = self.mids[market]
        lag_index = t - 1 - agent.tau
        mid_lagged = hist[lag_index] if lag_index >= 0 else p_f
        p_d = cfg.p_d * p_f
        try:
            if t <= cfg.t_c:
                r_e = normal_expected_return(agent, p_f, p_f, mid_lagged, eps)
                side, price = formation_order(p_f, r_e, p_d, u, cfg.delta_p)
            else:
                mid_prev = hist[t - 1]
                r_e = normal_expected_return(agent, p_f, mid_prev, mid_lagged, eps)
                side, price = normal_order(mid_prev, r_e, p_d, u, cfg.delta_p)
            if price > self.books[market].max_price:
                raise RejectedOrder("above price ceiling")
        except RejectedOrder:
            self.events.add(t, "reject", market, self.owner_id(market, j), "", LIMIT, "", 1, "", "")
            return
        self._submit(market, side, LIMIT, price, self.owner_id(market, j))

    def owner_id(self, market: str, j: int) -> int:
        return j if market == FUTURES else self.config.n + j

    def arbitrage_phase(self) -> None:
        if self.config.arbitrage and not self.in_formation():
            self.arb.activate(self)

    def rebalance_phase(self) -> None:
        cfg = self.config
        t = self.t
        if not cfg.rebalance or not cfg.s0 or self.in_formation() or t % cfg.t_r:
            return
        agent = self.letf_agent
        target = letf_target_position(cfg.s0, cfg.leverage, cfg.p_ff, self.current_mid(FUTURES))
        k = rebalance_quantity(agent.held, target, cfg.w_r)
        if k is None:
            self._disrupt("rebalance target is not positive")
            return
        if not k:
            return
        side = BUY if k > 0 else SELL
        self.events.add(t, "rebalance", FUTURES, LETF_AGENT_ID, side, MARKET, "", abs(k), "", "")
        books = self.books
        for i in range(abs(k)):
            if not self.place_market(FUTURES, side, LETF_AGENT_ID):
                self._disrupt("futures book exhausted by rebalancing")
                return
            self.arbitrage_phase()
            if i + 1 < abs(k) and any(
                not books[m].total_quantity(s) for m in MARKETS for s in (BUY, SELL)
            ):
                self._disrupt("book side exhausted while rebalancing demand remains")
                return

    def _disrupt(self, reason: str) -> None:
        self.disrupted = True
        self.disruption_reason = reason
        self.events.add(self.t, "disrupted", "", "", "", "", "", "", "", reason)

    def sample_phase(self) -> None:
        cfg = self.config
        t = self.t
        in_window = cfg.t_ms <= t <= cfg.t_me
        for m in MARKETS:
            mid = self.current_mid(m)
            self.mids[m].append(mid)
            acc = self.acc[m]
            acc.observe_mid(mid)
            if in_window or self.samples is not None:
                s = sample(self.books[m], t, cfg.depth_span(m), cfg.delta_p, mid)
                if in_window:
                    acc.add(s)
                if self.samples is not None:
                    self.samples.append(s)

    def step(self) -> None:
        """Advance one time step."""
        cfg = self.config
        self.t += 1
        t = self.t
        for book in self.books.values():
            book.expire(t)
        if cfg.activation == "per_market":
            self.normal_action(FUTURES, self.activation_rng[FUTURES].randrange(cfg.n))
            self.arbitrage_phase()
            self.normal_action(LETF, self.activation_rng[LETF].randrange(cfg.n))
            self.arbitrage_phase()
        else:
            k = self.pooled_rng.randrange(2 * cfg.n)
            market = FUTURES if k < cfg.n else LETF
            self.normal_action(market, k % cfg.n)
            self.arbitrage_phase()
        self.rebalance_phase()
        self.sample_phase()

    # -- results ---------------------------------------------------------

    def parity_gap(self) -> float | None:
        """Mean |P_L - (P_F - offset)| in ticks over post-formation steps."""
        cfg = self.config
        start = cfg.t_c + 1
        f = self.mids[FUTURES][start:]
        letf = self.mids[LETF][start:]
        if not f:
            return None
        offset = self.arb.offset * cfg.delta_p
        gap = math.fsum(abs(pl - (pf - offset)) for pf, pl in zip(f, letf))
        return gap / len(f) / cfg.delta_p

    def report(self) -> LiquidityReport:
        cfg = self.config
        lo, hi = cfg.window
        markets = {}
        for m in MARKETS:
            vol = sum(1 for tr in self.trades[m] if lo <= tr.time <= hi)
            markets[m] = self.acc[m].report(vol, cfg.fundamental(m))
        return LiquidityReport(
            markets,
            rebalance_sell_volume=self.letf_agent.sold,
            rebalance_buy_volume=self.letf_agent.bought,
            disrupted=self.disrupted,
            steps=self.t,
            seed=cfg.seed,
            extras={
                "arb_instant_pairs": self.arb.instant_pairs,
                "arb_unhedged": self.arb.unhedged,
                "misorders_futures": self.misorders[FUTURES],
                "misorders_letf": self.misorders[LETF],
                "letf_held": self.letf_agent.held,
                "parity_gap": self.parity_gap(),
            },
        )


def run(
    config: SimConfig,
    record_events: bool = False,
    record_samples: bool = False,
    halt_on_disruption: bool = True,
) -> RunResult:
    """Run ``config`` for ``t_e`` steps or until the market is disrupted."""
    world = World(config, record_events=record_events, record_samples=record_samples)
    t_e = config.t_e
    step = world.step
    while world.t < t_e:
        step()
        if world.disrupted and halt_on_disruption:
            break
    return RunResult(config, world.report(), world.events, world.samples, world)
