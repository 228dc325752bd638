"""CSV artifacts. Every file has a header row; numbers are plain decimals."""

from __future__ import annotations

import csv
from collections.abc import Iterable, Sequence
from pathlib import Path

from .agents import FUTURES, LETF, MARKETS
from .experiments import ScenarioTable, SweepRow
from .matching import Trade
from .metrics import TICK_OFFSETS, CellStat, LiquidityReport, LiquiditySample
from .simulation import EventLog

SAMPLE_COLUMNS = ("time", "market", "best_bid", "best_ask", "tightness", "sell_depth", "buy_depth")
TRADE_COLUMNS = ("time", "market", "price", "quantity", "buyer", "seller")
REPORT_COLUMNS = (
    "seed",
    "market",
    "volume",
    "sell_depth",
    "buy_depth",
    "tightness",
    "best_bid",
    "best_ask",
    "min_mid",
    "decline_amount",
    "rebalance_sell_volume",
    "disrupted",
    "steps",
)
TABLE_METRICS = (
    ("Volume", "volume"),
    ("SellDepth", "sell_depth"),
    ("BuyDepth", "buy_depth"),
    ("Tightness", "tightness"),
)
BEST_METRICS = (("bestsell", "best_ask"), ("bestbuy", "best_bid"))
ARMS = ((False, "no_arb"), (True, "arb"))
DISRUPTED = "DISRUPTED"


def fmt(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".6f")
    return str(value)


def _write(path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def write_samples(path: Path, samples: Iterable[LiquiditySample], tick_size: float = 1) -> Path:
    def tight(s: LiquiditySample):
        return s.tightness * tick_size if s.tightness is not None else None

    rows = (
        (s.time, s.market, s.best_bid, s.best_ask, tight(s), s.sell_depth, s.buy_depth)
        for s in samples
    )
    return _write(path, SAMPLE_COLUMNS, rows)


def write_trades(path: Path, trades: Iterable[Trade], tick_size: float = 1) -> Path:
    rows = (
        (tr.time, tr.market, tr.price * tick_size, tr.quantity, tr.buyer, tr.seller)
        for tr in trades
    )
    return _write(path, TRADE_COLUMNS, rows)


def write_events(path: Path, events: EventLog) -> Path:
    return _write(path, EventLog.COLUMNS, events.records)


def write_run_report(path: Path, report: LiquidityReport) -> Path:
    rows = []
    for m in MARKETS:
        r = report[m]
        rows.append(
            (
                report.seed,
                m,
                r.volume,
                r.sell_depth,
                r.buy_depth,
                r.tightness,
                r.best_bid,
                r.best_ask,
                r.min_mid,
                r.decline_amount,
                report.rebalance_sell_volume,
                report.disrupted,
                report.steps,
            )
        )
    return _write(path, REPORT_COLUMNS, rows)


def _cell(stat: CellStat, attr: str = "mean") -> object:
    return DISRUPTED if stat.is_disrupted else getattr(stat, attr)


def _metric_rows(table: ScenarioTable, metrics) -> list[list[object]]:
    rows = []
    for label, key in metrics:
        row: list[object] = [label]
        for attr in ("mean", "std"):
            for arb, _ in ARMS:
                stats = table.arm(arb)
                for m in (LETF, FUTURES):
                    row.append(_cell(stats[(m, key)], attr))
        row += [len(table.seeds), table.seeds[0], table.seeds[-1]]
        rows.append(row)
    return rows


def _arm_columns() -> list[str]:
    cols = []
    for suffix in ("", "_std"):
        for _, arm in ARMS:
            for m in (LETF, FUTURES):
                cols.append(f"{arm}_{m}{suffix}")
    return cols


def write_table(path: Path, table: ScenarioTable) -> Path:
    """Volume/SellDepth/BuyDepth/Tightness x {no arb, arb} x {letf, futures}."""
    header = ["metric", *_arm_columns(), "trials", "seed_first", "seed_last"]
    return _write(path, header, _metric_rows(table, TABLE_METRICS))


def write_best_prices(path: Path, table: ScenarioTable) -> Path:
    header = ["metric", *_arm_columns(), "trials", "seed_first", "seed_last"]
    return _write(path, header, _metric_rows(table, BEST_METRICS))


def write_tick_profile(path: Path, table: ScenarioTable, letf_span: int = 50) -> Path:
    """Mean bid quantity at fixed tick offsets below the best bid."""
    header = ["offset_ticks", *_arm_columns()[:4]]
    rows = []
    for i, k in enumerate(TICK_OFFSETS):
        row: list[object] = [k]
        for arb, _ in ARMS:
            stats = table.arm(arb)
            for m in (LETF, FUTURES):
                if m == LETF and k > letf_span:
                    row.append(None)
                else:
                    row.append(_cell(stats.tick_profiles[m][i]))
        rows.append(row)
    return _write(path, header, rows)


def write_sweep(path: Path, rows: Sequence[SweepRow], base_seed: int, trials: int) -> Path:
    header = (
        "arbitrage",
        "s0",
        "decline_amount",
        "decline_std",
        "decline_letf",
        "decline_futures",
        "rebalance_sell_volume",
        "runs",
        "disrupted",
        "status",
        "trials",
        "seed_first",
    )
    out = []
    for r in rows:
        bad = r.runs == 0
        out.append(
            (
                "on" if r.arbitrage else "off",
                r.s0,
                DISRUPTED if bad else r.decline_amount,
                r.decline_std,
                r.decline_letf,
                r.decline_futures,
                r.rebalance_sell_volume,
                r.runs,
                r.disrupted,
                r.status,
                trials,
                base_seed,
            )
        )
    return _write(path, header, out)
