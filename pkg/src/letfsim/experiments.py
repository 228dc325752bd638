"""Paired-seed ensembles: scenario tables and S_0 sweeps.

Trial ``i`` always uses seed ``base_seed + i``, in every arm, so arms are
compared on the same random-number tables.
"""

from __future__ import annotations

import os
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .agents import FUTURES, LETF
from .metrics import EnsembleStats, LiquidityReport, cell_stat, ensemble_stats
from .simulation import SimConfig, run

WORKERS_ENV = "LETFSIM_WORKERS"


def worker_count(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, requested)
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def trial_seeds(base_seed: int, trials: int) -> list[int]:
    return [base_seed + i for i in range(trials)]


def _run_report(config: SimConfig) -> LiquidityReport:
    return run(config).report


def run_reports(configs: Sequence[SimConfig], workers: int | None = None) -> list[LiquidityReport]:
    """Run each config; results come back in input order."""
    n = worker_count(workers)
    if n == 1 or len(configs) <= 1:
        return [_run_report(c) for c in configs]
    with ProcessPoolExecutor(max_workers=min(n, len(configs))) as pool:
        return list(pool.map(_run_report, configs))


@dataclass
class ScenarioTable:
    """Both arbitrage arms of one misorder scenario."""

    base: SimConfig
    seeds: tuple[int, ...]
    no_arbitrage: EnsembleStats
    arbitrage: EnsembleStats
    reports: dict[bool, list[LiquidityReport]]

    def arm(self, arbitrage: bool) -> EnsembleStats:
        return self.arbitrage if arbitrage else self.no_arbitrage


def scenario_table(base: SimConfig, trials: int, workers: int | None = None) -> ScenarioTable:
    seeds = trial_seeds(base.seed, trials)
    configs = [base.replace(seed=s, arbitrage=arb) for arb in (False, True) for s in seeds]
    reports = run_reports(configs, workers)
    off, on = reports[:trials], reports[trials:]
    return ScenarioTable(
        base,
        tuple(seeds),
        ensemble_stats(off, seeds),
        ensemble_stats(on, seeds),
        {False: off, True: on},
    )


@dataclass(frozen=True)
class SweepRow:
    arbitrage: bool
    s0: int
    decline_amount: float | None
    decline_std: float | None
    decline_letf: float | None
    decline_futures: float | None
    rebalance_sell_volume: float | None
    runs: int
    disrupted: int

    @property
    def status(self) -> str:
        return "DISRUPTED" if self.runs == 0 else "ok"


def crash_market(config: SimConfig) -> str:
    return FUTURES if config.misorder == FUTURES else LETF


def s0_sweep(
    base: SimConfig,
    s0_list: Iterable[int],
    trials: int,
    arms: Sequence[bool] = (False, True),
    workers: int | None = None,
) -> list[SweepRow]:
    """Mean decline and rebalance selling per (arm, S_0) over paired seeds."""
    s0_list = list(s0_list)
    seeds = trial_seeds(base.seed, trials)
    cells = [(arb, s0) for arb in arms for s0 in s0_list]
    configs = [base.replace(seed=s, arbitrage=arb, s0=s0) for arb, s0 in cells for s in seeds]
    reports = run_reports(configs, workers)
    target = crash_market(base)
    rows = []
    for i, (arb, s0) in enumerate(cells):
        chunk = reports[i * trials : (i + 1) * trials]
        ok = [r for r in chunk if not r.disrupted]
        bad = len(chunk) - len(ok)
        decline = cell_stat([r[target].decline_amount for r in ok], bad)
        rows.append(
            SweepRow(
                arb,
                s0,
                decline.mean,
                decline.std,
                cell_stat([r[LETF].decline_amount for r in ok]).mean,
                cell_stat([r[FUTURES].decline_amount for r in ok]).mean,
                cell_stat([r.rebalance_sell_volume for r in ok]).mean,
                len(ok),
                bad,
            )
        )
    return rows
