"""Acceptance criteria, one test each, printing a PASS/FAIL line per criterion.

The ensemble criteria run full-size simulations (30 paired seeds per arm)
and take several minutes on one core. Set LETFSIM_WORKERS to spread them
across processes.
"""

import math
import random

import pytest

from letfsim import FUTURES, LETF, SimConfig
from letfsim.agents import (
    ArbitrageAgent,
    NormalAgentState,
    letf_target_position,
    normal_expected_return,
)
from letfsim.cli import main
from letfsim.experiments import run_reports, s0_sweep, scenario_table, trial_seeds
from letfsim.matching import BUY, LIMIT, MARKET, SELL, OrderBook
from letfsim.simulation import run

from bare_venue import random_venue
from conftest import ACCEPTANCE_LINES, replay
from reference_matcher import random_stream

pytestmark = pytest.mark.slow

TRIALS = 30
BASE_SEED = 1
S0_LIST = (0, 2000, 5000, 10000, 20000, 50000)
PROPERTY_CASES = 1000

# Published ensemble means, used only for the order-of-magnitude check.
# (metric, market) -> (arbitrage off, arbitrage on)
LETF_CRASH_REFERENCE = {
    ("volume", LETF): (1370.433, 1336.933),
    ("volume", FUTURES): (361.500, 1384.333),
    ("sell_depth", LETF): (33.649, 60.970),
    ("sell_depth", FUTURES): (856.261, 560.027),
    ("buy_depth", LETF): (164.257, 162.713),
    ("buy_depth", FUTURES): (855.100, 934.415),
    ("tightness", LETF): (18.686, 10.974),
    ("tightness", FUTURES): (9.379, 10.934),
}


def record(number, title, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}"
    if detail:
        line += f" | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def rel_change(before, after):
    return abs(after - before) / abs(before)


# -- shared ensembles -------------------------------------------------------


@pytest.fixture(scope="module")
def letf_table():
    return scenario_table(SimConfig(misorder="letf", seed=BASE_SEED), TRIALS)


@pytest.fixture(scope="module")
def futures_table():
    return scenario_table(SimConfig(misorder="futures", seed=BASE_SEED), TRIALS)


def means(table, metric, market):
    return table.no_arbitrage.mean(market, metric), table.arbitrage.mean(market, metric)


# -- 1 ----------------------------------------------------------------------


def test_criterion_1_arbitrage_keeps_parity():
    seeds = trial_seeds(BASE_SEED, TRIALS)
    reports = run_reports([SimConfig(misorder="none", seed=s) for s in seeds])
    gaps = [r.extras["parity_gap"] for r in reports]
    record(
        1,
        "post-formation mean |P_L - (P_F - 5000)| <= 5 ticks in every run",
        all(g <= 5 for g in gaps),
        f"max gap {max(gaps):.3f} ticks over {len(gaps)} seeds",
    )


# -- 2 ----------------------------------------------------------------------


def test_criterion_2_letf_crash_directions(letf_table):
    t = letf_table
    checks = {
        "letf SellDepth up": means(t, "sell_depth", LETF)[1] > means(t, "sell_depth", LETF)[0],
        "letf Tightness down": means(t, "tightness", LETF)[1] < means(t, "tightness", LETF)[0],
        "futures Volume up": means(t, "volume", FUTURES)[1] > means(t, "volume", FUTURES)[0],
        "futures SellDepth down": means(t, "sell_depth", FUTURES)[1] < means(t, "sell_depth", FUTURES)[0],
        "futures BuyDepth up": means(t, "buy_depth", FUTURES)[1] > means(t, "buy_depth", FUTURES)[0],
        "futures Tightness up": means(t, "tightness", FUTURES)[1] > means(t, "tightness", FUTURES)[0],
        "letf Volume within 25%": rel_change(*means(t, "volume", LETF)) < 0.25,
        "letf BuyDepth within 25%": rel_change(*means(t, "buy_depth", LETF)) < 0.25,
    }
    ratios = []
    for (metric, market), ref in LETF_CRASH_REFERENCE.items():
        for ours, theirs in zip(means(t, metric, market), ref):
            ratios.append(max(ours / theirs, theirs / ours))
    checks["all 16 cells within factor 3 of reference"] = max(ratios) <= 3
    failed = [k for k, ok in checks.items() if not ok]
    summary = ", ".join(
        f"{m}.{k} {a:.1f}->{b:.1f}"
        for (k, m) in LETF_CRASH_REFERENCE
        for a, b in [means(t, k, m)]
    )
    record(
        2,
        "letf-misorder liquidity directions with arbitrage",
        not failed and t.arbitrage.disrupted == 0 and t.no_arbitrage.disrupted == 0,
        f"failed: {failed or 'none'}; worst factor {max(ratios):.2f}; {summary}",
    )


# -- 3 ----------------------------------------------------------------------


def test_criterion_3_futures_crash_directions(futures_table):
    t = futures_table
    lv = means(t, "volume", LETF)
    checks = {
        "letf Volume up >= 10x": lv[1] >= 10 * lv[0],
        "letf SellDepth down": means(t, "sell_depth", LETF)[1] < means(t, "sell_depth", LETF)[0],
        "letf Tightness up": means(t, "tightness", LETF)[1] > means(t, "tightness", LETF)[0],
        "futures Volume down": means(t, "volume", FUTURES)[1] < means(t, "volume", FUTURES)[0],
        "futures SellDepth up": means(t, "sell_depth", FUTURES)[1] > means(t, "sell_depth", FUTURES)[0],
        "futures Tightness down": means(t, "tightness", FUTURES)[1] < means(t, "tightness", FUTURES)[0],
        "futures BuyDepth within 10%": rel_change(*means(t, "buy_depth", FUTURES)) < 0.10,
    }
    failed = [k for k, ok in checks.items() if not ok]
    summary = ", ".join(
        f"{m}.{k} {a:.1f}->{b:.1f}"
        for m in (LETF, FUTURES)
        for k in ("volume", "sell_depth", "buy_depth", "tightness")
        for a, b in [means(t, k, m)]
    )
    record(3, "futures-misorder liquidity directions with arbitrage", not failed,
           f"failed: {failed or 'none'}; {summary}")


# -- 4 ----------------------------------------------------------------------


def test_criterion_4_decline_grows_with_fund_size():
    rows = s0_sweep(SimConfig(misorder="letf", seed=BASE_SEED), S0_LIST, TRIALS, arms=(True,))
    declines = [r.decline_amount for r in rows]
    sells = [r.rebalance_sell_volume for r in rows]
    ok_decline = all(b >= a for a, b in zip(declines, declines[1:]))
    ok_sells = all(b > a for a, b in zip(sells, sells[1:]))
    detail = "; ".join(
        f"S0={r.s0}: decline {r.decline_amount:.1f} (std {r.decline_std:.1f}), "
        f"sold {r.rebalance_sell_volume:.0f}, disrupted {r.disrupted}"
        for r in rows
    )
    record(4, "mean decline nondecreasing and rebalance selling increasing in S0",
           ok_decline and ok_sells, detail)


# -- 5 ----------------------------------------------------------------------


def test_criterion_5_large_fund_disrupts():
    (row,) = s0_sweep(SimConfig(misorder="letf", seed=BASE_SEED), [100000], TRIALS, arms=(True,))
    record(5, "S0=100000 disrupts a majority of seeds", row.disrupted > TRIALS / 2,
           f"{row.disrupted}/{TRIALS} disrupted")


# -- 6 ----------------------------------------------------------------------


def test_criterion_6_arbitrage_damps_decline(letf_table):
    off, on = means(letf_table, "decline_amount", LETF)
    record(6, "letf decline smaller with arbitrage (S0=10000)", on < off,
           f"off {off:.1f}, on {on:.1f}")


# -- 7 ----------------------------------------------------------------------


def test_criterion_7_engine_matches_reference():
    rng = random.Random(7)
    mismatches = 0
    for _ in range(10_000):
        ops = random_stream(rng, rng.randint(1, 200))
        book, naive, log = replay(ops, lifetime=rng.choice([None, 3, 10, 40]))
        if log != naive.log or book.best_bid() != naive.best_bid() or book.best_ask() != naive.best_ask():
            mismatches += 1
    record(7, "10000 random streams identical to naive matcher", mismatches == 0,
           f"{mismatches} mismatching streams")


# -- 8 ----------------------------------------------------------------------

SMALL = [
    "--set", "n=40", "--set", "tau_max=200", "--set", "t_c=400", "--set", "t_ms=600",
    "--set", "t_me=1200", "--set", "t_e=1600", "--set", "s0=200",
]


def test_criterion_8_byte_identical_reruns(tmp_path, capsys):
    commands = {
        "run-default": ["run", "--seed", "1"],
        "run-small": ["run", "--misorder", "futures", *SMALL],
        "table": ["table", "--trials", "2", "--workers", "2", *SMALL],
        "sweep": ["sweep", "--trials", "2", "--s0-list", "0,200", *SMALL],
        "validate": ["validate", *SMALL],
    }
    differing = []
    for name, argv in commands.items():
        outputs = []
        for rep in ("a", "b"):
            out = tmp_path / name / rep
            code = main([*argv, "--out", str(out)])
            printed = capsys.readouterr().out
            files = {f.name: f.read_bytes() for f in sorted(out.glob("*"))} if out.exists() else {}
            outputs.append((code, printed, files))
        if outputs[0] != outputs[1]:
            differing.append(name)
    record(8, "identical config and seed give byte-identical outputs", not differing,
           f"commands checked: {', '.join(commands)}; differing: {differing or 'none'}")


# -- 9 ----------------------------------------------------------------------


def _uncrossed_and_conserving(rng):
    book = OrderBook()
    for t in range(rng.randint(1, 80)):
        side = rng.choice((BUY, SELL))
        kind = MARKET if rng.random() < 0.2 else LIMIT
        qty = rng.randint(1, 5)
        order = book.new_order(side, kind, rng.randint(90, 110) if kind == LIMIT else None, qty, 0, t)
        trades = book.submit(order, t)
        resting = order.remaining if order.live else 0
        discarded = order.remaining if kind == MARKET else 0
        if sum(tr.quantity for tr in trades) + resting + discarded != qty:
            return "conservation"
        b, a = book.best_bid(), book.best_ask()
        if b is not None and a is not None and b >= a:
            return "uncrossed"
    return None


def _homogeneous(rng):
    w = [rng.uniform(0.01, 10) for _ in range(3)]
    c = math.exp(rng.uniform(-5, 5))
    args = (rng.uniform(100, 20000), rng.uniform(100, 20000), rng.uniform(100, 20000), rng.gauss(0, 0.03))
    a = NormalAgentState(*w, 1, FUTURES, rng)
    b = NormalAgentState(*(c * x for x in w), 1, FUTURES, rng)
    return abs(normal_expected_return(a, *args) - normal_expected_return(b, *args)) <= 1e-12


def _affine(rng):
    s0, lev = rng.randint(0, 200000), rng.uniform(1.2, 5)
    p, h = rng.uniform(1000, 20000), rng.uniform(1, 500)
    f = lambda x: letf_target_position(s0, lev, 10000, x)  # noqa: E731
    slope = s0 * (lev - 1) / 10000
    fd = (f(p + h) - f(p - h)) / (2 * h)
    curvature = f(p + h) - 2 * f(p) + f(p - h)
    scale = max(1.0, abs(f(p)))
    return abs(fd - slope) <= 1e-6 * max(1, slope) and abs(curvature) <= 1e-9 * scale


def _levels(rng, lo, hi):
    return [(rng.randint(lo, hi), rng.randint(1, 3)) for _ in range(rng.randint(1, 6))]


def _no_trigger_after_instant(rng):
    v = random_venue(_levels(rng, 4900, 5100), _levels(rng, 4900, 5100),
                     _levels(rng, 9900, 10100), _levels(rng, 9900, 10100))
    arb = ArbitrageAgent(10000, 2)
    arb.instant(v)
    return arb.instant_signal(v.books) == 0


def _formation_silent(rng):
    t_c = rng.randint(20, 120)
    cfg = SimConfig(
        n=rng.randint(5, 20),
        tau_max=rng.randint(1, 50),
        t_c=t_c,
        t_ms=t_c + 1,
        t_me=t_c + 40,
        t_e=t_c + 60,
        s0=rng.choice((0, 50, 500)),
        w_r=0.001,
        misorder=rng.choice(("none", "letf", "futures")),
        seed=rng.randrange(10**6),
    )
    res = run(cfg, record_events=True, halt_on_disruption=False)
    special = (-1, -2)
    return all(r[0] > t_c for r in res.events.records if r[1] == "order" and r[3] in special)


def test_criterion_9_property_suites():
    rng = random.Random(99)
    counts = {}
    failures = {}
    book_failures = [_uncrossed_and_conserving(rng) for _ in range(PROPERTY_CASES)]
    for name in ("uncrossed", "conservation"):
        counts[name] = PROPERTY_CASES
        failures[name] = book_failures.count(name)
    for name, prop in (
        ("homogeneity", _homogeneous),
        ("affinity", _affine),
        ("no-trigger", _no_trigger_after_instant),
        ("formation-silence", _formation_silent),
    ):
        counts[name] = PROPERTY_CASES
        failures[name] = sum(1 for _ in range(PROPERTY_CASES) if not prop(rng))
    record(
        9,
        "property suites on randomized inputs",
        not any(failures.values()),
        ", ".join(f"{k} {counts[k] - failures[k]}/{counts[k]}" for k in counts),
    )
