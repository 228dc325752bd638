"""Command line front end: ``letfsim run|table|sweep|validate``.

Exit codes: 0 success, 1 configuration error, 2 I/O error,
3 every run disrupted.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .agents import FUTURES, LETF
from .experiments import s0_sweep, scenario_table
from .output import (
    write_best_prices,
    write_events,
    write_run_report,
    write_samples,
    write_sweep,
    write_table,
    write_tick_profile,
    write_trades,
)
from .simulation import ConfigError, SimConfig, coerce, dump_config, load_config, run

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_DISRUPTED = 3

DEFAULT_S0_LIST = "0,2000,5000,10000,20000,50000"

log = logging.getLogger("letfsim")


def _parse_set(items: list[str]) -> dict[str, object]:
    out: dict[str, object] = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--set {item!r}: expected KEY=VALUE")
        key, raw = item.split("=", 1)
        name, value = coerce(key, raw)
        out[name] = value
    return out


def _s0_list(text: str) -> list[int]:
    try:
        values = [int(float(x)) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"s0_list: cannot parse {text!r}") from None
    if not values:
        raise ConfigError("s0_list: must not be empty")
    return values


def build_config(args: argparse.Namespace) -> SimConfig:
    overrides: dict[str, object] = {}
    if getattr(args, "misorder", None) is not None:
        overrides["misorder"] = args.misorder
    if getattr(args, "arbitrage", None) is not None:
        overrides["arbitrage"] = args.arbitrage == "on"
    if getattr(args, "rebalance", None) is not None:
        overrides["rebalance"] = args.rebalance == "on"
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    # --set is the most specific and wins over the named flags
    overrides.update(_parse_set(args.set))
    try:
        return load_config(args.config, overrides)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def cmd_run(args: argparse.Namespace) -> int:
    config = build_config(args)
    out = Path(args.out)
    result = run(config, record_events=True, record_samples=True)
    report = result.report
    write_samples(out / "samples.csv", result.samples, config.delta_p)
    write_run_report(out / "report.csv", report)
    write_events(out / "events.csv", result.events)
    write_trades(
        out / "trades.csv",
        sorted(
            (tr for m in (FUTURES, LETF) for tr in result.world.trades[m]),
            key=lambda tr: (tr.time, tr.market == LETF),
        ),
        config.delta_p,
    )
    (out / "config.txt").write_text(dump_config(config), encoding="utf-8")
    print(f"seed={config.seed} steps={report.steps} disrupted={report.disrupted}")
    for m in (LETF, FUTURES):
        r = report[m]
        print(
            f"{m:8s} volume={r.volume} sell_depth={_f(r.sell_depth)} buy_depth={_f(r.buy_depth)} "
            f"tightness={_f(r.tightness)} decline={_f(r.decline_amount)}"
        )
    print(f"rebalance_sell_volume={report.rebalance_sell_volume}")
    if report.disrupted:
        print(f"DISRUPTED: {result.world.disruption_reason}")
        return EXIT_DISRUPTED
    return EXIT_OK


def _f(v: float | None) -> str:
    return "NA" if v is None else f"{v:.3f}"


def cmd_table(args: argparse.Namespace) -> int:
    config = build_config(args)
    out = Path(args.out)
    table = scenario_table(config, args.trials, args.workers)
    stem = f"table_{config.misorder}"
    write_table(out / f"{stem}.csv", table)
    write_best_prices(out / f"{stem}_best_prices.csv", table)
    write_tick_profile(out / f"{stem}_tick_profile.csv", table, config.depth_ticks_letf)
    print((out / f"{stem}.csv").read_text(encoding="utf-8"), end="")
    if table.arbitrage.disrupted == args.trials and table.no_arbitrage.disrupted == args.trials:
        return EXIT_DISRUPTED
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    config = build_config(args)
    out = Path(args.out)
    s0_list = _s0_list(args.s0_list)
    arms = (config.arbitrage,) if args.arbitrage is not None else (False, True)
    rows = s0_sweep(config, s0_list, args.trials, arms, args.workers)
    path = write_sweep(out / f"sweep_{config.misorder}.csv", rows, config.seed, args.trials)
    print(path.read_text(encoding="utf-8"), end="")
    if all(r.runs == 0 for r in rows):
        return EXIT_DISRUPTED
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    config = build_config(args)
    print(dump_config(config), end="")
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key=value parameter file")
    common.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE", help="override a parameter"
    )
    common.add_argument("--seed", type=int, help="base seed")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--misorder", choices=("none", "letf", "futures"))
    common.add_argument("--arbitrage", choices=("on", "off"))
    common.add_argument("--rebalance", choices=("on", "off"))
    common.add_argument("-v", "--verbose", action="store_true")

    ensemble = argparse.ArgumentParser(add_help=False)
    ensemble.add_argument("--trials", type=int, default=30)
    ensemble.add_argument(
        "--workers", type=int, default=None, help="worker processes (default: LETFSIM_WORKERS or CPU count)"
    )

    parser = argparse.ArgumentParser(prog="letfsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="one simulation run").set_defaults(func=cmd_run)
    sub.add_parser(
        "table", parents=[common, ensemble], help="arbitrage on/off liquidity table"
    ).set_defaults(func=cmd_table)
    p = sub.add_parser("sweep", parents=[common, ensemble], help="decline vs S_0 sweep")
    p.add_argument("--s0-list", default=DEFAULT_S0_LIST)
    p.set_defaults(func=cmd_sweep)
    sub.add_parser("validate", parents=[common], help="check a config").set_defaults(
        func=cmd_validate
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    if getattr(args, "trials", 1) < 1:
        print("error: trials: must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
