"""
Command-line front end for the hybrid AN secrecy simulator.

    python cli.py verify
    python cli.py bounds --config link.cfg
    python cli.py sweep --param theta --grid 0.1,0.5,0.9 --out theta.csv
    python cli.py fig4 --trials 200 --seed 1
"""
import argparse
import logging
import os
import sys
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config import settings
from models import SweepResult, SystemConfig, TrialPlan
from services import asymptotics, montecarlo, ofdm_model, rates, reporting, verification
from services.errors import (
    AnSimError,
    ConfigValidationError,
    TrialFailure,
    UnsupportedShapeError,
)

logger = logging.getLogger("an_sim")

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_BAD_CONFIG = 2
EXIT_NUMERICAL = 3

# Common link parameters of the figure presets: N = 64, N_cp = nu = 16, 20 dB, unit tap variance.
COMMON = {
    "n": 64,
    "n_cp": 16,
    "nu": 16,
    "gamma_bob": 100.0,
    "gamma_eve": 100.0,
    "var_ab": 1.0,
    "var_ae": 1.0,
}


def _preset_config(**changes) -> SystemConfig:
    c = SystemConfig(**COMMON).with_updates(**changes)
    if c.n_a == c.n_s:
        # no spatial AN dimension: all AN goes temporal
        c = c.with_updates(alpha=0.0)
    return c


def _grid(start: float, stop: float, step: float) -> Tuple[float, ...]:
    count = int(round((stop - start) / step)) + 1
    return tuple(round(start + i * step, 10) for i in range(count))


def preset_plans(name: str, n_trials: int, seed: int, eve: str) -> List[Tuple[str, TrialPlan]]:
    """Figure presets as (series label, TrialPlan) pairs."""
    if name == "fig2":
        return [
            (f"n_a={n_a}", TrialPlan(
                base_config=_preset_config(n_a=n_a, n_b=2, n_s=2, theta=0.5, alpha=0.5),
                n_trials=n_trials, master_seed=seed, sweep_param="n_e",
                grid=tuple(float(v) for v in range(1, 9)), eve_strategy=eve,
            ))
            for n_a in (2, 4, 8)
        ]
    if name == "fig3":
        shapes = ((3, 4), (10, 2), (20, 2))
        return [
            (f"n_a={n_a},n_e={n_e}", TrialPlan(
                base_config=_preset_config(n_a=n_a, n_b=2, n_s=2, n_e=n_e, alpha=0.5),
                n_trials=n_trials, master_seed=seed, sweep_param="theta",
                grid=_grid(0.05, 1.0, 0.05), eve_strategy=eve,
            ))
            for n_a, n_e in shapes
        ]
    if name == "fig4":
        return [
            (f"n_a={n_a}", TrialPlan(
                base_config=_preset_config(n_a=n_a, n_b=2, n_s=2, n_e=2, theta=0.5),
                n_trials=n_trials, master_seed=seed, sweep_param="alpha",
                grid=_grid(0.0, 1.0, 0.1), eve_strategy=eve,
            ))
            for n_a in (10, 20)
        ]
    raise ConfigValidationError("unknown_preset", f"no preset named '{name}'")


def _parse_grid(raw: Optional[str]) -> Tuple[float, ...]:
    if raw is None or raw.strip() == "":
        return ()
    try:
        return tuple(float(v) for v in raw.split(",") if v.strip() != "")
    except ValueError:
        raise ConfigValidationError("malformed_grid", f"grid '{raw}' is not a comma-separated list of numbers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="an-sim", description="Hybrid spatial/temporal AN secrecy simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--out", help="output CSV path")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override a configuration key (repeatable)")
        p.add_argument("--trials", type=int, default=settings.default_trials)
        p.add_argument("--seed", type=int, default=settings.default_seed)
        p.add_argument("--eve", choices=rates.EVE_STRATEGIES, default=rates.WORST)

    verify = sub.add_parser("verify", help="run the invariant suite")
    verify.add_argument("--only", action="append", default=[], help="run only the named invariant")

    sweep = sub.add_parser("sweep", help="Monte Carlo sweep from flags")
    common(sweep)
    sweep.add_argument("--param", choices=montecarlo.SWEEP_PARAMS)
    sweep.add_argument("--grid", help="comma-separated sweep values")

    bounds = sub.add_parser("bounds", help="print closed-form bounds")
    common(bounds)

    for name in ("fig2", "fig3", "fig4"):
        common(sub.add_parser(name, help=f"{name} preset sweep"))
    return parser


def _open_out(path: Optional[str]):
    if path is None:
        return None
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    return open(path, "w", encoding="utf-8", newline="")


def _emit(text_writer, path: Optional[str]) -> None:
    handle = _open_out(path)
    try:
        text_writer(handle or sys.stdout)
    finally:
        if handle is not None:
            handle.close()
    if path:
        logger.info(f"[CLI] wrote {path}")


def _cmd_verify(args) -> int:
    results = verification.run_invariants(args.only or None)
    failures = 0
    for name, failure in results:
        if failure is None:
            print(f"PASS {name}")
        else:
            failures += 1
            print(f"FAIL {name}: {failure}")
    print(f"{len(results) - failures}/{len(results)} invariants passed")
    return EXIT_VERIFY_FAILED if failures else EXIT_OK


def _cmd_bounds(args) -> int:
    c = ofdm_model.load_config(args.config, args.overrides)
    report = asymptotics.bound_report(c)
    _emit(lambda stream: reporting.write_bounds(stream, report, c.to_dict()), args.out)
    return EXIT_OK


def _run_plans(plans: Sequence[Tuple[str, TrialPlan]]) -> List[Tuple[str, SweepResult]]:
    runner_threads = settings.worker_threads
    logger.info(f"[CLI] running {len(plans)} series on {runner_threads} threads")
    return [(label, montecarlo.run_sweep(plan, threads=runner_threads)) for label, plan in plans]


def _cmd_sweep(args) -> int:
    c = ofdm_model.load_config(args.config, args.overrides)
    grid = _parse_grid(args.grid)
    if args.param is None and grid:
        raise ConfigValidationError("grid_without_param", "--grid needs --param")
    plan = TrialPlan(
        base_config=c, n_trials=args.trials, master_seed=args.seed,
        sweep_param=args.param, grid=grid, eve_strategy=args.eve,
    )
    results = _run_plans([("sweep", plan)])
    _emit(lambda stream: reporting.write_sweeps(stream, results), args.out)
    return EXIT_OK


def _cmd_preset(args) -> int:
    plans = preset_plans(args.command, args.trials, args.seed, args.eve)
    if args.config or args.overrides:
        plans = [
            (label, TrialPlan(
                base_config=ofdm_model.load_config(args.config, args.overrides, base=plan.base_config),
                n_trials=plan.n_trials, master_seed=plan.master_seed, sweep_param=plan.sweep_param,
                grid=plan.grid, eve_strategy=plan.eve_strategy,
            ))
            for label, plan in plans
        ]
    out = args.out or os.path.join(settings.out_dir, f"{args.command}.csv")
    results = _run_plans(plans)
    _emit(lambda stream: reporting.write_sweeps(stream, results), out)
    return EXIT_OK


COMMANDS = {
    "verify": _cmd_verify,
    "bounds": _cmd_bounds,
    "sweep": _cmd_sweep,
    "fig2": _cmd_preset,
    "fig3": _cmd_preset,
    "fig4": _cmd_preset,
}


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, TrialFailure):
        exc = exc.cause
    if isinstance(exc, (ConfigValidationError, UnsupportedShapeError)):
        return EXIT_BAD_CONFIG
    return EXIT_NUMERICAL


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one subcommand.

    Returns:
        0 on success, 1 on verify failures, 2 on a configuration error,
        3 on a numerical failure
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, settings.log_level.upper(), logging.INFO),
        format="%(asctime)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )
    np.seterr(all="ignore")
    try:
        return COMMANDS[args.command](args)
    except AnSimError as exc:
        code = _exit_code(exc)
        logger.error(f"[CLI] {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return code
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        logger.error(f"[CLI] numerical failure: {exc}")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
