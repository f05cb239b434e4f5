"""
Monte Carlo Secrecy Simulation
Seeded, thread-parallel averaging of per-realization rate reports and
parameter sweeps with matching closed-form bounds.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence

import numpy as np

from models import PointSummary, RateReport, SweepResult, SystemConfig, TrialPlan

from . import an_design, rates
from .asymptotics import bound_report
from .errors import AnSimError, ConfigValidationError, TrialFailure
from .ofdm_model import build_time_ops, db_to_linear, draw_channel, validate_config

logger = logging.getLogger(__name__)

SWEEP_PARAMS = ("n_e", "n_a", "theta", "alpha", "gamma_db")
INT_PARAMS = ("n_e", "n_a")


def trial_seeds(master_seed: int, trial: int) -> Dict[str, int]:
    """
    Independent seeds of one trial, derived from (master_seed, trial) only.

    Returns:
        Dict with "channel" and "precoder" seeds
    """
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(trial),))
    channel, precoder = seq.generate_state(2, dtype=np.uint64)
    return {"channel": int(channel), "precoder": int(precoder)}


def run_trial(c: SystemConfig, master_seed: int, trial: int, eve_strategy: str = rates.WORST) -> RateReport:
    """
    Rate report of one channel realization.

    The temporal AN precoder is the generic null space of Bob's receive
    chain, evaluated through its projector.
    """
    seeds = trial_seeds(master_seed, trial)
    r = draw_channel(c, seeds["channel"])
    ops = build_time_ops(r, c)
    p = an_design.design_precoders(r, ops, c, route=an_design.PROJECTOR)
    s = an_design.link_power_splits(c)
    return rates.secrecy_report(r, ops, p, s, c, eve_strategy)


def aggregate(reports: Sequence[RateReport]) -> Dict[str, Dict[str, float]]:
    """
    Mean and standard error of every rate field.

    Sums are exactly rounded (math.fsum) so the result does not depend on
    the order reports were produced in.
    """
    n = len(reports)
    means: Dict[str, float] = {}
    stderrs: Dict[str, float] = {}
    for name in RateReport.RATE_FIELDS:
        values = [getattr(rep, name) for rep in reports]
        mean = math.fsum(values) / n
        means[name] = mean
        if n > 1:
            var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
            stderrs[name] = math.sqrt(var / n)
        else:
            stderrs[name] = 0.0
    return {"means": means, "stderrs": stderrs}


class MonteCarloRunner:
    """
    Runs Monte Carlo points and sweeps over a thread pool.
    """

    def __init__(self, threads: int = 1, eve_strategy: str = rates.WORST):
        """
        Initialize the runner.

        Args:
            threads: Worker threads for independent trials
            eve_strategy: Eve strategy used for r_eve and the secrecy rate
        """
        if eve_strategy not in rates.EVE_STRATEGIES:
            raise ConfigValidationError("unknown_eve_strategy", f"'{eve_strategy}' is not one of {rates.EVE_STRATEGIES}")
        self.threads = max(int(threads), 1)
        self.eve_strategy = eve_strategy

    def _trial(self, c: SystemConfig, master_seed: int, trial: int) -> RateReport:
        try:
            return run_trial(c, master_seed, trial, self.eve_strategy)
        except AnSimError as exc:
            raise TrialFailure(trial, exc) from exc

    def run_point(self, c: SystemConfig, n_trials: int, master_seed: int, value: Optional[float] = None) -> PointSummary:
        """
        Average n_trials independent realizations of c.

        Args:
            c: System configuration
            n_trials: Number of channel realizations
            master_seed: Seed every trial seed is derived from
            value: Sweep value recorded on the row

        Returns:
            PointSummary with means/stderrs in bits/block and the BoundReport of c

        Raises:
            ConfigValidationError: If c or n_trials is invalid
            TrialFailure: If a trial fails; carries the trial index
        """
        validate_config(c)
        if n_trials < 1:
            raise ConfigValidationError("trials_positive", f"n_trials must be at least 1, got {n_trials}")
        trials = range(n_trials)
        if self.threads == 1:
            reports = [self._trial(c, master_seed, t) for t in trials]
        else:
            with ThreadPoolExecutor(max_workers=self.threads) as executor:
                reports = list(executor.map(lambda t: self._trial(c, master_seed, t), trials))
        stats = aggregate(reports)
        summary = PointSummary(
            value=value,
            config=c,
            means=stats["means"],
            stderrs=stats["stderrs"],
            n_trials=n_trials,
            master_seed=master_seed,
            bounds=bound_report(c),
        )
        logger.info(
            f"[MONTECARLO] point value={value} trials={n_trials} "
            f"secrecy={summary.mean_shz('r_sec_clipped'):.4f} b/s/Hz"
        )
        return summary

    def run_sweep(self, plan: TrialPlan) -> SweepResult:
        """
        One run_point per grid value with a shared master seed.

        Raises:
            ConfigValidationError: If the plan or any grid point is invalid
        """
        configs = plan_configs(plan)
        rows: List[PointSummary] = []
        for i, (value, c) in enumerate(configs):
            logger.info(f"[MONTECARLO] sweep {plan.sweep_param or 'point'} {i + 1}/{len(configs)}")
            rows.append(self.run_point(c, plan.n_trials, plan.master_seed, value))
        return SweepResult(sweep_param=plan.sweep_param, rows=tuple(rows))


def apply_sweep_value(c: SystemConfig, param: str, value: float) -> SystemConfig:
    if param in INT_PARAMS:
        if float(value) != int(value):
            raise ConfigValidationError("malformed_value", f"{param}={value} must be an integer")
        return c.with_updates(**{param: int(value)})
    if param == "gamma_db":
        gamma = db_to_linear(float(value))
        return c.with_updates(gamma_bob=gamma, gamma_eve=gamma)
    return c.with_updates(**{param: float(value)})


def plan_configs(plan: TrialPlan) -> List[tuple]:
    """Resolve and validate the (value, config) pairs of a plan."""
    if plan.n_trials < 1:
        raise ConfigValidationError("trials_positive", f"n_trials must be at least 1, got {plan.n_trials}")
    if plan.sweep_param is None:
        return [(None, validate_config(plan.base_config))]
    if plan.sweep_param not in SWEEP_PARAMS:
        raise ConfigValidationError("unknown_sweep_param", f"'{plan.sweep_param}' is not one of {SWEEP_PARAMS}")
    if len(plan.grid) == 0:
        raise ConfigValidationError("empty_grid", f"sweep over {plan.sweep_param} has no grid values")
    return [
        (value, validate_config(apply_sweep_value(plan.base_config, plan.sweep_param, value)))
        for value in plan.grid
    ]


def run_point(
    c: SystemConfig,
    n_trials: int,
    master_seed: int,
    eve_strategy: str = rates.WORST,
    threads: int = 1,
) -> PointSummary:
    """Convenience function for a single Monte Carlo point."""
    return MonteCarloRunner(threads, eve_strategy).run_point(c, n_trials, master_seed)


def run_sweep(plan: TrialPlan, threads: int = 1) -> SweepResult:
    """Convenience function for a TrialPlan sweep."""
    return MonteCarloRunner(threads, plan.eve_strategy).run_sweep(plan)
