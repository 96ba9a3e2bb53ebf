from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

import config
from embedded_chain.chain import Caps, simulate_block
from monte_carlo.parallel import path_blocks, run_blocks
from stochastic_model.risk_model import RiskModel
from utilities.errors import ModelError, NumericalError
from utilities.logger import Logger

logger = Logger.get_logger()

CSV_COLUMNS = [
    "x",
    "p_hat",
    "half_width",
    "n_paths",
    "censored_cap",
    "censored_horizon",
    "p_hat_pessimistic",
]


@dataclass(frozen=True)
class RuinEstimate:
    x: float
    p_hat: float
    half_width: float
    n_paths: int
    censored_cap: int
    censored_horizon: int
    p_hat_pessimistic: float
    ruined: int
    ci_low: float
    ci_high: float
    exact_ci: bool = False

    @classmethod
    def from_counts(
        cls,
        x: float,
        n_paths: int,
        ruined: int,
        censored_cap: int,
        censored_horizon: int,
        exact_ci: bool = False,
    ) -> "RuinEstimate":
        if n_paths < 1:
            raise ModelError(f"n_paths must be >= 1, got {n_paths}")
        if ruined + censored_cap + censored_horizon > n_paths:
            raise ModelError("outcome counts exceed n_paths")
        p_hat = ruined / n_paths
        half_width = config.MC_CI_Z * math.sqrt(p_hat * (1.0 - p_hat) / n_paths)
        if exact_ci:
            ci_low, ci_high = clopper_pearson(ruined, n_paths)
        else:
            ci_low, ci_high = max(p_hat - half_width, 0.0), min(p_hat + half_width, 1.0)
        return cls(
            x=float(x),
            p_hat=p_hat,
            half_width=half_width,
            n_paths=int(n_paths),
            censored_cap=int(censored_cap),
            censored_horizon=int(censored_horizon),
            p_hat_pessimistic=(ruined + censored_horizon) / n_paths,
            ruined=int(ruined),
            ci_low=ci_low,
            ci_high=ci_high,
            exact_ci=exact_ci,
        )

    @property
    def stderr(self) -> float:
        return self.half_width / config.MC_CI_Z

    def merge(self, other: "RuinEstimate") -> "RuinEstimate":
        """Pool two estimates at the same level drawn from disjoint streams."""
        if not math.isclose(self.x, other.x):
            raise ModelError(f"cannot merge estimates at x={self.x} and x={other.x}")
        return RuinEstimate.from_counts(
            self.x,
            self.n_paths + other.n_paths,
            self.ruined + other.ruined,
            self.censored_cap + other.censored_cap,
            self.censored_horizon + other.censored_horizon,
            exact_ci=self.exact_ci or other.exact_ci,
        )

    def as_row(self) -> Dict[str, float]:
        return {column: getattr(self, column) for column in CSV_COLUMNS}


def clopper_pearson(k: int, n: int, level: float = config.MC_CI_LEVEL) -> Tuple[float, float]:
    alpha = 1.0 - level
    low = 0.0 if k == 0 else float(stats.beta.ppf(alpha / 2, k, n - k + 1))
    high = 1.0 if k == n else float(stats.beta.ppf(1 - alpha / 2, k + 1, n - k))
    return low, high


def _ruin_block(task) -> Tuple[int, int, int]:
    model, x, size, caps, seed, first_stream = task
    result = simulate_block(model, x, size, caps, seed, first_stream)
    return result.ruined, result.hit_cap + result.escaped, result.horizon


def _ruin_tasks(model, x, n_paths, caps, seed, stream_base, block_size):
    return [
        (model, float(x), size, caps, seed, stream_base + start)
        for start, size in path_blocks(n_paths, block_size)
    ]


def estimate_ruin(
    model: RiskModel,
    x: float,
    n_paths: int,
    caps: Optional[Caps] = None,
    seed: int = 0,
    threads: Optional[int] = None,
    stream_base: int = 0,
    exact_ci: bool = False,
    block_size: Optional[int] = None,
) -> RuinEstimate:
    """
    Ruin frequency over n_paths paths started at x; path i draws from
    RngStream(seed, stream_base + i), so neither block_size nor threads change
    the estimate. Escaped paths are reported with the cap-censored ones.
    """
    if n_paths < 1:
        raise ModelError(f"n_paths must be >= 1, got {n_paths}")
    if x < 0:
        raise ModelError(f"initial reserve must be >= 0, got {x}")
    caps = caps or Caps.default_for(x)
    tasks = _ruin_tasks(model, x, n_paths, caps, seed, stream_base, block_size)
    counts = run_blocks(_ruin_block, tasks, threads)
    estimate = _aggregate(x, n_paths, counts, exact_ci)
    logger.info(
        f"x={x}: p_hat={estimate.p_hat:.6g} +- {estimate.half_width:.2g} "
        f"over {n_paths} paths (cap={estimate.censored_cap}, horizon={estimate.censored_horizon})"
    )
    if estimate.censored_horizon:
        logger.warning(
            f"x={x}: {estimate.censored_horizon} paths exhausted {caps.max_steps} steps"
        )
    return estimate


def _aggregate(x, n_paths, counts, exact_ci) -> RuinEstimate:
    ruined, capped, horizon = (sum(column) for column in zip(*counts))
    return RuinEstimate.from_counts(x, n_paths, ruined, capped, horizon, exact_ci)


def ruin_curve(
    model: RiskModel,
    xs: Sequence[float],
    n_paths: int,
    caps: Optional[Caps] = None,
    seed: int = 0,
    threads: Optional[int] = None,
    exact_ci: bool = False,
    block_size: Optional[int] = None,
) -> List[RuinEstimate]:
    """estimate_ruin over a grid; path j of grid point i draws from stream (i << 32) + j."""
    if n_paths < 1:
        raise ModelError(f"n_paths must be >= 1, got {n_paths}")
    per_level = []
    tasks = []
    for i, x in enumerate(xs):
        level_caps = caps or Caps.default_for(x)
        level_tasks = _ruin_tasks(model, x, n_paths, level_caps, seed, i << 32, block_size)
        per_level.append(len(level_tasks))
        tasks.extend(level_tasks)
    counts = run_blocks(_ruin_block, tasks, threads)

    curve, start = [], 0
    for x, n_tasks in zip(xs, per_level):
        curve.append(_aggregate(x, n_paths, counts[start : start + n_tasks], exact_ci))
        start += n_tasks
    logger.info(f"Ruin curve over {len(curve)} levels done")
    return curve


def curve_frame(curve: Sequence[RuinEstimate]) -> pd.DataFrame:
    return pd.DataFrame([estimate.as_row() for estimate in curve], columns=CSV_COLUMNS)


@dataclass(frozen=True)
class DecayFit:
    rho_hat: float
    stderr: float
    intercept: float
    n_points: int


def decay_exponent_fit(curve: Sequence[RuinEstimate]) -> DecayFit:
    """
    Slope of log p_hat against log(1 + x), weighted by the inverse squared
    relative CI width; rho_hat is minus the slope.
    """
    positive = [e for e in curve if e.p_hat > 0]
    if not positive:
        logger.error("Decay fit on a curve without ruin events")
        raise NumericalError("no ruin observed")
    if len(positive) < 4:
        raise ModelError(
            f"decay fit needs at least 4 grid points with p_hat > 0, got {len(positive)}"
        )
    xs = np.log1p([e.x for e in positive])
    ys = np.log([e.p_hat for e in positive])
    # relative standard error of log p_hat; floored for exact or saturated points
    rel_sd = np.array(
        [max(e.stderr, 1.0 / e.n_paths) / e.p_hat for e in positive]
    )
    coeffs, cov = np.polyfit(xs, ys, 1, w=1.0 / rel_sd, cov="unscaled")
    slope, intercept = coeffs
    return DecayFit(
        rho_hat=float(-slope),
        stderr=float(math.sqrt(max(cov[0, 0], 0.0))),
        intercept=float(intercept),
        n_points=len(positive),
    )
