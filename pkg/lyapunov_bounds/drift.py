from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import pandas as pd

import config
from embedded_chain.chain import Caps, sample_jumps
from embedded_chain.rng import RngStream
from lyapunov_bounds.profile import LyapunovProfile, u_increment
from monte_carlo.estimator import ruin_curve
from monte_carlo.parallel import block_sizes, run_blocks
from stochastic_model.risk_model import RiskModel
from utilities.errors import ModelError
from utilities.logger import Logger

logger = Logger.get_logger()

DRIFT_COLUMNS = [
    "x",
    "drift_minus",
    "se_minus",
    "drift_plus",
    "se_plus",
    "ratio_minus",
    "ratio_plus",
    "signs_not_rejected",
    "signs_significant",
]
DELTA_START_FRACTIONS = (0.25, 0.5, 0.75, 1.0)


def _drift_block(task):
    model, profile, x, size, seed, stream_id = task
    jumps = sample_jumps(model, np.full(size, x), RngStream(seed, stream_id))
    targets = x + jumps
    sums = []
    for which in ("minus", "plus"):
        increments = u_increment(profile, which, x, targets)
        sums.append((float(increments.sum()), float((increments**2).sum())))
    return sums


def _mean_and_se(total: float, total_sq: float, n: int):
    mean = total / n
    variance = max(total_sq - n * mean**2, 0.0) / (n - 1)
    return mean, math.sqrt(variance / n)


@dataclass(frozen=True)
class DriftReport:
    table: pd.DataFrame = field(repr=False, compare=False)
    x_hat: Optional[float]
    profile: LyapunovProfile


def drift_check(
    profile: LyapunovProfile,
    model: RiskModel,
    xs: Sequence[float],
    n_draws: int,
    seed: int = 0,
    threads: Optional[int] = None,
) -> DriftReport:
    """
    Monte Carlo drift E[U_-(x + xi(x))] - U_-(x) (expected <= 0) and the same
    for U_+ (expected >= 0). signs_not_rejected: neither sign is contradicted at
    DRIFT_SIGMA standard errors. signs_significant: both signs are established at
    DRIFT_SIGMA standard errors; at large x this needs far more
    draws than default sizes give. x_hat is the smallest grid level from which
    every larger level has signs_not_rejected.
    """
    if n_draws < config.DRIFT_MIN_DRAWS:
        raise ModelError(f"drift check needs n_draws >= {config.DRIFT_MIN_DRAWS}, got {n_draws}")
    xs = sorted(float(x) for x in xs)
    if not xs or xs[0] <= 0:
        raise ModelError("drift check needs a non-empty grid of positive levels")

    tasks, per_level = [], []
    for i, x in enumerate(xs):
        sizes = block_sizes(n_draws)
        per_level.append(len(sizes))
        tasks.extend((model, profile, x, size, seed, (i << 32) + k) for k, size in enumerate(sizes))
    blocks = run_blocks(_drift_block, tasks, threads)

    rows, start = [], 0
    sigma = config.DRIFT_SIGMA
    for x, n_blocks in zip(xs, per_level):
        level_blocks = blocks[start : start + n_blocks]
        start += n_blocks
        (minus, se_minus), (plus, se_plus) = (
            _mean_and_se(
                sum(block[w][0] for block in level_blocks),
                sum(block[w][1] for block in level_blocks),
                n_draws,
            )
            for w in (0, 1)
        )
        p_x = profile.p(x)
        rows.append(
            {
                "x": x,
                "drift_minus": minus,
                "se_minus": se_minus,
                "drift_plus": plus,
                "se_plus": se_plus,
                "ratio_minus": minus / (p_x * math.exp(-profile.Q_minus(x))),
                "ratio_plus": plus / (p_x * math.exp(-profile.Q_plus(x))),
                "signs_not_rejected": bool(minus <= sigma * se_minus and plus >= -sigma * se_plus),
                "signs_significant": bool(minus <= -sigma * se_minus and plus >= sigma * se_plus),
            }
        )
        logger.debug(f"x={x}: drift_minus={minus:.3e}+-{se_minus:.1e} drift_plus={plus:.3e}+-{se_plus:.1e}")
    table = pd.DataFrame(rows, columns=DRIFT_COLUMNS)

    x_hat = None
    for row in reversed(rows):
        if not row["signs_not_rejected"]:
            break
        x_hat = row["x"]
    if x_hat is None:
        logger.warning("No grid level shows the expected drift signs; x_hat stays unset")
    else:
        logger.info(f"Drift signs hold from x_hat={x_hat}")
    return DriftReport(table=table, x_hat=x_hat, profile=profile.with_x_hat(x_hat))


def calibrate_delta(
    profile: LyapunovProfile,
    model: RiskModel,
    n_paths: int,
    caps: Optional[Caps] = None,
    seed: int = 0,
    threads: Optional[int] = None,
) -> float:
    """Smallest ruin frequency over starts x_hat * {1/4, 1/2, 3/4, 1}."""
    if profile.x_hat is None:
        raise ModelError("x_hat is unset: run drift_check first")
    starts = [fraction * profile.x_hat for fraction in DELTA_START_FRACTIONS]
    curve = ruin_curve(model, starts, n_paths, caps=caps, seed=seed, threads=threads)
    delta = min(estimate.p_hat for estimate in curve)
    if delta == 0:
        logger.warning(f"No ruin observed below x_hat={profile.x_hat}; delta=0 gives a trivial lower bound")
    logger.info(f"Calibrated delta={delta:.6g}")
    return delta


@dataclass(frozen=True)
class BoundEnvelope:
    x: float
    upper: float
    lower_shape: float
    delta: Optional[float] = None

    @property
    def lower(self) -> Optional[float]:
        return None if self.delta is None else self.delta * self.lower_shape


def bound_envelope(
    profile: LyapunovProfile, model: RiskModel, x: float, delta: Optional[float] = None
) -> BoundEnvelope:
    """upper = U_-(x) / U_-(x_hat); lower = delta U_+(x) / U_+(0)."""
    if profile.x_hat is None:
        raise ModelError("x_hat is unset: run drift_check first")
    if x <= profile.x_hat:
        logger.error(f"Envelope requested at x={x} <= x_hat={profile.x_hat}")
        raise ModelError(f"x={x} must exceed x_hat={profile.x_hat}")
    rho = model.derived_constants().rho
    if profile.rho is not None and rho is not None and not math.isclose(rho, profile.rho, rel_tol=1e-9):
        raise ModelError(f"profile rho={profile.rho} does not belong to a model with rho={rho}")
    if delta is not None and not 0 <= delta <= 1:
        raise ModelError(f"delta must lie in [0, 1], got {delta}")
    return BoundEnvelope(
        x=float(x),
        upper=profile.U_minus(x) / profile.U_minus(profile.x_hat),
        lower_shape=profile.U_plus(x) / profile.U_plus(0.0),
        delta=delta,
    )
