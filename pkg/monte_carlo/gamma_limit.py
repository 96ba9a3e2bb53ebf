from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from embedded_chain.chain import RUINED, Caps, simulate_block
from monte_carlo.parallel import path_blocks, run_blocks
from stochastic_model.premium_rate import CriticalPower
from stochastic_model.risk_model import RiskModel
from utilities.errors import ModelError, NumericalError
from utilities.logger import Logger

logger = Logger.get_logger()

DEFAULT_PROBS = (0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95)


def _survivor_block(task) -> np.ndarray:
    """R_n of the paths that are not ruined within n steps (no level cap)."""
    model, x0, size, n, seed, first_stream = task
    result = simulate_block(model, x0, size, Caps(max_steps=n, level_cap=math.inf), seed, first_stream)
    return result.final_states[result.outcome_codes != RUINED]


def _survivors(model, x0, n, n_paths, seed, threads) -> np.ndarray:
    tasks = [
        (model, x0, size, n, seed, start) for start, size in path_blocks(n_paths)
    ]
    blocks = run_blocks(_survivor_block, tasks, threads)
    survivors = np.concatenate(blocks) if blocks else np.empty(0)
    if survivors.size < 2:
        raise NumericalError(f"only {survivors.size} of {n_paths} paths survived {n} steps")
    logger.info(f"{survivors.size} of {n_paths} paths survived {n} steps")
    return survivors


@dataclass(frozen=True)
class GammaLimitResult:
    mean: float
    variance: float
    reference_mean: float
    reference_variance: float
    n_survivors: int
    quantiles: pd.DataFrame = field(repr=False, compare=False)


def gamma_limit_test(
    model: RiskModel,
    n: int,
    n_paths: int,
    seed: int = 0,
    threads: Optional[int] = None,
    probs: Sequence[float] = DEFAULT_PROBS,
    x0: float = 1.0,
) -> GammaLimitResult:
    """
    R_n^2 / n over paths that survive n steps from x0, against the Gamma law with
    mean 2 mu + b and variance (2 mu + b) 2 b.
    """
    constants = model.derived_constants()
    if constants.b <= 0:
        raise ModelError("Gamma limit needs non-degenerate jumps (b > 0)")
    if constants.rho is None or constants.rho <= 0:
        raise ModelError(f"Gamma limit needs a transient inverse-rate model, rho={constants.rho}")
    if n < 1 or n_paths < 2:
        raise ModelError("Gamma limit needs n >= 1 and n_paths >= 2")

    survivors = _survivors(model, x0, n, n_paths, seed, threads)
    scaled = survivors**2 / n
    b, mu = constants.b, constants.mu_drift
    reference_mean = 2 * mu + b
    reference = stats.gamma(a=reference_mean / (2 * b), scale=2 * b)
    probs = np.asarray(probs, dtype=float)
    quantiles = pd.DataFrame(
        {
            "prob": probs,
            "empirical": np.quantile(scaled, probs),
            "reference": reference.ppf(probs),
        }
    )
    return GammaLimitResult(
        mean=float(scaled.mean()),
        variance=float(scaled.var(ddof=1)),
        reference_mean=reference_mean,
        reference_variance=reference_mean * 2 * b,
        n_survivors=int(survivors.size),
        quantiles=quantiles,
    )


@dataclass(frozen=True)
class PowerGrowthResult:
    mean: float
    stderr: float
    reference: float
    n_survivors: int


def power_growth_test(
    model: RiskModel,
    n: int,
    n_paths: int,
    seed: int = 0,
    threads: Optional[int] = None,
    x0: float = 1.0,
) -> PowerGrowthResult:
    """Law of large numbers for rates v_c + theta / z^alpha: R_n^{1+alpha} / n -> (1+alpha) theta E tau."""
    if not isinstance(model.rate, CriticalPower):
        raise ModelError("power growth test needs a critical_power rate")
    alpha = model.rate.alpha
    survivors = _survivors(model, x0, n, n_paths, seed, threads)
    scaled = survivors ** (1 + alpha) / n
    return PowerGrowthResult(
        mean=float(scaled.mean()),
        stderr=float(scaled.std(ddof=1) / math.sqrt(scaled.size)),
        reference=(1 + alpha) * model.derived_constants().mu_drift,
        n_survivors=int(survivors.size),
    )
