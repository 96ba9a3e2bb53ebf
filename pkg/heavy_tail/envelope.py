from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from embedded_chain.chain import Caps
from heavy_tail.karamata import heavy_regime, karamata_integral, x2_tail
from monte_carlo.estimator import RuinEstimate, ruin_curve
from stochastic_model.risk_model import RiskModel
from utilities.errors import ModelError
from utilities.logger import Logger

logger = Logger.get_logger()

HEAVY_COLUMNS = [
    "x",
    "psi_hat",
    "psi_tilde_hat",
    "envelope_lo",
    "envelope_hi",
    "karamata",
    "x2_tail",
]


@dataclass(frozen=True)
class HeavyCalibration:
    """psi(x) is bracketed by c_lower and c_upper times x^2 P{xi > x}."""

    c_lower: float
    c_upper: float
    anchors: Tuple[float, ...]
    inflation: float


def calibrate_heavy_envelope(
    model: RiskModel,
    anchors: Sequence[float],
    n_paths: int,
    caps: Optional[Caps] = None,
    seed: int = 0,
    threads: Optional[int] = None,
    inflation: float = 2.0,
) -> HeavyCalibration:
    """
    Constants from MC confidence limits at the anchor levels, divided and
    multiplied by `inflation` to cover the slowly varying factor between anchors.
    """
    heavy_regime(model)
    if len(anchors) < 2:
        raise ModelError("heavy envelope calibration needs two anchor levels")
    if inflation < 1:
        raise ModelError(f"inflation must be >= 1, got {inflation}")
    curve = ruin_curve(model, anchors, n_paths, caps=caps, seed=seed, threads=threads, exact_ci=True)
    lows, highs = [], []
    for estimate in curve:
        shape = x2_tail(model.claims, estimate.x)
        lows.append(estimate.ci_low / shape)
        highs.append(estimate.ci_high / shape)
    calibration = HeavyCalibration(
        c_lower=min(lows) / inflation,
        c_upper=max(highs) * inflation,
        anchors=tuple(float(a) for a in anchors),
        inflation=inflation,
    )
    logger.info(f"Heavy envelope constants: {calibration.c_lower:.4g} .. {calibration.c_upper:.4g}")
    return calibration


def heavy_envelope(model: RiskModel, x: float, calibration: HeavyCalibration) -> Tuple[float, float]:
    heavy_regime(model)
    shape = x2_tail(model.claims, x)
    return calibration.c_lower * shape, calibration.c_upper * shape


def heavy_table(
    model: RiskModel,
    curve: Sequence[RuinEstimate],
    calibration: HeavyCalibration,
    psi_tilde: Optional[Sequence[float]] = None,
) -> pd.DataFrame:
    """
    One row per level. psi_tilde defaults to zeros: the truncated chain never
    leaves [0, inf) from a non-negative start.
    """
    psi_tilde = np.zeros(len(curve)) if psi_tilde is None else np.asarray(psi_tilde, dtype=float)
    rows = []
    for estimate, tilde in zip(curve, psi_tilde):
        lower, upper = heavy_envelope(model, estimate.x, calibration)
        rows.append(
            {
                "x": estimate.x,
                "psi_hat": estimate.p_hat,
                "psi_tilde_hat": float(tilde),
                "envelope_lo": lower,
                "envelope_hi": upper,
                "karamata": karamata_integral(model.claims, estimate.x),
                "x2_tail": x2_tail(model.claims, estimate.x),
            }
        )
    return pd.DataFrame(rows, columns=HEAVY_COLUMNS)
